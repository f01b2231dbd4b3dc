#pragma once

// Uniform tensor grid on [-Lx, Lx] x [0, Ly], nodal fields, and the
// second-order stencils used by the solver and the diagnostics.

#include "gbulab/error.hpp"
#include "gbulab/parallel.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace gbulab {

struct Grid2D {
    double Lx = 0.0;
    double Ly = 0.0;
    int nx = 0;
    int ny = 0;
    double hx = 0.0;
    double hy = 0.0;

    /// Node abscissa. Written so that x(center) == 0 and x(nx-1-i) == -x(i) exactly.
    double x(int i) const { return Lx * static_cast<double>(2 * i - (nx - 1)) / (nx - 1); }
    double y(int j) const { return Ly * static_cast<double>(j) / (ny - 1); }
    int center() const { return (nx - 1) / 2; }
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }

    friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

inline Grid2D make_grid(double Lx, double Ly, int nx, int ny) {
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw DomainError("grid: Lx and Ly must be > 0");
    if (nx < 5 || ny < 5) throw DomainError("grid: nx and ny must be >= 5");
    if (nx % 2 == 0) throw DomainError("grid: nx must be odd so that x = 0 is a node");
    return Grid2D{Lx, Ly, nx, ny, 2.0 * Lx / (nx - 1), Ly / (ny - 1)};
}

/// Nodal values, row-major with y outer: values[j * nx + i].
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid2D& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}
    ScalarField(const Grid2D& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
        if (values_.size() != g.size()) throw DomainError("field: value count must equal nx*ny");
    }

    template <class F>
    static ScalarField from_function(const Grid2D& g, F&& f) {
        ScalarField out(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) out(i, j) = f(g.x(i), g.y(j));
        return out;
    }

    const Grid2D& grid() const { return grid_; }
    double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
    double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Index of the first non-finite value, or -1.
    long first_non_finite() const {
        for (std::size_t k = 0; k < values_.size(); ++k)
            if (!std::isfinite(values_[k])) return static_cast<long>(k);
        return -1;
    }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    Grid2D grid_{};
    std::vector<double> values_;
};

namespace detail {

inline void require_finite(const ScalarField& f, const char* who) {
    const long k = f.first_non_finite();
    if (k >= 0) {
        const int nx = f.grid().nx;
        throw NumericError(std::string(who) + ": non-finite value at node (i=" +
                           std::to_string(k % nx) + ", j=" + std::to_string(k / nx) + ")");
    }
}

} // namespace detail

/// 5-point Laplacian on interior nodes; boundary nodes are set to 0.
inline ScalarField laplacian(const ScalarField& f) {
    detail::require_finite(f, "laplacian");
    const Grid2D& g = f.grid();
    ScalarField out(g);
    const double ihx2 = 1.0 / (g.hx * g.hx);
    const double ihy2 = 1.0 / (g.hy * g.hy);
    for_rows(1, g.ny - 1, [&](int j) {
        for (int i = 1; i < g.nx - 1; ++i) {
            const double c = f(i, j);
            // Neighbour sums first: a + b == b + a keeps the stencil mirror-exact.
            out(i, j) = ((f(i - 1, j) + f(i + 1, j)) - 2.0 * c) * ihx2 +
                        ((f(i, j - 1) + f(i, j + 1)) - 2.0 * c) * ihy2;
        }
    });
    return out;
}

struct Gradient {
    ScalarField fx;
    ScalarField fy;
};

/// Central differences inside, second-order one-sided differences on the edges.
inline Gradient gradient(const ScalarField& f) {
    detail::require_finite(f, "gradient");
    const Grid2D& g = f.grid();
    Gradient out{ScalarField(g), ScalarField(g)};
    const double i2hx = 1.0 / (2.0 * g.hx);
    const double i2hy = 1.0 / (2.0 * g.hy);
    const int nx = g.nx, ny = g.ny;
    for_rows(0, ny, [&](int j) {
        for (int i = 0; i < nx; ++i) {
            double dx;
            if (i == 0)
                dx = (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) * i2hx;
            else if (i == nx - 1)
                dx = (3.0 * f(nx - 1, j) - 4.0 * f(nx - 2, j) + f(nx - 3, j)) * i2hx;
            else
                dx = (f(i + 1, j) - f(i - 1, j)) * i2hx;
            double dy;
            if (j == 0)
                dy = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) * i2hy;
            else if (j == ny - 1)
                dy = (3.0 * f(i, ny - 1) - 4.0 * f(i, ny - 2) + f(i, ny - 3)) * i2hy;
            else
                dy = (f(i, j + 1) - f(i, j - 1)) * i2hy;
            out.fx(i, j) = dx;
            out.fy(i, j) = dy;
        }
    });
    return out;
}

/// Bilinear interpolation.
inline double sample(const ScalarField& f, double x, double y) {
    const Grid2D& g = f.grid();
    if (!(x >= -g.Lx && x <= g.Lx && y >= 0.0 && y <= g.Ly))
        throw DomainError("sample: point outside the grid rectangle");
    const double sx = (x + g.Lx) / g.hx;
    const double sy = y / g.hy;
    int i = std::min(static_cast<int>(std::floor(sx)), g.nx - 2);
    int j = std::min(static_cast<int>(std::floor(sy)), g.ny - 2);
    const double ax = sx - i;
    const double ay = sy - j;
    return (1.0 - ax) * (1.0 - ay) * f(i, j) + ax * (1.0 - ay) * f(i + 1, j) +
           (1.0 - ax) * ay * f(i, j + 1) + ax * ay * f(i + 1, j + 1);
}

// ---------------------------------------------------------------------------
// Serialization

inline void write_csv(const ScalarField& f, std::ostream& os) {
    const Grid2D& g = f.grid();
    os << "x,y,value\n";
    os << std::setprecision(17);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) os << g.x(i) << ',' << g.y(j) << ',' << f(i, j) << '\n';
}

inline void write_csv(const ScalarField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError(path, "cannot open for writing");
    write_csv(f, os);
}

/// Binary snapshot: 32-byte little-endian header then nx*ny float64 values.
///   [0,4)  magic "GBL1"   [4,6) nx u16   [6,8) ny u16
///   [8,16) Lx f64         [16,24) Ly f64  [24,32) time f64
inline constexpr std::array<char, 4> kSnapshotMagic{'G', 'B', 'L', '1'};
inline constexpr std::size_t kSnapshotHeaderBytes = 32;

namespace detail {

template <class T>
void put_le(std::string& buf, T v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(bytes[k], bytes[sizeof(T) - 1 - k]);
    buf.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const char* p) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(bytes[k], bytes[sizeof(T) - 1 - k]);
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

} // namespace detail

inline std::string encode_snapshot(const ScalarField& f, double time) {
    const Grid2D& g = f.grid();
    if (g.nx > 65535 || g.ny > 65535) throw DomainError("snapshot: node counts must fit in 16 bits");
    std::string buf;
    buf.reserve(kSnapshotHeaderBytes + 8 * g.size());
    buf.append(kSnapshotMagic.data(), kSnapshotMagic.size());
    detail::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(g.nx));
    detail::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(g.ny));
    detail::put_le<double>(buf, g.Lx);
    detail::put_le<double>(buf, g.Ly);
    detail::put_le<double>(buf, time);
    for (double v : f.values()) detail::put_le<double>(buf, v);
    return buf;
}

struct Snapshot {
    ScalarField field;
    double time = 0.0;
};

inline Snapshot decode_snapshot(const std::string& buf, const std::string& name = "<memory>") {
    if (buf.size() < kSnapshotHeaderBytes) throw IoError(name, "truncated snapshot header");
    if (std::memcmp(buf.data(), kSnapshotMagic.data(), 4) != 0) throw IoError(name, "bad snapshot magic");
    const int nx = detail::get_le<std::uint16_t>(buf.data() + 4);
    const int ny = detail::get_le<std::uint16_t>(buf.data() + 6);
    const double Lx = detail::get_le<double>(buf.data() + 8);
    const double Ly = detail::get_le<double>(buf.data() + 16);
    const double time = detail::get_le<double>(buf.data() + 24);
    Grid2D g;
    try {
        g = make_grid(Lx, Ly, nx, ny);
    } catch (const DomainError& e) {
        throw IoError(name, std::string("invalid snapshot grid: ") + e.what());
    }
    if (buf.size() != kSnapshotHeaderBytes + 8 * g.size())
        throw IoError(name, "snapshot payload size mismatch (truncated or padded)");
    std::vector<double> values(g.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] = detail::get_le<double>(buf.data() + kSnapshotHeaderBytes + 8 * k);
    ScalarField f(g, std::move(values));
    if (f.first_non_finite() >= 0) throw IoError(name, "non-finite value in snapshot");
    return {std::move(f), time};
}

inline void write_snapshot(const ScalarField& f, double time, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(path, "cannot open for writing");
    const std::string buf = encode_snapshot(f, time);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError(path, "write failed");
}

inline Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(path, "cannot open snapshot");
    std::ostringstream ss;
    ss << is.rdbuf();
    return decode_snapshot(ss.str(), path);
}

} // namespace gbulab
