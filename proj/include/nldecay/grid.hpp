#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "nldecay/error.hpp"

namespace nldecay {

using Point = std::array<double, 3>;

/// Uniform periodic grid on the box [-L, L)^N with n points per axis.
/// Point i along an axis sits at x = -L + i h, h = 2L / n.
class GridSpec {
public:
    GridSpec(int dim, double half_width, std::size_t points_per_axis)
        : dim_(dim), half_width_(half_width), n_(points_per_axis) {
        require(dim >= 1 && dim <= 3, ErrorKind::invalid_parameter, "grid dimension must be 1, 2 or 3");
        require(std::isfinite(half_width) && half_width > 0.0, ErrorKind::invalid_parameter,
                "grid half width must be positive");
        require(n_ >= 8 && (n_ & (n_ - 1)) == 0, ErrorKind::invalid_parameter,
                "points per axis must be a power of two >= 8");
        spacing_ = 2.0 * half_width_ / static_cast<double>(n_);
        size_ = 1;
        for (int a = 0; a < dim_; ++a) size_ *= n_;
    }

    int dim() const noexcept { return dim_; }
    double half_width() const noexcept { return half_width_; }
    std::size_t points_per_axis() const noexcept { return n_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return size_; }
    /// h^N, the quadrature weight of one cell.
    double cell_volume() const noexcept { return std::pow(spacing_, dim_); }

    double coordinate(std::size_t axis_index) const noexcept {
        return -half_width_ + static_cast<double>(axis_index) * spacing_;
    }

    /// Row-major: the last axis varies fastest.
    std::array<std::size_t, 3> unflatten(std::size_t flat) const noexcept {
        std::array<std::size_t, 3> idx{0, 0, 0};
        for (int a = dim_ - 1; a >= 0; --a) {
            idx[a] = flat % n_;
            flat /= n_;
        }
        return idx;
    }

    std::size_t flatten(const std::array<std::size_t, 3>& idx) const noexcept {
        std::size_t flat = 0;
        for (int a = 0; a < dim_; ++a) flat = flat * n_ + idx[a];
        return flat;
    }

    Point point(std::size_t flat) const noexcept {
        const auto idx = unflatten(flat);
        Point x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) x[a] = coordinate(idx[a]);
        return x;
    }

    /// Flat index of the point -x (periodic mirror through the origin).
    std::size_t mirror(std::size_t flat) const noexcept {
        auto idx = unflatten(flat);
        for (int a = 0; a < dim_; ++a) idx[a] = (n_ - idx[a]) % n_;
        return flatten(idx);
    }

    bool operator==(const GridSpec& other) const noexcept {
        return dim_ == other.dim_ && n_ == other.n_ && half_width_ == other.half_width_;
    }

private:
    int dim_;
    double half_width_;
    std::size_t n_;
    double spacing_ = 0.0;
    std::size_t size_ = 0;
};

inline double sup_norm(const Point& x, int dim) {
    double m = 0.0;
    for (int a = 0; a < dim; ++a) m = std::max(m, std::abs(x[a]));
    return m;
}

inline double euclidean_norm(const Point& x, int dim) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += x[a] * x[a];
    return std::sqrt(s);
}

/// Minimal-image difference x - y on the periodic box, per axis.
inline Point periodic_difference(const GridSpec& grid, const Point& x, const Point& y) {
    const double period = 2.0 * grid.half_width();
    Point d{0.0, 0.0, 0.0};
    for (int a = 0; a < grid.dim(); ++a) {
        double v = x[a] - y[a];
        v -= period * std::round(v / period);
        d[a] = v;
    }
    return d;
}

/// A real function sampled on a grid. Values are immutable once built;
/// every operation returns a new field.
class Field {
public:
    Field(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        require(values_.size() == grid_.size(), ErrorKind::invalid_parameter,
                "field length must equal n^N");
        for (double v : values_)
            require(std::isfinite(v), ErrorKind::invalid_parameter, "field values must be finite");
    }

    static Field zeros(const GridSpec& grid) { return Field(grid, std::vector<double>(grid.size(), 0.0)); }

    static Field constant(const GridSpec& grid, double value) {
        return Field(grid, std::vector<double>(grid.size(), value));
    }

    static Field sample(const GridSpec& grid, const std::function<double(const Point&)>& fn) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.point(i));
        return Field(grid, std::move(v));
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    template <class Fn>
    Field map(Fn&& fn) const {
        std::vector<double> v(values_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(values_[i]);
        return Field(grid_, std::move(v));
    }

    Field scaled(double alpha) const {
        return map([alpha](double x) { return alpha * x; });
    }

    double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
    double min_value() const { return *std::min_element(values_.begin(), values_.end()); }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    GridSpec grid_;
    std::vector<double> values_;
};

inline void require_same_grid(const Field& a, const Field& b) {
    require(a.grid() == b.grid(), ErrorKind::invalid_parameter, "fields live on different grids");
}

inline Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i];
    return Field(a.grid(), std::move(v));
}

inline Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
    return Field(a.grid(), std::move(v));
}

/// Midpoint-rule approximation of the L^p norm, p >= 1.
inline double lp_norm(const Field& u, double p) {
    require(std::isfinite(p) && p >= 1.0, ErrorKind::invalid_parameter, "lp_norm needs finite p >= 1");
    double s = 0.0;
    if (p == 1.0) {
        for (double v : u.values()) s += std::abs(v);
        return u.grid().cell_volume() * s;
    }
    if (p == 2.0) {
        for (double v : u.values()) s += v * v;
        return std::sqrt(u.grid().cell_volume() * s);
    }
    for (double v : u.values()) s += std::pow(std::abs(v), p);
    return std::pow(u.grid().cell_volume() * s, 1.0 / p);
}

/// ||u||_p^p, computed without the final root.
inline double lp_norm_pow(const Field& u, double p) {
    require(std::isfinite(p) && p >= 1.0, ErrorKind::invalid_parameter, "lp_norm needs finite p >= 1");
    double s = 0.0;
    if (p == 2.0)
        for (double v : u.values()) s += v * v;
    else
        for (double v : u.values()) s += std::pow(std::abs(v), p);
    return u.grid().cell_volume() * s;
}

inline double mass(const Field& u) {
    double s = 0.0;
    for (double v : u.values()) s += v;
    return u.grid().cell_volume() * s;
}

/// Mass of |u| in the shell ||x||_inf > L - margin; monitors periodic truncation.
inline double boundary_mass(const Field& u, double margin) {
    const auto& g = u.grid();
    require(margin > 0.0 && margin < g.half_width(), ErrorKind::invalid_parameter,
            "boundary margin must lie in (0, L)");
    const double inner = g.half_width() - margin;
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (sup_norm(g.point(i), g.dim()) > inner) s += std::abs(u[i]);
    return g.cell_volume() * s;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Short label for a real parameter in names: 2 -> "2", 2.5 -> "2.5".
inline std::string param_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Snapshot format: first line "dim,n,L" (values), then one value per line
// in canonical index order, all at 17 significant digits.

inline void write_snapshot(std::ostream& os, const Field& u) {
    const auto& g = u.grid();
    os << g.dim() << ',' << g.points_per_axis() << ',' << format_double(g.half_width()) << '\n';
    for (double v : u.values()) os << format_double(v) << '\n';
}

inline Field read_snapshot(std::istream& is) {
    std::string header;
    require(static_cast<bool>(std::getline(is, header)), ErrorKind::io, "snapshot is empty");
    std::replace(header.begin(), header.end(), ',', ' ');
    std::istringstream hs(header);
    int dim = 0;
    std::size_t n = 0;
    double L = 0.0;
    require(static_cast<bool>(hs >> dim >> n >> L), ErrorKind::io, "snapshot header must read dim,n,L");
    GridSpec grid(dim, L, n);
    std::vector<double> v;
    v.reserve(grid.size());
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        char* end = nullptr;
        const double x = std::strtod(line.c_str(), &end);
        require(end != line.c_str(), ErrorKind::io, "malformed snapshot value: " + line);
        v.push_back(x);
    }
    require(v.size() == grid.size(), ErrorKind::io, "snapshot holds the wrong number of values");
    return Field(grid, std::move(v));
}

inline void save_snapshot(const std::string& path, const Field& u) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorKind::io, "cannot open " + path);
    write_snapshot(os, u);
}

inline Field load_snapshot(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path);
    return read_snapshot(is);
}

} // namespace nldecay
