#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nldecay/error.hpp"
#include "nldecay/grid.hpp"
#include "nldecay/spectral.hpp"

namespace nldecay {

/// Volume of the unit ball in R^N.
inline double unit_ball_volume(int dim) {
    return std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

/// Offset z of the centered-order slot, computed from integer offsets so that
/// z(mirror(i)) == -z(i) exactly.
inline Point kernel_offset(const GridSpec& grid, std::size_t flat) {
    const auto idx = grid.unflatten(flat);
    const long half = static_cast<long>(grid.points_per_axis() / 2);
    Point z{0.0, 0.0, 0.0};
    for (int a = 0; a < grid.dim(); ++a)
        z[a] = static_cast<double>(static_cast<long>(idx[a]) - half) * grid.spacing();
    return z;
}

enum class KernelKind { box, bump, truncated_gaussian };

inline const char* to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::box: return "box";
    case KernelKind::bump: return "bump";
    case KernelKind::truncated_gaussian: return "truncated_gaussian";
    }
    return "unknown";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "box") return KernelKind::box;
    if (s == "bump") return KernelKind::bump;
    if (s == "truncated_gaussian") return KernelKind::truncated_gaussian;
    fail(ErrorKind::invalid_parameter, "unknown kernel kind '" + s + "'");
}

/// Radial profile of a catalog kernel.
///   box:                height                         for |z| < R_sup
///   bump:               height * exp(1 - 1/(1 - s^2))  for s = |z|/R_sup < 1
///   truncated_gaussian: exp(-|z|^2 / scale^2)          for |z| < R_sup
struct KernelShape {
    KernelKind kind = KernelKind::box;
    double support_radius = 1.0;
    double parameter = 1.0;

    double operator()(double radius) const {
        if (radius >= support_radius) return 0.0;
        switch (kind) {
        case KernelKind::box: return parameter;
        case KernelKind::bump: {
            const double s = radius / support_radius;
            return parameter * std::exp(1.0 - 1.0 / (1.0 - s * s));
        }
        case KernelKind::truncated_gaussian: return std::exp(-(radius * radius) / (parameter * parameter));
        }
        return 0.0;
    }
};

/// Translation-invariant kernel J sampled at offsets z in [-L, L)^N.
struct ConvKernel {
    Field profile;
    double support_radius = 0.0;
    bool is_even = false;
    std::optional<KernelShape> shape;
    /// Multiplies the shape (rescaled kernels carry C(J)/eps^{N+2} here).
    double amplitude = 1.0;
    /// Argument scale: J(z) = amplitude * shape(|z| / dilation).
    double dilation = 1.0;

    const GridSpec& grid() const noexcept { return profile.grid(); }

    /// J evaluated off-grid; needs the analytic shape.
    double evaluate(const Point& z) const {
        require(shape.has_value(), ErrorKind::unsupported, "kernel has no analytic shape");
        return amplitude * (*shape)(euclidean_norm(z, grid().dim()) / dilation);
    }
};

inline void validate(const ConvKernel& J) {
    const auto& g = J.grid();
    require(J.support_radius < g.half_width(), ErrorKind::invalid_parameter,
            "kernel support must stay inside the box");
    for (std::size_t i = 0; i < J.profile.size(); ++i) {
        require(J.profile[i] >= 0.0, ErrorKind::invalid_parameter, "kernel must be nonnegative");
        if (J.is_even)
            require(J.profile[g.mirror(i)] == J.profile[i], ErrorKind::invalid_parameter,
                    "kernel flagged even is not symmetric");
    }
}

inline ConvKernel kernel_from_shape(const KernelShape& shape, double amplitude, double dilation,
                                    const GridSpec& grid) {
    const double support = shape.support_radius * dilation;
    require(support > 0.0 && support < grid.half_width(), ErrorKind::invalid_parameter,
            "kernel support radius must lie in (0, L)");
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = amplitude * shape(euclidean_norm(kernel_offset(grid, i), grid.dim()) / dilation);
    ConvKernel J{Field(grid, std::move(v)), support, true, shape, amplitude, dilation};
    validate(J);
    return J;
}

inline ConvKernel make_standard_kernel(KernelKind kind, double support_radius, double height_or_scale,
                                       const GridSpec& grid) {
    require(support_radius > 0.0 && support_radius < grid.half_width(), ErrorKind::invalid_parameter,
            "kernel support radius must lie in (0, L)");
    require(height_or_scale > 0.0, ErrorKind::invalid_parameter, "kernel height/scale must be positive");
    return kernel_from_shape(KernelShape{kind, support_radius, height_or_scale}, 1.0, 1.0, grid);
}

/// Same kernel with its profile multiplied so the discrete mass is exactly one.
inline ConvKernel normalized(const ConvKernel& J) {
    const double m = mass(J.profile);
    require(m > 0.0, ErrorKind::invalid_parameter, "cannot normalize a kernel of zero mass");
    ConvKernel out = J;
    out.profile = J.profile.scaled(1.0 / m);
    out.amplitude = J.amplitude / m;
    return out;
}

/// Indicator of the unit ball, normalized to discrete mass one.
inline ConvKernel unit_ball_kernel(const GridSpec& grid) {
    return normalized(make_standard_kernel(KernelKind::box, 1.0, 1.0, grid));
}

inline KernelSymbol kernel_symbol(const ConvKernel& J) {
    require(J.is_even, ErrorKind::unsupported, "kernel symbol requires an even kernel");
    return symbol_of_profile(J.profile);
}

/// r, R of the lower bound J >= r on |z| < R, and the integral bound C_K.
struct KernelBounds {
    double r = 0.0;
    double R = 0.0;
    double C_K = 0.0;
};

inline KernelBounds verify_hypothesis_J(const ConvKernel& J, double R_test) {
    require(R_test > 0.0 && R_test <= J.support_radius, ErrorKind::invalid_parameter,
            "test radius must lie in (0, R_sup]");
    const auto& g = J.grid();
    double r = INFINITY;
    for (std::size_t i = 0; i < J.profile.size(); ++i)
        if (euclidean_norm(kernel_offset(g, i), g.dim()) < R_test) r = std::min(r, J.profile[i]);
    require(r > 0.0, ErrorKind::hypothesis_violated, "kernel vanishes inside the test ball");
    return KernelBounds{r, R_test, mass(J.profile)};
}

struct RescaledKernel {
    ConvKernel base;
    double epsilon = 1.0;
    /// C(J), with C(J)^{-1} = 1/2 * integral of J(z) z_N^2.
    double normalization = 0.0;
    /// J_eps(z) = C(J) / eps^{N+2} * J(z / eps), sampled on the base grid.
    ConvKernel kernel;
};

/// C(J) from the quadrature of the second moment along the last axis.
inline double heat_normalization(const ConvKernel& J) {
    const auto& g = J.grid();
    double s = 0.0;
    for (std::size_t i = 0; i < J.profile.size(); ++i) {
        const double zN = kernel_offset(g, i)[g.dim() - 1];
        s += J.profile[i] * zN * zN;
    }
    const double half_moment = 0.5 * g.cell_volume() * s;
    require(half_moment > 0.0, ErrorKind::invalid_parameter, "kernel has no second moment");
    return 1.0 / half_moment;
}

inline RescaledKernel rescale_kernel(const ConvKernel& J, double epsilon) {
    require(epsilon > 0.0 && epsilon <= 1.0, ErrorKind::invalid_parameter, "epsilon must lie in (0, 1]");
    require(J.shape.has_value(), ErrorKind::unsupported, "rescaling needs a kernel with an analytic shape");
    require(epsilon * J.support_radius < J.grid().half_width(), ErrorKind::invalid_parameter,
            "rescaled support exceeds the box");
    const double cj = heat_normalization(J);
    const int N = J.grid().dim();
    const double amp = J.amplitude * cj / std::pow(epsilon, N + 2);
    ConvKernel k = kernel_from_shape(*J.shape, amp, J.dilation * epsilon, J.grid());
    return RescaledKernel{J, epsilon, cj, std::move(k)};
}

enum class SigmaMode { mass_conserving, diffusion_form, custom };

/// Two-point kernel K(x_i, y_j) stored densely (row i = arrival x, column
/// j = departure y) with loss rate sigma.
class GeneralKernel {
public:
    static constexpr std::size_t max_points = 4096;

    GeneralKernel(GridSpec grid, std::vector<double> matrix, Field sigma, SigmaMode mode)
        : grid_(grid), matrix_(std::move(matrix)), sigma_(std::move(sigma)), mode_(mode) {
        const std::size_t M = grid_.size();
        require(M <= max_points, ErrorKind::invalid_parameter, "dense kernel too large for this grid");
        require(matrix_.size() == M * M, ErrorKind::invalid_parameter, "kernel matrix must be n^N x n^N");
        require(sigma_.grid() == grid_, ErrorKind::invalid_parameter, "sigma lives on another grid");
        for (double v : matrix_)
            require(std::isfinite(v) && v >= 0.0, ErrorKind::invalid_parameter,
                    "kernel entries must be finite and nonnegative");
        if (mode_ == SigmaMode::custom) return;
        const auto ref = mode_ == SigmaMode::mass_conserving ? column_integrals() : row_integrals();
        for (std::size_t i = 0; i < M; ++i)
            require(std::abs(sigma_[i] - ref[i]) <= 1e-12 * std::max(1.0, std::abs(ref[i])),
                    ErrorKind::invalid_parameter, "sigma does not match the declared sigma mode");
    }

    /// Builds sigma from the matrix for the two integral modes.
    static GeneralKernel with_sigma_mode(GridSpec grid, std::vector<double> matrix, SigmaMode mode) {
        require(mode != SigmaMode::custom, ErrorKind::invalid_parameter, "custom mode needs an explicit sigma");
        GeneralKernel tmp(grid, std::move(matrix), Field::zeros(grid), SigmaMode::custom);
        auto s = mode == SigmaMode::mass_conserving ? tmp.column_integrals() : tmp.row_integrals();
        return GeneralKernel(grid, std::move(tmp.matrix_), Field(grid, std::move(s)), mode);
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t points() const noexcept { return grid_.size(); }
    const Field& sigma() const noexcept { return sigma_; }
    SigmaMode sigma_mode() const noexcept { return mode_; }
    std::span<const double> matrix() const noexcept { return matrix_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return matrix_[i * grid_.size() + j]; }

    /// Integration over the first argument: h^N sum_i K(x_i, y_j).
    std::vector<double> column_integrals() const {
        const std::size_t M = grid_.size();
        std::vector<double> c(M, 0.0);
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j) c[j] += matrix_[i * M + j];
        for (double& v : c) v *= grid_.cell_volume();
        return c;
    }

    /// Integration over the second argument: h^N sum_j K(x_i, y_j).
    std::vector<double> row_integrals() const {
        const std::size_t M = grid_.size();
        std::vector<double> r(M, 0.0);
        for (std::size_t i = 0; i < M; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < M; ++j) s += matrix_[i * M + j];
            r[i] = s * grid_.cell_volume();
        }
        return r;
    }

    /// (K u)(x_i) = h^N sum_j K(x_i, y_j) u_j.
    std::vector<double> apply(std::span<const double> u) const {
        const std::size_t M = grid_.size();
        std::vector<double> out(M);
        const double hN = grid_.cell_volume();
        for (std::size_t i = 0; i < M; ++i) {
            const double* row = &matrix_[i * M];
            double s = 0.0;
            for (std::size_t j = 0; j < M; ++j) s += row[j] * u[j];
            out[i] = hN * s;
        }
        return out;
    }

    /// max |sigma - column integral|, the mass-conservation defect.
    double mass_conservation_defect() const {
        const auto c = column_integrals();
        double d = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) d = std::max(d, std::abs(c[j] - sigma_[j]));
        return d;
    }

    /// C_K: the largest row or column integral.
    double integral_bound() const {
        double m = 0.0;
        for (double v : row_integrals()) m = std::max(m, v);
        for (double v : column_integrals()) m = std::max(m, v);
        return m;
    }

    /// Raw column-sum defect before any correction (dispersal kernels).
    double raw_column_defect = 0.0;

private:
    GridSpec grid_;
    std::vector<double> matrix_;
    Field sigma_;
    SigmaMode mode_;
};

/// Signed periodic offset index (i - j) wrapped into [-n/2, n/2) per axis.
inline Point lattice_offset(const GridSpec& grid, std::size_t i, std::size_t j) {
    const auto a = grid.unflatten(i);
    const auto b = grid.unflatten(j);
    const long n = static_cast<long>(grid.points_per_axis());
    Point z{0.0, 0.0, 0.0};
    for (int ax = 0; ax < grid.dim(); ++ax) {
        long d = static_cast<long>(a[ax]) - static_cast<long>(b[ax]);
        d = ((d + n / 2) % n + n) % n - n / 2;
        z[ax] = static_cast<double>(d) * grid.spacing();
    }
    return z;
}

/// Profile slot holding J(x_i - x_j) under the minimal-image convention.
inline std::size_t offset_slot(const GridSpec& grid, std::size_t i, std::size_t j) {
    const auto a = grid.unflatten(i);
    const auto b = grid.unflatten(j);
    const std::size_t n = grid.points_per_axis();
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int ax = 0; ax < grid.dim(); ++ax) idx[ax] = (a[ax] + n + n / 2 - b[ax]) % n;
    return grid.flatten(idx);
}

/// K(x, y) = J(x - y) with sigma = integral of J: the convolution equation
/// written as a general kernel.
inline GeneralKernel general_from_convolution(const ConvKernel& J) {
    const auto& g = J.grid();
    const std::size_t M = g.size();
    require(M <= GeneralKernel::max_points, ErrorKind::invalid_parameter, "grid too large for a dense kernel");
    std::vector<double> k(M * M);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j) k[i * M + j] = J.profile[offset_slot(g, i, j)];
    return GeneralKernel::with_sigma_mode(g, std::move(k), SigmaMode::mass_conserving);
}

/// K(x, y) = J((x - y) / g(y)) / g(y), sigma = 1. Each column is rescaled so
/// that h sum_i K(x_i, y_j) = 1 exactly; the raw defect is kept on the kernel.
inline GeneralKernel dispersal_kernel(const ConvKernel& J, const Field& g) {
    const auto& grid = J.grid();
    require(grid.dim() == 1, ErrorKind::invalid_parameter, "dispersal kernel is one-dimensional");
    require(g.grid() == grid, ErrorKind::invalid_parameter, "g lives on another grid");
    require(g.min_value() > 0.0, ErrorKind::invalid_parameter, "dispersal distance g must be positive");
    require(g.max_value() * J.support_radius < grid.half_width(), ErrorKind::invalid_parameter,
            "max g * R_sup must stay inside the box");
    const std::size_t M = grid.size();
    std::vector<double> k(M * M);
    const bool exact_profile = !J.shape.has_value();
    for (std::size_t j = 0; j < M; ++j) {
        const double gj = g[j];
        for (std::size_t i = 0; i < M; ++i) {
            double v = 0.0;
            if (gj == 1.0)
                v = J.profile[offset_slot(grid, i, j)];
            else {
                require(!exact_profile, ErrorKind::unsupported, "non-unit g needs a kernel with an analytic shape");
                Point z = lattice_offset(grid, i, j);
                z[0] /= gj;
                v = J.evaluate(z) / gj;
            }
            k[i * M + j] = v;
        }
    }
    double defect = 0.0;
    const double h = grid.spacing();
    for (std::size_t j = 0; j < M; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < M; ++i) c += k[i * M + j];
        c *= h;
        require(c > 0.0, ErrorKind::invalid_parameter, "dispersal column has no mass");
        defect = std::max(defect, std::abs(c - 1.0));
        for (std::size_t i = 0; i < M; ++i) k[i * M + j] /= c;
    }
    GeneralKernel K(grid, std::move(k), Field::constant(grid, 1.0), SigmaMode::custom);
    K.raw_column_defect = defect;
    return K;
}

inline double detailed_balance_residual(const GeneralKernel& K, const Field& u_inf) {
    require(u_inf.grid() == K.grid(), ErrorKind::invalid_parameter, "u_inf lives on another grid");
    require(u_inf.min_value() > 0.0, ErrorKind::invalid_parameter, "u_inf must be positive");
    const std::size_t M = K.points();
    double r = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = i + 1; j < M; ++j)
            r = std::max(r, std::abs(K(i, j) * u_inf[j] - K(j, i) * u_inf[i]));
    return r;
}

/// Lower bound K(x_i, x_j) >= r for periodic |x_i - x_j| < R, plus C_K.
inline KernelBounds verify_hypothesis_K(const GeneralKernel& K, double R_test) {
    require(R_test > 0.0 && R_test < K.grid().half_width(), ErrorKind::invalid_parameter,
            "test radius must lie in (0, L)");
    const auto& g = K.grid();
    const std::size_t M = K.points();
    double r = INFINITY;
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j)
            if (euclidean_norm(lattice_offset(g, i, j), g.dim()) < R_test) r = std::min(r, K(i, j));
    require(r > 0.0, ErrorKind::hypothesis_violated, "kernel vanishes near the diagonal");
    return KernelBounds{r, R_test, K.integral_bound()};
}

} // namespace nldecay
