#pragma once

#include "pim/common.hpp"

#include <cmath>
#include <string>

namespace pim {

enum class KernelFamily { gaussian, compact_poly };

inline std::string to_string(KernelFamily f) { return f == KernelFamily::gaussian ? "gaussian" : "compact"; }

inline KernelFamily parse_kernel_family(const std::string& s) {
    if (s == "gaussian") return KernelFamily::gaussian;
    if (s == "compact" || s == "compact_poly") return KernelFamily::compact_poly;
    throw ConfigError("unknown kernel family '" + s + "' (expected gaussian or compact)");
}

/// Kernel family, bandwidth t, normalizer c_t and truncation radius in the
/// scaled argument r = |x-y|^2 / (4t).
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double t = 1.0;
    double c_t = 1.0;
    double cutoff_r = 12.0;

    static KernelSpec gaussian(double t, double c_t = 1.0) { return {KernelFamily::gaussian, t, c_t, 12.0}; }
    static KernelSpec compact(double t, double c_t = 1.0) { return {KernelFamily::compact_poly, t, c_t, 1.0}; }
    static KernelSpec make(KernelFamily f, double t, double c_t = 1.0) {
        return f == KernelFamily::gaussian ? gaussian(t, c_t) : compact(t, c_t);
    }

    void validate() const {
        require(t > 0.0 && std::isfinite(t), "kernel bandwidth t must be positive");
        require(c_t > 0.0 && std::isfinite(c_t), "kernel normalizer c_t must be positive");
        require(cutoff_r > 0.0, "kernel cutoff must be positive");
        require(family == KernelFamily::gaussian || cutoff_r <= 1.0, "compact kernel cutoff cannot exceed 1");
    }

    /// Euclidean radius beyond which both kernels vanish.
    double support_radius() const { return 2.0 * std::sqrt(t * cutoff_r); }

    /// The conventional heat-kernel normalizer (4πt)^{-k/2}.
    static double heat_normalizer(double t, int k) { return std::pow(4.0 * M_PI * t, -0.5 * k); }
};

/// Unscaled profile R(r); zero at and beyond the cutoff.
inline double kernel_R(const KernelSpec& s, double r) {
    if (r >= s.cutoff_r) return 0.0;
    if (s.family == KernelFamily::gaussian) return std::exp(-r);
    const double a = 1.0 - r;
    return a * a;
}

/// Unscaled profile R̄(r) = ∫_r^∞ R(s) ds; zero at and beyond the cutoff.
inline double kernel_Rbar(const KernelSpec& s, double r) {
    if (r >= s.cutoff_r) return 0.0;
    if (s.family == KernelFamily::gaussian) return std::exp(-r);
    const double a = 1.0 - r;
    return a * a * a / 3.0;
}

inline double scaled_argument(const KernelSpec& s, const Point& x, const Point& y) {
    return (x - y).squaredNorm() / (4.0 * s.t);
}

inline double eval_R(const KernelSpec& s, const Point& x, const Point& y) {
    s.validate();
    return s.c_t * kernel_R(s, scaled_argument(s, x, y));
}

inline double eval_Rbar(const KernelSpec& s, const Point& x, const Point& y) {
    s.validate();
    return s.c_t * kernel_Rbar(s, scaled_argument(s, x, y));
}

/// t = (factor·δ)².
inline double select_bandwidth(double delta, double factor) {
    require(delta > 0.0, "delta must be positive");
    require(factor > 0.0, "t factor must be positive");
    const double s = factor * delta;
    return s * s;
}

enum class BoundaryKind { neumann, dirichlet };

inline std::string to_string(BoundaryKind k) { return k == BoundaryKind::neumann ? "neumann" : "dirichlet"; }

/// Default √t/δ ratio for a problem type and intrinsic dimension.
inline double default_t_factor(BoundaryKind kind, int k) {
    if (kind == BoundaryKind::dirichlet) return 0.75;
    return k >= 3 ? 0.375 : 0.5;
}

} // namespace pim
