#include "pim/kernel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pim;

TEST(Kernel, GaussianAtZeroDistanceIsCt) {
    const auto s = KernelSpec::gaussian(0.01, 3.5);
    const Point x(0.2, -0.1, 0.0);
    EXPECT_DOUBLE_EQ(eval_R(s, x, x), 3.5);
    EXPECT_DOUBLE_EQ(eval_Rbar(s, x, x), 3.5);
}

TEST(Kernel, CompactClosedForms) {
    const auto s = KernelSpec::compact(0.25);
    // r = |x-y|^2 / (4t) = 1/2 for |x-y|^2 = 0.5
    const Point x(0, 0, 0), y(std::sqrt(0.5), 0, 0);
    EXPECT_NEAR(eval_R(s, x, y), 0.25, 1e-15);
    EXPECT_NEAR(eval_Rbar(s, x, y), 1.0 / 24.0, 1e-15);
    const Point far(1.01, 0, 0);
    EXPECT_EQ(eval_R(s, x, far), 0.0);
    EXPECT_EQ(eval_Rbar(s, x, far), 0.0);
}

TEST(Kernel, GaussianTruncatedAtCutoff) {
    const double t = 0.01;
    const auto s = KernelSpec::gaussian(t);
    const Point x(0, 0, 0);
    const Point at_cut(std::sqrt(4 * t * 12.0), 0, 0);
    EXPECT_EQ(eval_R(s, x, at_cut), 0.0);
    const Point inside(std::sqrt(4 * t * 11.999), 0, 0);
    EXPECT_NEAR(eval_R(s, x, inside), std::exp(-11.999), 1e-18);
    EXPECT_LT(std::exp(-12.0), 6.2e-6);
    EXPECT_NEAR(s.support_radius(), 2 * std::sqrt(t * 12.0), 1e-15);
}

TEST(Kernel, RejectsNonPositiveT) {
    const Point x(0, 0, 0);
    EXPECT_THROW(eval_R(KernelSpec::gaussian(0.0), x, x), ConfigError);
    EXPECT_THROW(eval_Rbar(KernelSpec::gaussian(-1.0), x, x), ConfigError);
}

TEST(Kernel, RbarDerivativeIsMinusR) {
    std::mt19937_64 rng(7);
    for (auto spec : {KernelSpec::gaussian(1.0), KernelSpec::compact(1.0)}) {
        const double hi = spec.family == KernelFamily::gaussian ? 11.9 : 0.95;
        std::uniform_real_distribution<double> U(0.05, hi);
        for (int k = 0; k < 100; ++k) {
            const double r = U(rng);
            const double h = 1e-5;
            const double fd = -(kernel_Rbar(spec, r + h) - kernel_Rbar(spec, r - h)) / (2 * h);
            const double R = kernel_R(spec, r);
            EXPECT_LE(std::abs(fd - R), 1e-6 * std::max(R, 1e-300)) << r;
        }
    }
}

TEST(Kernel, NonnegativeAndNonincreasing) {
    for (auto spec : {KernelSpec::gaussian(1.0), KernelSpec::compact(1.0)}) {
        double prev_R = kernel_R(spec, 0.0), prev_Rb = kernel_Rbar(spec, 0.0);
        for (int k = 1; k <= 1000; ++k) {
            const double r = spec.cutoff_r * k / 1000.0;
            const double R = kernel_R(spec, r), Rb = kernel_Rbar(spec, r);
            EXPECT_GE(R, 0.0);
            EXPECT_GE(Rb, 0.0);
            EXPECT_LE(R, prev_R);
            EXPECT_LE(Rb, prev_Rb);
            prev_R = R;
            prev_Rb = Rb;
        }
    }
}

TEST(Bandwidth, SquaredFactorTimesDelta) {
    EXPECT_NEAR(select_bandwidth(0.1, 0.75), 0.005625, 1e-17);
    EXPECT_THROW(select_bandwidth(0.0, 0.5), ConfigError);
    EXPECT_DOUBLE_EQ(default_t_factor(BoundaryKind::neumann, 2), 0.5);
    EXPECT_DOUBLE_EQ(default_t_factor(BoundaryKind::dirichlet, 2), 0.75);
    EXPECT_DOUBLE_EQ(default_t_factor(BoundaryKind::neumann, 3), 0.375);
    EXPECT_DOUBLE_EQ(default_t_factor(BoundaryKind::dirichlet, 3), 0.75);
}

TEST(Kernel, ParsesFamilyNames) {
    EXPECT_EQ(parse_kernel_family("gaussian"), KernelFamily::gaussian);
    EXPECT_EQ(parse_kernel_family("compact"), KernelFamily::compact_poly);
    EXPECT_THROW(parse_kernel_family("cubic"), ConfigError);
}
