#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "flatchain/fbm.hpp"
#include "flatchain/kernel.hpp"
#include "flatchain/mollify.hpp"
#include "flatchain/path.hpp"

using namespace flatchain;

namespace {

// Richardson-refined trapezoid of the convolution against the same piecewise-linear
// extension, used as an independent oracle for smooth_value.
std::vector<double> refined_convolution(const ExtendedPath& ext, const MollifierKernel& k, double t,
                                        double alpha, int base_n) {
    auto trap = [&](int n) {
        const int d = ext.dim();
        std::vector<double> acc(d, 0.0), v(d);
        double h = 2.0 * alpha / n;
        for (int j = 0; j <= n; ++j) {
            double s = t - alpha + j * h;
            double w = (j == 0 || j == n) ? 0.5 : 1.0;
            double eta = k.eval((t - s) / alpha) / alpha;
            ext.value_at(s, v.data());
            for (int i = 0; i < d; ++i) acc[i] += w * h * eta * v[i];
        }
        return acc;
    };
    auto c1 = trap(base_n), c2 = trap(2 * base_n), c4 = trap(4 * base_n);
    std::vector<double> out(c1.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        // two Richardson sweeps of the O(h^2) rule
        double r1 = c2[i] + (c2[i] - c1[i]) / 3.0;
        double r2 = c4[i] + (c4[i] - c2[i]) / 3.0;
        out[i] = r2 + (r2 - r1) / 15.0;
    }
    return out;
}

}  // namespace

TEST_CASE("kernel shapes and mass", "[mollify]") {
    auto epa = kernel_epanechnikov();
    REQUIRE(epa.eval(0.0) == 0.75);
    REQUIRE(epa.eval(1.0) == 0.0);
    REQUIRE(epa.deriv(0.5) == Catch::Approx(-0.75).margin(1e-15));

    auto tri = kernel_triangle();
    REQUIRE(tri.eval(1.0) == 0.0);
    REQUIRE(tri.eval(-1.0) == 0.0);
    REQUIRE(tri.eval(0.0) == 1.0);
    REQUIRE(tri.deriv(0.5) == -1.0);
    REQUIRE(tri.deriv(-0.5) == 1.0);
    REQUIRE(tri.deriv(0.0) == 0.0);  // average of the one-sided limits

    REQUIRE_THROWS_AS(kernel_by_name("box"), std::invalid_argument);

    // kernel mass is stable under a 10x finer re-quadrature (Richardson-refined trapezoid)
    for (const auto& k : {epa, tri}) {
        auto trap = [&](int n) {
            double h = 2.0 / n, s = 0.0;
            for (int j = 0; j <= n; ++j) s += ((j == 0 || j == n) ? 0.5 : 1.0) * h * k.eval(-1.0 + j * h);
            return s;
        };
        auto mass = [&](int n) {
            double c = trap(n), f = trap(2 * n);
            return f + (f - c) / 3.0;
        };
        REQUIRE(std::abs(mass(40000) - mass(4000)) < 1e-10);
    }
}

TEST_CASE("rejects a kernel without unit mass", "[mollify]") {
    REQUIRE_THROWS_AS(MollifierKernel("bad", {{-1.0, 1.0, {1.0, 0.0, -1.0}}}), std::invalid_argument);
}

TEST_CASE("kernel moment constants at gamma=0.7 (frozen)", "[mollify]") {
    auto ce = kernel_constants(kernel_epanechnikov(), 0.7);
    // closed forms: kappa1 = 3/2.7 (epa), 2/1.7 (triangle); kappa2 frozen from the
    // adaptive quadrature (hand integration of |0.75-2.25r^2| r^0.7 agrees to 4 digits)
    REQUIRE(ce.kappa1 == Catch::Approx(3.0 / 2.7).epsilon(1e-9));
    REQUIRE(ce.kappa2 == Catch::Approx(0.708790984318399).epsilon(1e-9));

    auto ct = kernel_constants(kernel_triangle(), 0.7);
    REQUIRE(ct.kappa1 == Catch::Approx(2.0 / 1.7).epsilon(1e-9));
    REQUIRE(ct.kappa2 == Catch::Approx(0.573234076981463).epsilon(1e-9));

    REQUIRE(ce.kappa1 > 0.0);
    REQUIRE(ce.kappa2 > 0.0);
}

TEST_CASE("smooth_value reproduces constants exactly and lines to rounding", "[mollify]") {
    auto ext = extend_constant(generate_analytic(AnalyticDescriptor::constant({2.0, -1.0}), 64, 1.0));
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        auto v = smooth_value(ext, k, 0.5, 0.25);
        REQUIRE(v[0] == Catch::Approx(2.0).margin(1e-14));
        REQUIRE(v[1] == Catch::Approx(-1.0).margin(1e-14));
        auto v2 = smooth_value(ext, k, 0.0, 1.0);  // support entirely on the pads
        REQUIRE(v2[0] == Catch::Approx(2.0).margin(1e-14));
    }

    auto line = extend_constant(generate_analytic(AnalyticDescriptor::line({1.5, -0.5}), 1 << 10, 1.0));
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        double t = 0.5;
        auto v = smooth_value(line, k, t, 0.125);
        REQUIRE(v[0] == Catch::Approx(1.5 * t).margin(1e-10));
        REQUIRE(v[1] == Catch::Approx(-0.5 * t).margin(1e-10));
    }
}

TEST_CASE("alpha floor is enforced", "[mollify]") {
    auto p = generate_fbm(0.7, 1, 256, 1.0, 1);
    auto ext = extend_constant(p);
    auto k = kernel_epanechnikov();
    REQUIRE_THROWS_AS(smooth_value(ext, k, 0.5, 2.0 / 256), std::invalid_argument);
    REQUIRE_NOTHROW(smooth_value(ext, k, 0.5, 4.0 / 256));
}

TEST_CASE("smooth_value matches a Richardson-refined quadrature on fbm", "[mollify]") {
    auto p = generate_fbm(0.7, 1, 1 << 10, 1.0, 42);
    auto ext = extend_constant(p);
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        auto mine = smooth_value(ext, k, 0.5, 0.1);
        auto oracle = refined_convolution(ext, k, 0.5, 0.1, 4 * static_cast<int>(0.2 * (1 << 10)));
        REQUIRE(mine[0] == Catch::Approx(oracle[0]).margin(1e-8));
    }
}

TEST_CASE("smooth_dt: constants vanish, lines give the slope", "[mollify]") {
    auto c = extend_constant(generate_analytic(AnalyticDescriptor::constant({0.7}), 64, 1.0));
    auto line = extend_constant(generate_analytic(AnalyticDescriptor::line({2.0, 1.0}), 1 << 12, 1.0));
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        auto z = smooth_dt(c, k, 0.4, 0.2);
        REQUIRE(z[0] == 0.0);

        auto v = smooth_dt(line, k, 0.5, 0.05);
        REQUIRE(v[0] == Catch::Approx(2.0).margin(1e-8));
        REQUIRE(v[1] == Catch::Approx(1.0).margin(1e-8));
    }
}

TEST_CASE("smooth_dt matches a finite difference of smooth_value on the circle", "[mollify]") {
    const int n = 1 << 12;
    auto circ = extend_constant(generate_analytic(AnalyticDescriptor::circle(), n, 2.0 * M_PI));
    auto k = kernel_epanechnikov();
    double t = M_PI / 2.0, alpha = 0.05;
    double step = 2.0 * M_PI / (8.0 * n);
    auto hi = smooth_value(circ, k, t + step, alpha);
    auto lo = smooth_value(circ, k, t - step, alpha);
    auto mine = smooth_dt(circ, k, t, alpha);
    for (int i = 0; i < 2; ++i)
        REQUIRE(mine[i] == Catch::Approx((hi[i] - lo[i]) / (2.0 * step)).margin(1e-4));
}

TEST_CASE("smooth_dalpha: constants vanish exactly, lines vanish by symmetry", "[mollify]") {
    auto c = extend_constant(generate_analytic(AnalyticDescriptor::constant({1.0, 2.0}), 64, 1.0));
    auto line = extend_constant(generate_analytic(AnalyticDescriptor::line({1.0, -2.0}), 1 << 12, 1.0));
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        auto z = smooth_dalpha(c, k, 0.3, 0.15);
        REQUIRE(z[0] == 0.0);
        REQUIRE(z[1] == 0.0);

        auto v = smooth_dalpha(line, k, 0.5, 0.05);
        REQUIRE(v[0] == Catch::Approx(0.0).margin(1e-8));
        REQUIRE(v[1] == Catch::Approx(0.0).margin(1e-8));
    }
}

TEST_CASE("smooth_dalpha matches a finite difference in alpha on fbm", "[mollify]") {
    auto p = generate_fbm(0.7, 1, 1 << 10, 1.0, 42);
    auto ext = extend_constant(p);
    double t = 0.5, alpha = 0.1;
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        double step = alpha / 256.0;
        auto hi = smooth_value(ext, k, t, alpha + step);
        auto lo = smooth_value(ext, k, t, alpha - step);
        auto mine = smooth_dalpha(ext, k, t, alpha);
        REQUIRE(mine[0] == Catch::Approx((hi[0] - lo[0]) / (2.0 * step)).margin(1e-4));
    }
}

TEST_CASE("derivatives pass the finite-difference ratio test", "[mollify]") {
    // error against central differences must shrink by >= 3x when the step shrinks 4x
    auto p = generate_fbm(0.65, 2, 1 << 11, 1.0, 3);
    auto ext = extend_constant(p);
    auto k = kernel_epanechnikov();
    const double t = 0.375, alpha = 0.1;
    auto mine_dt = smooth_dt(ext, k, t, alpha);
    auto mine_da = smooth_dalpha(ext, k, t, alpha);
    auto fd_err = [&](double step_t, double step_a) {
        auto hi_t = smooth_value(ext, k, t + step_t, alpha);
        auto lo_t = smooth_value(ext, k, t - step_t, alpha);
        auto hi_a = smooth_value(ext, k, t, alpha + step_a);
        auto lo_a = smooth_value(ext, k, t, alpha - step_a);
        double et = 0.0, ea = 0.0;
        for (int i = 0; i < 2; ++i) {
            et = std::max(et, std::abs((hi_t[i] - lo_t[i]) / (2.0 * step_t) - mine_dt[i]));
            ea = std::max(ea, std::abs((hi_a[i] - lo_a[i]) / (2.0 * step_a) - mine_da[i]));
        }
        return std::pair<double, double>(et, ea);
    };
    auto [et1, ea1] = fd_err(alpha / 16.0, alpha / 16.0);
    auto [et2, ea2] = fd_err(alpha / 64.0, alpha / 64.0);
    REQUIRE(et2 <= et1 / 3.0);
    REQUIRE(ea2 <= ea1 / 3.0);
}

TEST_CASE("derivative bound sweep with kernel constants", "[mollify]") {
    const double gamma = 0.65;
    auto p = generate_fbm(0.7, 2, 1 << 11, 1.0, 9);
    auto ext = extend_constant(p);
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        auto kc = kernel_constants(k, gamma);
        double c_est = estimate_holder(ext, gamma).constant;
        for (double alpha : {0.02, 0.05, 0.1, 0.3, 1.0}) {
            for (double t : {0.0, 0.25, 0.5, 0.8, 1.0}) {
                auto dt = smooth_dt(ext, k, t, alpha);
                auto da = smooth_dalpha(ext, k, t, alpha);
                double cap = 1.05 * c_est * std::pow(alpha, gamma - 1.0);
                REQUIRE(norm(dt.data(), 2) <= cap * kc.kappa1);
                REQUIRE(norm(da.data(), 2) <= cap * kc.kappa2);
            }
        }
    }
}

TEST_CASE("grid stencil agrees with the generic convolution", "[mollify]") {
    auto p = generate_fbm(0.6, 2, 512, 1.0, 17);
    auto ext = extend_constant(p);
    for (const auto& k : {kernel_epanechnikov(), kernel_triangle()}) {
        for (double alpha : {0.05, 0.17, 1.0}) {
            detail::ConvolutionStencil st(k, alpha, p.step());
            std::vector<double> v(2), dt(2), da(2);
            for (int j : {0, 3, 200, 256, 510, 512}) {
                st.apply(ext, j, v.data(), dt.data(), da.data());
                auto sp = smooth_point(ext, k, p.time(j), alpha);
                for (int i = 0; i < 2; ++i) {
                    REQUIRE(v[i] == Catch::Approx(sp.value[i]).margin(1e-12));
                    REQUIRE(dt[i] == Catch::Approx(sp.dt[i]).margin(1e-12));
                    REQUIRE(da[i] == Catch::Approx(sp.dalpha[i]).margin(1e-12));
                }
            }
        }
    }
}
