#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "flatchain/chain.hpp"
#include "flatchain/fbm.hpp"
#include "flatchain/forms.hpp"
#include "flatchain/oracle.hpp"

using namespace flatchain;

namespace {

SheetGrid circle_grid(int n_exp = 12, double alpha_min = 0.02,
                      MollifierKernel k = kernel_epanechnikov()) {
    auto c = generate_analytic(AnalyticDescriptor::circle(), 1 << n_exp, 2.0 * M_PI);
    SheetGridOptions opt;
    opt.alpha_min = alpha_min;
    return SheetGrid(c, k, 1.0, opt);
}

}  // namespace

TEST_CASE("smoothed curve integral basics", "[chain]") {
    SheetGridOptions opt;
    opt.alpha_min = 0.05;
    auto c = generate_analytic(AnalyticDescriptor::constant({1.0, 2.0}), 256, 1.0);
    SheetGrid gc(c, kernel_epanechnikov(), 1.0, opt);
    auto rot = builtin("rotation", 2);
    REQUIRE(smoothed_curve_integral(gc, *rot.one_form, 0.05) == 0.0);

    // alpha must be a grid node
    REQUIRE_THROWS_AS(smoothed_curve_integral(gc, *rot.one_form, 0.0437), std::invalid_argument);

    // line path against a constant form: the alpha-level curve carries an O(alpha)
    // boundary deficit from the constant extension, and the chain limit removes it
    auto l = generate_analytic(AnalyticDescriptor::line({0.5, -1.0}), 1 << 10, 1.0);
    SheetGrid gl(l, kernel_epanechnikov(), 1.0, opt);
    OneForm cform(2, [](const double*, double* out) { out[0] = 2.0; out[1] = 3.0; },
                  [](const double*, double* out) { std::fill(out, out + 4, 0.0); });
    double want = (2.0 * 0.5 + 3.0 * (-1.0)) * 1.0;
    double at_level = smoothed_curve_integral(gl, cform, 0.05);
    REQUIRE(std::abs(at_level - want) < 0.1 * std::abs(want));
    REQUIRE(std::abs(at_level - want) > 1e-6);  // the deficit is real
    auto r = chain_integral(gl, cform);
    REQUIRE(r.extrapolated_value == Catch::Approx(want).margin(1e-8));
}

TEST_CASE("smoothed circle curve integral equals twice the smoothed area", "[chain]") {
    auto g = circle_grid();
    auto rot = builtin("rotation", 2);
    double alpha = g.alphas()[0];
    double val = smoothed_curve_integral(g, *rot.one_form, alpha);
    // radius of the smoothed circle, measured away from the endpoints
    double radius = 0.0;
    int cnt = 0;
    for (int j = g.n_t() / 4; j < 3 * g.n_t() / 4; ++j) {
        radius += norm(g.value(0, j), 2);
        ++cnt;
    }
    radius /= cnt;
    REQUIRE(val == Catch::Approx(2.0 * M_PI * radius * radius).epsilon(0.01));
}

TEST_CASE("chain integral on the circle recovers the rotation integral", "[chain]") {
    auto g = circle_grid();
    auto rot = builtin("rotation", 2);
    auto r = chain_integral(g, *rot.one_form);
    REQUIRE(r.extrapolated);
    REQUIRE(r.extrapolated_value == Catch::Approx(2.0 * M_PI).epsilon(1e-3));
    REQUIRE(std::abs(r.stokes_residual) <= r.residual_tolerance);
    // the assembly identity holds by construction
    double assembled = r.terms.t_dphi + r.terms.top_edge - r.terms.right_edge + r.terms.left_edge +
                       r.stokes_residual;
    REQUIRE(r.value_at_alpha_min == Catch::Approx(assembled).margin(1e-12));
}

TEST_CASE("chain integral is exact on gradient forms", "[chain]") {
    for (auto [state, name] : std::vector<std::pair<int, std::string>>{{42, "grad-quadratic"},
                                                                       {7, "grad-gauss"}}) {
        auto p = generate_fbm(0.7, 2, 1 << 11, 1.0, state);
        SheetGridOptions opt;
        opt.alpha_min = 0.015;
        SheetGrid g(p, kernel_epanechnikov(), 0.65, opt);
        auto desc = builtin(name, 2);
        auto r = chain_integral(g, *desc.one_form);
        double target = potential_value(desc, p.point(p.n_steps())) - potential_value(desc, p.point(0));
        REQUIRE(std::abs(r.extrapolated_value - target) <= 1e-2 * (1.0 + std::abs(target)));
        REQUIRE(std::abs(r.stokes_residual) <= r.residual_tolerance);
        REQUIRE(r.extrapolation_exponent == Catch::Approx(2.0 * 0.65 - 1.0));
    }
}

TEST_CASE("chain integral agrees with the Young oracle on fbm", "[chain]") {
    auto p = generate_fbm(0.7, 2, 1 << 12, 1.0, 42);
    SheetGridOptions opt;
    opt.alpha_min = 0.001;
    SheetGrid g(p, kernel_epanechnikov(), 0.65, opt);
    auto desc = builtin("gauss-rotation", 2);
    ChainOptions copt;
    copt.exponent = std::min(1.0, 2.0 * 0.7 - 0.5);  // measured fbm midpoint rate
    copt.fit_window = 14;
    auto r = chain_integral(g, *desc.one_form, copt);
    auto young = young_value(p, *desc.one_form, 0.95);
    REQUIRE(std::abs(r.extrapolated_value - young.value) <= 0.05 * std::abs(young.value));
}

TEST_CASE("Stokes residual stays within tolerance across paths and kernels", "[chain]") {
    auto desc = builtin("gauss-rotation", 2);
    for (auto k : {kernel_epanechnikov(), kernel_triangle()}) {
        for (int seed : {1, 2}) {
            auto p = generate_fbm(0.7, 2, 1 << 11, 1.0, seed);
            SheetGridOptions opt;
            opt.alpha_min = 0.02;
            SheetGrid g(p, k, 0.65, opt);
            auto r = chain_integral(g, *desc.one_form);
            REQUIRE(std::abs(r.stokes_residual) <= r.residual_tolerance);
        }
    }
}

TEST_CASE("kernel independence of the extrapolated value", "[chain]") {
    auto p = generate_fbm(0.7, 2, 1 << 12, 1.0, 42);
    SheetGridOptions opt;
    opt.alpha_min = 0.02;
    SheetGrid ge(p, kernel_epanechnikov(), 0.65, opt);
    SheetGrid gt(p, kernel_triangle(), 0.65, opt);
    auto desc = builtin("gauss-rotation", 2);
    auto re = chain_integral(ge, *desc.one_form);
    auto rt = chain_integral(gt, *desc.one_form);
    double tol = std::max(0.02 * std::abs(re.extrapolated_value),
                          2.0 * (re.fit_residual + rt.fit_residual));
    REQUIRE(std::abs(re.extrapolated_value - rt.extrapolated_value) <= tol);
}

TEST_CASE("chain integrals converge along piecewise-linear refinements", "[chain]") {
    auto p = generate_fbm(0.75, 2, 1 << 12, 1.0, 9);
    auto desc = builtin("gauss-rotation", 2);
    SheetGridOptions opt;
    opt.alpha_min = 0.04;
    ChainOptions copt;
    copt.exponent = 1.0;
    SheetGrid fine(p, kernel_epanechnikov(), 0.7, opt);
    double reference = chain_integral(fine, *desc.one_form, copt).extrapolated_value;
    std::vector<double> errs;
    for (int factor : {32, 8, 2}) {
        SheetGrid g(subsample(p, factor), kernel_epanechnikov(), 0.7, opt);
        errs.push_back(
            std::abs(chain_integral(g, *desc.one_form, copt).extrapolated_value - reference));
    }
    REQUIRE(errs[1] <= errs[0]);
    REQUIRE(errs[2] <= errs[1]);
}

TEST_CASE("smooth-path consistency: circle matches the classical integral", "[chain]") {
    auto g = circle_grid();
    auto desc = builtin("gauss-rotation", 2);
    auto r = chain_integral(g, *desc.one_form);
    auto classical = young_value(g.path(), *desc.one_form, 1.0);
    REQUIRE(std::abs(r.extrapolated_value - classical.value) <= 1e-3 * std::abs(classical.value));
}

TEST_CASE("alpha convergence rate diagnostic", "[chain]") {
    // |I(alpha) - extrapolated| should shrink roughly like alpha^q on the fitted
    // window; diagnostic-grade bands (factor 2 each way, squared for safety)
    auto g = circle_grid();
    auto rot = builtin("rotation", 2);
    auto r = chain_integral(g, *rot.one_form);
    REQUIRE(r.extrapolated);
    double q = r.extrapolation_exponent;
    double g0 = std::abs(r.curve_values[0] - r.extrapolated_value);
    double g2 = std::abs(r.curve_values[2] - r.extrapolated_value);
    double expected_ratio = std::pow(r.alpha_sequence[2] / r.alpha_sequence[0], q);
    double observed_ratio = g2 / g0;
    REQUIRE(observed_ratio <= 4.0 * expected_ratio);
    REQUIRE(observed_ratio >= expected_ratio / 4.0);
}

TEST_CASE("graph chain: pure time component integrates phi_0", "[chain]") {
    auto p = generate_fbm(0.7, 1, 1 << 11, 1.0, 4);
    SheetGridOptions opt;
    opt.alpha_min = 0.02;
    SheetGrid g(p, kernel_epanechnikov(), 0.65, opt);
    OneForm phi(2, [](const double* tx, double* out) {
        out[0] = std::cos(3.0 * tx[0]);
        out[1] = 0.0;
    });
    auto r = chain_integral_graph(g, phi);
    double want = std::sin(3.0) / 3.0;  // int_0^1 cos(3t) dt
    REQUIRE(r.extrapolated_value == Catch::Approx(want).margin(1e-6));
}

TEST_CASE("graph chain: constant path with zero dt-component vanishes", "[chain]") {
    auto c = generate_analytic(AnalyticDescriptor::constant({1.5}), 256, 1.0);
    SheetGridOptions opt;
    opt.alpha_min = 0.05;
    SheetGrid g(c, kernel_epanechnikov(), 1.0, opt);
    OneForm phi(2, [](const double* tx, double* out) {
        out[0] = 0.0;
        out[1] = std::sin(tx[0]) + tx[1];
    });
    auto r = chain_integral_graph(g, phi);
    REQUIRE(std::abs(r.value_at_alpha_min) <= 1e-10);
    REQUIRE(std::abs(r.extrapolated_value) <= 1e-10);
}

TEST_CASE("graph chain reproduces the one-dimensional subgraph identity", "[chain]") {
    // phi = cos(t) exp(-x^2) dx; the target is
    // Phi(T,X_T) - Phi(0,X_0) - int dPhi/dt(t,X_t) dt with Phi = cos(t) int_0^x e^{-y^2} dy
    auto p = generate_fbm(0.55, 1, 1 << 12, 1.0, 2);
    SheetGridOptions opt;
    opt.alpha_min = 0.004;
    SheetGrid g(p, kernel_epanechnikov(), 0.5, opt);
    auto desc = builtin("timegauss", 2);
    auto r = chain_integral_graph(g, *desc.one_form);

    auto Phi = [](double t, double x) { return std::cos(t) * 0.5 * std::sqrt(M_PI) * std::erf(x); };
    auto dPhi_dt = [](double t, double x) {
        return -std::sin(t) * 0.5 * std::sqrt(M_PI) * std::erf(x);
    };
    const int n = p.n_steps();
    double target = Phi(1.0, p.coord(n, 0)) - Phi(0.0, p.coord(0, 0));
    double integral = 0.0;
    for (int j = 0; j <= n; ++j) {
        double w = (j == 0 || j == n) ? 0.5 : 1.0;
        integral += w * dPhi_dt(p.time(j), p.coord(j, 0)) * p.step();
    }
    target -= integral;
    REQUIRE(std::abs(r.extrapolated_value - target) <= 0.02 * (1.0 + std::abs(target)));
    // d=1 graph lift: truncation error is edge-driven, so the exponent is gamma
    REQUIRE(r.extrapolation_exponent == Catch::Approx(0.5));
}

TEST_CASE("chain results expose both values and the fit window", "[chain]") {
    auto g = circle_grid(11, 0.04);
    auto rot = builtin("rotation", 2);
    auto r = chain_integral(g, *rot.one_form);
    REQUIRE(r.alpha_sequence.size() == static_cast<std::size_t>(g.n_alpha()));
    REQUIRE(r.curve_values.size() == r.alpha_sequence.size());
    REQUIRE(r.curve_values[0] == r.value_at_alpha_min);
    REQUIRE(r.curve_values.back() == r.terms.top_edge);

    ChainOptions forced;
    forced.exponent = 0.8;
    auto r2 = chain_integral(g, *rot.one_form, forced);
    REQUIRE(r2.extrapolation_exponent == 0.8);
}
