#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "flatchain/fbm.hpp"
#include "flatchain/forms.hpp"
#include "flatchain/sheet.hpp"

using namespace flatchain;

TEST_CASE("jacobian hand values", "[sheet]") {
    REQUIRE(jacobian({1.0, 0.0}, {0.0, 1.0}) == 1.0);
    REQUIRE(jacobian({2.0, 0.0, 0.0}, {1.0, 2.0, 0.0}) == Catch::Approx(4.0).margin(1e-12));
    REQUIRE(jacobian({2.0, 0.0, 0.0}, {1.0, 1.0, 0.0}) == Catch::Approx(2.0).margin(1e-12));

    // parallel arguments collapse the area element
    std::vector<double> dt{0.3, -0.4, 1.1};
    std::vector<double> da{0.6, -0.8, 2.2};
    REQUIRE(jacobian(dt, da) <= 1e-6 * norm(dt.data(), 3) * norm(da.data(), 3));

    REQUIRE_THROWS_AS(jacobian({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("jacobian symmetry and homogeneity", "[sheet]") {
    std::mt19937_64 eng(314);
    auto u = [&] { return -1.0 + 2.0 * (eng() >> 11) * 0x1.0p-53; };
    for (int it = 0; it < 200; ++it) {
        std::vector<double> a{u(), u(), u()}, b{u(), u(), u()};
        REQUIRE(jacobian(a, b) == Catch::Approx(jacobian(b, a)).margin(1e-14));
        double c = 2.5;
        std::vector<double> ca{c * a[0], c * a[1], c * a[2]};
        REQUIRE(jacobian(ca, b) == Catch::Approx(c * jacobian(a, b)).epsilon(1e-12).margin(1e-13));
    }
}

TEST_CASE("jacobian_graph hand values", "[sheet]") {
    REQUIRE(jacobian_graph({0.0, 0.0}, {0.0, 1.0}) == 1.0);
    REQUIRE(jacobian_graph({1.0, 2.0}, {0.0, 0.0}) == 0.0);
    REQUIRE(jacobian_graph({1.0, 0.0}, {1.0, 0.0}) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sheet grid construction basics", "[sheet]") {
    auto p = generate_fbm(0.7, 2, 512, 1.0, 42);
    SheetGridOptions opt;
    opt.alpha_min = 0.05;
    SheetGrid g(p, kernel_epanechnikov(), 0.65, opt);
    REQUIRE(g.alphas().front() == 0.05);
    REQUIRE(g.alphas().back() == 1.0);
    for (int m = 0; m + 1 < g.n_alpha(); ++m) REQUIRE(g.alphas()[m] < g.alphas()[m + 1]);
    REQUIRE(g.n_t() == 513);

    // cached points agree with direct evaluation
    auto ext = extend_constant(p);
    auto sp = smooth_point(ext, g.kernel(), p.time(100), g.alphas()[2]);
    for (int i = 0; i < 2; ++i) {
        REQUIRE(g.value(2, 100)[i] == Catch::Approx(sp.value[i]).margin(1e-12));
        REQUIRE(g.dt(2, 100)[i] == Catch::Approx(sp.dt[i]).margin(1e-12));
        REQUIRE(g.dalpha(2, 100)[i] == Catch::Approx(sp.dalpha[i]).margin(1e-12));
    }

    REQUIRE_THROWS_AS(g.alpha_index(0.123456), std::invalid_argument);
    SheetGridOptions bad;
    bad.alpha_min = 1.0 / 512;
    REQUIRE_THROWS_AS(SheetGrid(p, kernel_epanechnikov(), 0.65, bad), std::invalid_argument);
}

TEST_CASE("grid construction is independent of thread count", "[sheet]") {
    auto p = generate_fbm(0.6, 2, 256, 1.0, 3);
    SheetGridOptions o1, o4;
    o1.alpha_min = o4.alpha_min = 0.05;
    o1.threads = 1;
    o4.threads = 4;
    SheetGrid g1(p, kernel_triangle(), 0.55, o1);
    SheetGrid g4(p, kernel_triangle(), 0.55, o4);
    bool same = true;
    for (int m = 0; m < g1.n_alpha() && same; ++m)
        for (int j = 0; j < g1.n_t() && same; ++j)
            for (int i = 0; i < 2; ++i)
                same = same && g1.value(m, j)[i] == g4.value(m, j)[i] &&
                       g1.dt(m, j)[i] == g4.dt(m, j)[i] && g1.dalpha(m, j)[i] == g4.dalpha(m, j)[i];
    REQUIRE(same);
}

TEST_CASE("surface mass degenerates on constant and line paths", "[sheet]") {
    SheetGridOptions opt;
    opt.alpha_min = 0.05;
    auto c = generate_analytic(AnalyticDescriptor::constant({1.0, 2.0}), 256, 1.0);
    SheetGrid gc(c, kernel_epanechnikov(), 1.0, opt);
    REQUIRE(surface_mass(gc).total == 0.0);

    auto l = generate_analytic(AnalyticDescriptor::line({1.0, -0.5}), 256, 1.0);
    SheetGrid gl(l, kernel_epanechnikov(), 1.0, opt);
    REQUIRE(surface_mass(gl).total <= 1e-8 * l.horizon());
}

TEST_CASE("surface mass honors the alpha^(2(gamma-1)) bound", "[sheet]") {
    SheetGridOptions opt;
    opt.alpha_min = 0.01;
    for (auto [h, seed] : std::vector<std::pair<double, int>>{{0.7, 42}, {0.6, 7}, {0.8, 3}}) {
        auto p = generate_fbm(h, 2, 1 << 11, 1.0, seed);
        SheetGrid g(p, kernel_epanechnikov(), h - 0.05, opt);
        auto mass = surface_mass(g);
        REQUIRE(mass.total >= 0.0);
        REQUIRE(mass.total <= 1.1 * mass.bound_prediction);
    }
}

TEST_CASE("surface mass is stable under alpha-grid refinement on fbm", "[sheet]") {
    auto p = generate_fbm(0.7, 2, 1 << 12, 1.0, 42);
    SheetGridOptions coarse, fine;
    coarse.alpha_min = 0.01;
    fine.alpha_min = 0.01;
    fine.rho = std::pow(2.0, 0.125);
    SheetGrid gc(p, kernel_epanechnikov(), 0.65, coarse);
    SheetGrid gf(p, kernel_epanechnikov(), 0.65, fine);
    double a = surface_mass(gc).total, b = surface_mass(gf).total;
    REQUIRE(a == Catch::Approx(b).epsilon(0.02));
}

TEST_CASE("band mass decays like alpha^(2(gamma-1)) across decades", "[sheet]") {
    auto p = generate_fbm(0.7, 2, 1 << 12, 1.0, 42);
    SheetGridOptions opt;
    opt.alpha_min = 0.01;
    SheetGrid g(p, kernel_epanechnikov(), 0.65, opt);
    auto mass = surface_mass(g);
    std::map<int, std::pair<double, double>> decades;  // decade -> (sum, count)
    for (std::size_t b = 0; b < mass.band_mass.size(); ++b) {
        double a0 = g.alphas()[b], a1 = g.alphas()[b + 1];
        double mid = std::sqrt(a0 * a1);
        double density = mass.band_mass[b] / (a1 - a0);
        double r = density / std::pow(mid, 2.0 * (0.65 - 1.0));
        int dec = static_cast<int>(std::floor(std::log10(mid)));
        decades[dec].first += r;
        decades[dec].second += 1.0;
    }
    std::vector<double> means;
    for (auto& [dec, sc] : decades) means.push_back(sc.first / sc.second);
    REQUIRE(means.size() >= 2);
    double lo = *std::min_element(means.begin(), means.end());
    double hi = *std::max_element(means.begin(), means.end());
    REQUIRE(hi <= 3.0 * lo);
}

TEST_CASE("two-current: zero form, constant path, linearity", "[sheet]") {
    SheetGridOptions opt;
    opt.alpha_min = 0.05;
    auto p = generate_fbm(0.7, 2, 512, 1.0, 11);
    SheetGrid g(p, kernel_epanechnikov(), 0.65, opt);

    TwoForm zero(2, [](const double*, double* out) { out[0] = 0.0; });
    REQUIRE(eval_two_current(g, zero) == 0.0);

    auto c = generate_analytic(AnalyticDescriptor::constant({1.0, -1.0}), 256, 1.0);
    SheetGrid gc(c, kernel_epanechnikov(), 1.0, opt);
    TwoForm area(2, [](const double*, double* out) { out[0] = 1.0; });
    REQUIRE(eval_two_current(gc, area) == 0.0);

    TwoForm psi1(2, [](const double* x, double* out) { out[0] = x[0]; });
    TwoForm psi2(2, [](const double* x, double* out) { out[0] = std::sin(x[1]); });
    double a = 1.7, b = -0.3;
    TwoForm combo(2, [=](const double* x, double* out) { out[0] = a * x[0] + b * std::sin(x[1]); });
    double lhs = eval_two_current(g, combo);
    double rhs = a * eval_two_current(g, psi1) + b * eval_two_current(g, psi2);
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-10).margin(1e-12));

    TwoForm wrong(3, [](const double*, double* out) { out[0] = out[1] = out[2] = 0.0; });
    REQUIRE_THROWS_AS(eval_two_current(g, wrong), std::invalid_argument);
}

TEST_CASE("two-current is bounded by sup|psi| times the mass", "[sheet]") {
    auto p = generate_fbm(0.7, 2, 1 << 11, 1.0, 5);
    SheetGridOptions opt;
    opt.alpha_min = 0.02;
    SheetGrid g(p, kernel_epanechnikov(), 0.65, opt);
    auto desc = builtin("d-gauss-rotation", 2);
    double val = std::abs(eval_two_current(g, *desc.two_form));
    double sup = 0.0;
    std::vector<double> comp(1);
    for (int m = 0; m < g.n_alpha(); ++m)
        for (int j = 0; j < g.n_t(); ++j) {
            desc.two_form->eval(g.value(m, j), comp.data());
            sup = std::max(sup, std::abs(comp[0]));
        }
    REQUIRE(val <= sup * surface_mass(g).total * (1.0 + 1e-9));
}

TEST_CASE("two-current self-refinement on the circle area form", "[sheet]") {
    const double tau = 2.0 * M_PI;
    auto c1 = generate_analytic(AnalyticDescriptor::circle(), 1 << 11, tau);
    auto c2 = generate_analytic(AnalyticDescriptor::circle(), 1 << 12, tau);
    SheetGridOptions coarse, fine;
    coarse.alpha_min = 0.02;
    fine.alpha_min = 0.02;
    fine.rho = std::pow(2.0, 0.125);
    SheetGrid g1(c1, kernel_epanechnikov(), 1.0, coarse);
    SheetGrid g2(c2, kernel_epanechnikov(), 1.0, fine);
    TwoForm area(2, [](const double*, double* out) { out[0] = 1.0; });
    double v1 = eval_two_current(g1, area);
    double v2 = eval_two_current(g2, area);
    REQUIRE(v1 == Catch::Approx(v2).epsilon(0.05));
}

TEST_CASE("graph two-current dimension checks and degenerate cases", "[sheet]") {
    auto l = generate_analytic(AnalyticDescriptor::line({1.0}), 512, 1.0);
    SheetGridOptions opt;
    opt.alpha_min = 0.05;
    SheetGrid g(l, kernel_epanechnikov(), 1.0, opt);
    // dt ^ dx1 on the graph of a line pairs with dalpha, which vanishes away from
    // the boundary layer
    TwoForm psi(2, [](const double*, double* out) { out[0] = 1.0; });
    REQUIRE(std::abs(eval_two_current_graph(g, psi)) < 0.05);

    auto p2 = generate_fbm(0.7, 2, 256, 1.0, 2);
    SheetGrid g2(p2, kernel_epanechnikov(), 0.65, opt);
    TwoForm wrong(2, [](const double*, double* out) { out[0] = 0.0; });
    REQUIRE_THROWS_AS(eval_two_current_graph(g2, wrong), std::invalid_argument);
}
