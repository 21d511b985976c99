#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace flatchain {
namespace detail {

inline double poly_eval(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

inline double poly_deriv_eval(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * x + c[i] * static_cast<double>(i);
    return v;
}

// Adaptive Simpson with absolute tolerance.
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 40) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace detail

// A mollifier bump on [-1, 1]: nonnegative, unit mass, piecewise C^1. Stored as a
// piecewise polynomial so one-sided evaluation at kinks is available to quadrature.
class MollifierKernel {
 public:
    struct Piece {
        double lo, hi;
        std::vector<double> coef;  // eta(r) = sum coef[m] * r^m on [lo, hi]
    };

    MollifierKernel(std::string name, std::vector<Piece> pieces)
        : name_(std::move(name)), pieces_(std::move(pieces)) {
        require(!pieces_.empty(), "MollifierKernel: empty piece list");
        require(pieces_.front().lo == -1.0 && pieces_.back().hi == 1.0,
                "MollifierKernel: pieces must cover [-1, 1]");
        for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
            require(pieces_[i].hi == pieces_[i + 1].lo, "MollifierKernel: pieces must be contiguous");
        verify_invariants();
    }

    const std::string& name() const { return name_; }
    const std::vector<Piece>& pieces() const { return pieces_; }

    // Interior kink abscissae (piece boundaries strictly inside the support).
    std::vector<double> kinks() const {
        std::vector<double> k;
        for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) k.push_back(pieces_[i].hi);
        return k;
    }

    double eval(double r) const {
        if (r <= -1.0 || r >= 1.0) return (r == -1.0 || r == 1.0) ? eval_piece(piece_index(r), r) : 0.0;
        return eval_piece(piece_index(r), r);
    }

    // eta'(r); at a kink, the average of the one-sided limits.
    double deriv(double r) const {
        if (r < -1.0 || r > 1.0) return 0.0;
        for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
            if (r == pieces_[i].hi)
                return 0.5 * (detail::poly_deriv_eval(pieces_[i].coef, r) +
                              detail::poly_deriv_eval(pieces_[i + 1].coef, r));
        }
        return detail::poly_deriv_eval(pieces_[piece_index(r)].coef, r);
    }

    double eval_on_piece(std::size_t piece, double r) const { return eval_piece(piece, r); }
    double deriv_on_piece(std::size_t piece, double r) const {
        return detail::poly_deriv_eval(pieces_[piece].coef, r);
    }

    std::size_t piece_index(double r) const {
        for (std::size_t i = 0; i < pieces_.size(); ++i)
            if (r <= pieces_[i].hi || i + 1 == pieces_.size()) return i;
        return pieces_.size() - 1;
    }

 private:
    double eval_piece(std::size_t i, double r) const { return detail::poly_eval(pieces_[i].coef, r); }

    void verify_invariants() const {
        // support and nonnegativity on a fine grid
        for (int j = 0; j <= 4000; ++j) {
            double r = -1.0 + 2.0 * j / 4000.0;
            require(eval(r) >= -1e-14, "MollifierKernel: kernel must be nonnegative");
        }
        require(std::abs(eval(-1.0)) < 1e-12 && std::abs(eval(1.0)) < 1e-12,
                "MollifierKernel: kernel must vanish at the support boundary");
        // unit mass, checked by Richardson-refined trapezoid
        double coarse = trapezoid_mass(2048), fine = trapezoid_mass(4096);
        double richardson = fine + (fine - coarse) / 3.0;
        require(std::abs(richardson - 1.0) < 1e-10, "MollifierKernel: kernel mass must be 1");
    }

    double trapezoid_mass(int n) const {
        double h = 2.0 / n, s = 0.5 * (eval(-1.0) + eval(1.0));
        for (int j = 1; j < n; ++j) s += eval(-1.0 + h * j);
        return s * h;
    }

    std::string name_;
    std::vector<Piece> pieces_;
};

inline MollifierKernel kernel_epanechnikov() {
    return MollifierKernel("epanechnikov", {{-1.0, 1.0, {0.75, 0.0, -0.75}}});
}

inline MollifierKernel kernel_triangle() {
    return MollifierKernel("triangle", {{-1.0, 0.0, {1.0, 1.0}}, {0.0, 1.0, {1.0, -1.0}}});
}

inline MollifierKernel kernel_by_name(const std::string& name) {
    if (name == "epanechnikov" || name == "epa") return kernel_epanechnikov();
    if (name == "triangle" || name == "tri") return kernel_triangle();
    throw std::invalid_argument("unknown kernel: " + name);
}

struct KernelConstants {
    double gamma = 0.0;
    double kappa1 = 0.0;  // int |eta'(r)| |r|^gamma dr
    double kappa2 = 0.0;  // int |eta(r) + r eta'(r)| |r|^gamma dr
};

// Moment constants entering the derivative bounds |dX/dt| <= C kappa1 alpha^(gamma-1)
// and |dX/dalpha| <= C kappa2 alpha^(gamma-1). Adaptive quadrature split at the
// kernel kinks, 0, and sign changes of the integrands.
inline KernelConstants kernel_constants(const MollifierKernel& k, double gamma) {
    require(gamma > 0.0 && gamma <= 1.0, "kernel_constants: gamma must be in (0, 1]");
    KernelConstants out;
    out.gamma = gamma;
    std::vector<double> cuts{-1.0, 0.0, 1.0};
    for (double c : k.kinks()) cuts.push_back(c);
    // locate sign changes of eta + r eta' on a scan grid
    auto w2 = [&](double r) { return k.eval(r) + r * k.deriv(r); };
    for (int j = 0; j < 400; ++j) {
        double a = -1.0 + 2.0 * j / 400.0, b = -1.0 + 2.0 * (j + 1) / 400.0;
        if (w2(a) * w2(b) < 0.0) {
            double lo = a, hi = b;
            for (int it = 0; it < 80; ++it) {
                double m = 0.5 * (lo + hi);
                (w2(lo) * w2(m) <= 0.0 ? hi : lo) = m;
            }
            cuts.push_back(0.5 * (lo + hi));
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-13; }),
               cuts.end());
    auto f1 = [&](double r) { return std::abs(k.deriv(r)) * std::pow(std::abs(r), gamma); };
    auto f2 = [&](double r) { return std::abs(w2(r)) * std::pow(std::abs(r), gamma); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        out.kappa1 += detail::adaptive_simpson(f1, cuts[i], cuts[i + 1], 1e-12);
        out.kappa2 += detail::adaptive_simpson(f2, cuts[i], cuts[i + 1], 1e-12);
    }
    return out;
}

}  // namespace flatchain
