#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace flatchain {

// A 1-form sum_i phi_i dx^i given by component functions, with a closed-form
// jacobian or a centered finite-difference fallback. For graph-lifted forms the
// dimension is d+1 and slot 0 is time.
class OneForm {
 public:
    using Components = std::function<void(const double* x, double* out)>;          // out[i] = phi_i
    using Jacobian = std::function<void(const double* x, double* out)>;             // out[i*dim+j] = dphi_i/dx_j

    OneForm(int dim, Components comps) : dim_(dim), comps_(std::move(comps)) {}
    OneForm(int dim, Components comps, Jacobian jac)
        : dim_(dim), comps_(std::move(comps)), jac_(std::move(jac)) {}

    int dim() const { return dim_; }
    bool has_closed_jacobian() const { return static_cast<bool>(jac_); }

    void eval(const double* x, double* out) const { comps_(x, out); }

    std::vector<double> eval(const std::vector<double>& x) const {
        std::vector<double> out(dim_);
        comps_(x.data(), out.data());
        return out;
    }

    void jacobian(const double* x, double* out) const {
        if (jac_) {
            jac_(x, out);
            return;
        }
        fd_jacobian(x, out);
    }

    void fd_jacobian(const double* x, double* out) const {
        std::vector<double> xp(x, x + dim_), lo(dim_), hi(dim_);
        for (int j = 0; j < dim_; ++j) {
            double step = fd_step_ * (1.0 + std::abs(x[j]));
            double saved = xp[j];
            xp[j] = saved + step;
            comps_(xp.data(), hi.data());
            xp[j] = saved - step;
            comps_(xp.data(), lo.data());
            xp[j] = saved;
            for (int i = 0; i < dim_; ++i) out[i * dim_ + j] = (hi[i] - lo[i]) / (2.0 * step);
        }
    }

    double fd_step() const { return fd_step_; }

 private:
    int dim_;
    Components comps_;
    Jacobian jac_;
    double fd_step_ = 1e-5;
};

// A 2-form sum_{i<j} psi_ij dx^i ^ dx^j with components packed in lexicographic
// (i,j), i<j order.
class TwoForm {
 public:
    using Components = std::function<void(const double* x, double* out)>;

    TwoForm(int dim, Components comps) : dim_(dim), comps_(std::move(comps)) {}

    int dim() const { return dim_; }
    int n_components() const { return dim_ * (dim_ - 1) / 2; }

    static int pack_index(int dim, int i, int j) {
        // index of (i,j), i<j, in lexicographic order
        return i * dim - i * (i + 1) / 2 + (j - i - 1);
    }

    void eval(const double* x, double* out) const { comps_(x, out); }

 private:
    int dim_;
    Components comps_;
};

// d(phi): (dphi)_{ij} = d_i phi_j - d_j phi_i.
inline TwoForm exterior_derivative(const OneForm& phi) {
    int d = phi.dim();
    return TwoForm(d, [phi, d](const double* x, double* out) {
        std::vector<double> jac(static_cast<std::size_t>(d) * d);
        phi.jacobian(x, jac.data());
        int idx = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                out[idx++] = jac[static_cast<std::size_t>(j) * d + i] - jac[static_cast<std::size_t>(i) * d + j];
    });
}

// Registered test form with closed-form pieces. Fourier transforms follow the
// convention  phi_hat(k) = int e^{-i<k,x>} phi(x) dx.
struct FormDescriptor {
    std::string name;
    int dim = 0;
    enum class Kind { OneForm, TwoForm, Potential } kind = Kind::OneForm;
    std::shared_ptr<OneForm> one_form;
    std::shared_ptr<TwoForm> two_form;
    std::function<double(const double*)> potential;                    // F(x), for gradient forms
    std::function<void(const double*, std::complex<double>*)> fourier;  // phi_hat(k), optional
    std::map<std::string, double> analytic_values;                      // named-curve line integrals
};

namespace detail {

inline void check_jacobian_against_fd(const OneForm& f, int dim, const char* name) {
    if (!f.has_closed_jacobian()) return;
    std::mt19937_64 eng(0x5eedf00dULL);
    auto uni = [&] { return -2.0 + 4.0 * (eng() >> 11) * 0x1.0p-53; };
    std::vector<double> x(dim), closed(static_cast<std::size_t>(dim) * dim),
        fd(static_cast<std::size_t>(dim) * dim);
    for (int probe = 0; probe < 10; ++probe) {
        for (auto& v : x) v = uni();
        f.jacobian(x.data(), closed.data());
        f.fd_jacobian(x.data(), fd.data());
        for (int i = 0; i < dim * dim; ++i) {
            double scale = 1.0 + std::abs(closed[i]);
            if (std::abs(closed[i] - fd[i]) > 1e-4 * scale)
                throw std::runtime_error(std::string("form registration: closed-form jacobian of '") +
                                         name + "' disagrees with finite differences");
        }
    }
}

inline void check_fourier_against_quadrature(const FormDescriptor& d) {
    if (!d.fourier || d.dim > 2) return;
    // tensor trapezoid over [-L, L]^dim; the shipped transforms decay like Gaussians
    const double L = 8.0;
    const int n = 160;
    const double h = 2.0 * L / n;
    std::vector<double> kprobe;
    const double probes[5][2] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, -2.0}, {1.5, 1.0}, {-2.0, 0.5}};
    std::vector<double> x(d.dim), comp(d.dim);
    std::vector<std::complex<double>> expected(d.dim);
    for (int p = 0; p < 5; ++p) {
        std::vector<std::complex<double>> acc(d.dim, 0.0);
        if (d.dim == 1) {
            for (int a = 0; a <= n; ++a) {
                x[0] = -L + a * h;
                double w = (a == 0 || a == n) ? 0.5 : 1.0;
                d.one_form->eval(x.data(), comp.data());
                std::complex<double> ph = std::exp(std::complex<double>(0.0, -probes[p][0] * x[0]));
                acc[0] += w * h * comp[0] * ph;
            }
        } else {
            for (int a = 0; a <= n; ++a)
                for (int b = 0; b <= n; ++b) {
                    x[0] = -L + a * h;
                    x[1] = -L + b * h;
                    double w = ((a == 0 || a == n) ? 0.5 : 1.0) * ((b == 0 || b == n) ? 0.5 : 1.0);
                    d.one_form->eval(x.data(), comp.data());
                    std::complex<double> ph = std::exp(
                        std::complex<double>(0.0, -(probes[p][0] * x[0] + probes[p][1] * x[1])));
                    for (int i = 0; i < d.dim; ++i) acc[i] += w * h * h * comp[i] * ph;
                }
        }
        d.fourier(probes[p], expected.data());
        for (int i = 0; i < d.dim; ++i) {
            double scale = 0.01 * (std::abs(expected[i]) + 0.05);
            if (std::abs(expected[i] - acc[i]) > scale)
                throw std::runtime_error("form registration: Fourier transform of '" + d.name +
                                         "' disagrees with numerical transform");
        }
    }
}

}  // namespace detail

// Shipped forms.  1-forms: "constant" (all-ones), "rotation" = x1 dx2 - x2 dx1,
// "gauss-rotation" = rotation * exp(-|x|^2), "gaussian" = e1 * exp(-|x|^2/2),
// gradients "grad-quadratic" (F=|x|^2/2), "grad-gauss" (F=exp(-|x|^2)), "grad-x1"
// (F=x1), and the time-dependent d=1 graph form "timegauss" on (t,x).
// Potentials: "quadratic", "gauss-bump", "x1". 2-forms: "area" = dx1^dx2 and
// "d-<name>" for every shipped 1-form.
inline FormDescriptor builtin(const std::string& name, int dim);

namespace detail {

inline FormDescriptor build_descriptor(const std::string& name, int dim) {
    require(dim >= 1, "builtin: dim must be >= 1");
    FormDescriptor d;
    d.name = name;
    d.dim = dim;

    auto make_one = [&](OneForm f) { d.one_form = std::make_shared<OneForm>(std::move(f)); };

    if (name == "constant") {
        make_one(OneForm(
            dim, [dim](const double*, double* out) { for (int i = 0; i < dim; ++i) out[i] = 1.0; },
            [dim](const double*, double* out) { std::fill(out, out + dim * dim, 0.0); }));
    } else if (name == "rotation") {
        require(dim == 2, "rotation form is two-dimensional");
        make_one(OneForm(
            2, [](const double* x, double* out) { out[0] = -x[1]; out[1] = x[0]; },
            [](const double*, double* out) { out[0] = 0.0; out[1] = -1.0; out[2] = 1.0; out[3] = 0.0; }));
        d.analytic_values["circle"] = 2.0 * M_PI;
    } else if (name == "gauss-rotation") {
        require(dim == 2, "gauss-rotation form is two-dimensional");
        make_one(OneForm(
            2,
            [](const double* x, double* out) {
                double g = std::exp(-(x[0] * x[0] + x[1] * x[1]));
                out[0] = -x[1] * g;
                out[1] = x[0] * g;
            },
            [](const double* x, double* out) {
                double g = std::exp(-(x[0] * x[0] + x[1] * x[1]));
                out[0] = 2.0 * x[0] * x[1] * g;           // d(-x2 g)/dx1
                out[1] = (-1.0 + 2.0 * x[1] * x[1]) * g;  // d(-x2 g)/dx2
                out[2] = (1.0 - 2.0 * x[0] * x[0]) * g;   // d(x1 g)/dx1
                out[3] = -2.0 * x[0] * x[1] * g;          // d(x1 g)/dx2
            }));
        d.fourier = [](const double* k, std::complex<double>* out) {
            // F[x_j e^{-|x|^2}] = -i (k_j/2) pi^{d/2} e^{-|k|^2/4}, d = 2
            double decay = M_PI * std::exp(-0.25 * (k[0] * k[0] + k[1] * k[1]));
            out[0] = std::complex<double>(0.0, 0.5 * k[1] * decay);
            out[1] = std::complex<double>(0.0, -0.5 * k[0] * decay);
        };
    } else if (name == "gaussian") {
        make_one(OneForm(
            dim,
            [dim](const double* x, double* out) {
                out[0] = std::exp(-0.5 * norm2(x, dim));
                for (int i = 1; i < dim; ++i) out[i] = 0.0;
            },
            [dim](const double* x, double* out) {
                double g = std::exp(-0.5 * norm2(x, dim));
                std::fill(out, out + dim * dim, 0.0);
                for (int j = 0; j < dim; ++j) out[j] = -x[j] * g;
            }));
        d.fourier = [dim](const double* k, std::complex<double>* out) {
            double decay = std::pow(2.0 * M_PI, 0.5 * dim) * std::exp(-0.5 * norm2(k, dim));
            out[0] = decay;
            for (int i = 1; i < dim; ++i) out[i] = 0.0;
        };
    } else if (name == "grad-quadratic" || name == "quadratic") {
        d.kind = name == "quadratic" ? FormDescriptor::Kind::Potential : FormDescriptor::Kind::OneForm;
        d.potential = [dim](const double* x) { return 0.5 * norm2(x, dim); };
        make_one(OneForm(
            dim, [dim](const double* x, double* out) { std::copy(x, x + dim, out); },
            [dim](const double*, double* out) {
                std::fill(out, out + dim * dim, 0.0);
                for (int i = 0; i < dim; ++i) out[i * dim + i] = 1.0;
            }));
    } else if (name == "grad-gauss" || name == "gauss-bump") {
        d.kind = name == "gauss-bump" ? FormDescriptor::Kind::Potential : FormDescriptor::Kind::OneForm;
        d.potential = [dim](const double* x) { return std::exp(-norm2(x, dim)); };
        make_one(OneForm(
            dim,
            [dim](const double* x, double* out) {
                double g = std::exp(-norm2(x, dim));
                for (int i = 0; i < dim; ++i) out[i] = -2.0 * x[i] * g;
            },
            [dim](const double* x, double* out) {
                double g = std::exp(-norm2(x, dim));
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j)
                        out[i * dim + j] = (4.0 * x[i] * x[j] - (i == j ? 2.0 : 0.0)) * g;
            }));
    } else if (name == "grad-x1" || name == "x1") {
        d.kind = name == "x1" ? FormDescriptor::Kind::Potential : FormDescriptor::Kind::OneForm;
        d.potential = [](const double* x) { return x[0]; };
        make_one(OneForm(
            dim,
            [dim](const double*, double* out) {
                out[0] = 1.0;
                for (int i = 1; i < dim; ++i) out[i] = 0.0;
            },
            [dim](const double*, double* out) { std::fill(out, out + dim * dim, 0.0); }));
    } else if (name == "timegauss") {
        // graph-lift form on (t, x), base dimension 1: phi = cos(t) exp(-x^2) dx
        require(dim == 2, "timegauss is a (t,x) graph form; dim must be 2");
        make_one(OneForm(
            2,
            [](const double* p, double* out) {
                out[0] = 0.0;
                out[1] = std::cos(p[0]) * std::exp(-p[1] * p[1]);
            },
            [](const double* p, double* out) {
                double g = std::exp(-p[1] * p[1]);
                out[0] = 0.0;
                out[1] = 0.0;
                out[2] = -std::sin(p[0]) * g;
                out[3] = -2.0 * p[1] * std::cos(p[0]) * g;
            }));
    } else if (name == "area") {
        require(dim >= 2, "area two-form needs dim >= 2");
        d.kind = FormDescriptor::Kind::TwoForm;
        int nc = dim * (dim - 1) / 2;
        d.two_form = std::make_shared<TwoForm>(dim, [nc](const double*, double* out) {
            std::fill(out, out + nc, 0.0);
            out[0] = 1.0;  // dx1 ^ dx2
        });
    } else if (name.rfind("d-", 0) == 0) {
        FormDescriptor base = build_descriptor(name.substr(2), dim);
        require(base.one_form != nullptr, "d-<name> requires a registered 1-form");
        d.kind = FormDescriptor::Kind::TwoForm;
        d.two_form = std::make_shared<TwoForm>(exterior_derivative(*base.one_form));
    } else {
        throw std::invalid_argument("unknown builtin form: " + name);
    }

    if (d.one_form) check_jacobian_against_fd(*d.one_form, dim, name.c_str());
    check_fourier_against_quadrature(d);
    return d;
}

}  // namespace detail

inline FormDescriptor builtin(const std::string& name, int dim) {
    static std::mutex mu;
    static std::map<std::pair<std::string, int>, FormDescriptor> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(name, dim);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, detail::build_descriptor(name, dim)).first;
    return it->second;
}

// Potential value for gradient forms (throws if the descriptor has none).
inline double potential_value(const FormDescriptor& d, const double* x) {
    require(static_cast<bool>(d.potential), "form has no potential");
    return d.potential(x);
}

}  // namespace flatchain
