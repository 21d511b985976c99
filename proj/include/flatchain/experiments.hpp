#pragma once

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flatchain.hpp"
#include "io.hpp"

namespace flatchain {

// One experiment run: a deterministic JSON summary (byte-identical for identical
// configs), written artifacts, and an overall pass flag for the exit code.
struct ExperimentOutcome {
    json summary;
    bool pass = true;
    std::vector<std::string> artifacts;
};

namespace detail {

struct AssertionLog {
    json entries = json::array();
    bool pass = true;

    void check(const std::string& name, bool ok, const std::string& detail) {
        entries.push_back({{"name", name}, {"pass", ok}, {"detail", detail}});
        pass = pass && ok;
    }
};

inline std::string num(double v) { return fmt17(v); }

}  // namespace detail

class ExperimentRunner {
 public:
    explicit ExperimentRunner(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
        out_dir_ = cfg_.get_str("out", "out");
        threads_ = static_cast<int>(cfg_.get_long("threads", 1));
    }

    const ExperimentConfig& config() const { return cfg_; }

    SampledPath make_path(std::uint64_t seed_offset = 0) const {
        std::string gen = cfg_.get_str("generator", "fbm");
        int n = static_cast<int>(cfg_.get_long("nsteps", 1 << 12));
        double T = cfg_.get_double("horizon", 1.0);
        int dim = static_cast<int>(cfg_.get_long("dim", 2));
        std::uint64_t seed = static_cast<std::uint64_t>(cfg_.get_long("seed", 1)) + seed_offset;
        if (gen == "fbm" || gen == "bm")
            return generate_fbm(gen == "bm" ? 0.5 : cfg_.get_double("hurst", 0.7), dim, n, T, seed);
        if (gen == "constant") {
            std::vector<double> c(dim, 1.0);
            return generate_analytic(AnalyticDescriptor::constant(c), n, T);
        }
        if (gen == "line") {
            std::vector<double> v(dim, 0.0);
            v[0] = 1.0;
            return generate_analytic(AnalyticDescriptor::line(v), n, T);
        }
        if (gen == "circle") return generate_analytic(AnalyticDescriptor::circle(), n, T);
        if (gen == "table") {
            std::ifstream is(cfg_.get_str("path_file", ""));
            require(static_cast<bool>(is), "experiment: cannot open path_file");
            return read_path_csv(is);
        }
        throw std::invalid_argument("experiment: unknown generator '" + gen + "'");
    }

    double declared_gamma(const SampledPath& p) const {
        if (cfg_.has("gamma")) return cfg_.get_double("gamma", 0.65);
        if (p.meta().hurst) return std::max(0.05, *p.meta().hurst - 0.05);
        return 1.0;
    }

    SheetGrid make_grid(const SampledPath& p) const {
        SheetGridOptions opt;
        opt.alpha_min = cfg_.get_double("alpha_min", 0.02);
        opt.rho = cfg_.get_double("rho", std::pow(2.0, 0.25));
        opt.threads = threads_;
        return SheetGrid(p, kernel_by_name(cfg_.get_str("kernel", "epanechnikov")),
                         declared_gamma(p), opt);
    }

    ExperimentOutcome run(const std::string& subcommand) {
        std::filesystem::create_directories(out_dir_);
        if (subcommand == "gen-path") return run_gen_path();
        if (subcommand == "surface-mass") return run_surface_mass();
        if (subcommand == "chain-integrate") return run_chain();
        if (subcommand == "oracle-compare") return run_oracle_compare();
        if (subcommand == "spectral") return run_spectral();
        if (subcommand == "scaling") return run_scaling();
        throw std::invalid_argument("unknown subcommand: " + subcommand);
    }

    ExperimentOutcome run_gen_path() {
        auto p = make_path();
        ExperimentOutcome out;
        std::string base = artifact_base("path");
        {
            std::ofstream os(base + ".csv");
            write_path_csv(p, os);
            out.artifacts.push_back(base + ".csv");
        }
        write_text_file(base + ".meta.json", path_meta_json(p).dump(2) + "\n");
        out.artifacts.push_back(base + ".meta.json");
        out.summary = header("gen-path");
        out.summary["path"] = path_meta_json(p);
        out.summary["pass"] = true;
        finalize(out, "gen-path");
        return out;
    }

    ExperimentOutcome run_surface_mass() {
        auto p = make_path();
        auto grid = make_grid(p);
        auto mass = surface_mass(grid);
        detail::AssertionLog log;
        log.check("mass_bound", mass.total <= 1.1 * mass.bound_prediction,
                  detail::num(mass.total) + " <= 1.1 * " + detail::num(mass.bound_prediction));
        ExperimentOutcome out;
        out.summary = header("surface-mass");
        out.summary["mass"] = mass_report_json(mass);
        out.summary["assertions"] = log.entries;
        out.summary["pass"] = log.pass;
        out.pass = log.pass;
        if (cfg_.get_bool("export_sheet", false)) {
            std::string f = artifact_base("sheet") + ".csv";
            std::ofstream os(f);
            write_sheet_csv(grid, os);
            out.artifacts.push_back(f);
        }
        finalize(out, "surface-mass");
        return out;
    }

    ExperimentOutcome run_chain() {
        auto p = make_path();
        auto grid = make_grid(p);
        bool graph = cfg_.get_bool("graph_lift", false);
        std::string form_name = cfg_.get_str("form", graph ? "timegauss" : "rotation");
        auto desc = builtin(form_name, grid.dim() + (graph ? 1 : 0));
        require(desc.one_form != nullptr, "chain-integrate: named form is not a 1-form");
        ChainOptions copt;
        if (cfg_.has("exponent")) copt.exponent = cfg_.get_double("exponent", 0.0);
        copt.fit_window = static_cast<int>(cfg_.get_long("fit_window", 4));
        auto r = graph ? chain_integral_graph(grid, *desc.one_form, copt)
                       : chain_integral(grid, *desc.one_form, copt);

        detail::AssertionLog log;
        log.check("stokes_residual", std::abs(r.stokes_residual) <= r.residual_tolerance,
                  detail::num(std::abs(r.stokes_residual)) + " <= " +
                      detail::num(r.residual_tolerance));
        if (cfg_.has("expect")) {
            double want = cfg_.get_double("expect", 0.0);
            double rtol = cfg_.get_double("expect_rtol", 1e-3);
            log.check("expected_value",
                      std::abs(r.extrapolated_value - want) <= rtol * std::max(1.0, std::abs(want)),
                      detail::num(r.extrapolated_value) + " vs " + detail::num(want));
        }
        ExperimentOutcome out;
        out.summary = header("chain-integrate");
        out.summary["form"] = form_name;
        out.summary["graph_lift"] = graph;
        out.summary["gamma"] = grid.gamma();
        out.summary["kernel_constants"] = {{"kappa1", grid.constants().kappa1},
                                           {"kappa2", grid.constants().kappa2}};
        out.summary["result"] = chain_result_json(r);
        out.summary["assertions"] = log.entries;
        out.summary["pass"] = log.pass;
        out.pass = log.pass;
        std::string f = artifact_base("alpha-curve") + ".csv";
        std::ofstream os(f);
        write_alpha_curve_csv(r, os);
        out.artifacts.push_back(f);
        finalize(out, "chain-integrate");
        return out;
    }

    ExperimentOutcome run_oracle_compare() {
        auto p = make_path();
        std::string form_name = cfg_.get_str("form", "gauss-rotation");
        auto desc = builtin(form_name, p.dim());
        require(desc.one_form != nullptr, "oracle-compare: named form is not a 1-form");
        const OneForm& phi = *desc.one_form;

        double left = riemann_sum(p, phi, RiemannScheme::Left);
        double right = riemann_sum(p, phi, RiemannScheme::Right);
        double mid = riemann_sum(p, phi, RiemannScheme::Midpoint);
        double lz = lyons_zheng_value(p, phi);
        double g_oracle = cfg_.get_double(
            "gamma_oracle", p.meta().hurst ? std::min(1.0, *p.meta().hurst + 0.25) : 1.0);
        auto yv = young_value(p, phi, g_oracle);

        detail::AssertionLog log;
        double scale = std::max(1.0, std::abs(mid));
        log.check("midpoint_identity", std::abs(mid - 0.5 * (left + right)) <= 1e-12 * scale,
                  "midpoint == (left+right)/2");
        log.check("lyons_zheng_identity", std::abs(lz - mid) <= 1e-12 * scale,
                  "lyons-zheng == midpoint");
        json grad = nullptr;
        if (desc.potential) {
            double exact = gradient_exact(desc.potential, p);
            grad = exact;
            log.check("gradient_exactness", std::abs(yv.value - exact) <= yv.error_estimate + 1e-12,
                      detail::num(yv.value) + " vs exact " + detail::num(exact));
        }
        ExperimentOutcome out;
        out.summary = header("oracle-compare");
        out.summary["form"] = form_name;
        out.summary["left"] = left;
        out.summary["right"] = right;
        out.summary["midpoint"] = mid;
        out.summary["lyons_zheng"] = lz;
        out.summary["young"] = {{"value", yv.value},
                                {"error_estimate", yv.error_estimate},
                                {"monotone", yv.monotone},
                                {"gamma_oracle", g_oracle}};
        out.summary["gradient_exact"] = grad;
        out.summary["assertions"] = log.entries;
        out.summary["pass"] = log.pass;
        out.pass = log.pass;
        finalize(out, "oracle-compare");
        return out;
    }

    ExperimentOutcome run_spectral() {
        std::string mode = cfg_.get_str("mode", "zk");
        double K = cfg_.get_double("K", 12.0);
        int M = static_cast<int>(cfg_.get_long("M", 49));
        WaveGrid grid(static_cast<int>(cfg_.get_long("dim", 2)), K, M);
        RiemannScheme scheme = scheme_by_name(cfg_.get_str("scheme", "left"));
        int replicas = static_cast<int>(cfg_.get_long("replicas", 100));

        detail::AssertionLog log;
        ExperimentOutcome out;
        out.summary = header("spectral");
        out.summary["mode"] = mode;
        out.summary["K"] = K;
        out.summary["M"] = M;
        out.summary["scheme"] = scheme_name(scheme);

        if (mode == "zk") {
            auto p = make_path();
            auto zk = compute_Zk(p, grid, scheme);
            long c = grid.center_index();
            double z0_err = 0.0;
            for (int i = 0; i < p.dim(); ++i)
                z0_err = std::max(z0_err, std::abs(zk.at(c)[i].real() -
                                                   (p.coord(p.n_steps(), i) - p.coord(0, i))));
            log.check("z0_telescoping", z0_err == 0.0, "Z_0 == X_T - X_0");
            std::string f = artifact_base("zk") + ".csv";
            std::ofstream os(f);
            os << "idx";
            for (int i = 0; i < grid.dim(); ++i) os << ",k" << i + 1;
            for (int i = 0; i < grid.dim(); ++i) os << ",re" << i + 1 << ",im" << i + 1;
            os << "\n";
            std::vector<double> kv(grid.dim());
            for (long idx = 0; idx < grid.n_nodes(); ++idx) {
                grid.node(idx, kv.data());
                os << idx;
                for (double v : kv) os << "," << detail::fmt17(v);
                for (int i = 0; i < grid.dim(); ++i)
                    os << "," << detail::fmt17(zk.at(idx)[i].real()) << "," << detail::fmt17(zk.at(idx)[i].imag());
                os << "\n";
            }
            out.artifacts.push_back(f);
        } else if (mode == "reconstruct") {
            auto p = make_path();
            auto desc = builtin(cfg_.get_str("form", "gaussian"), p.dim());
            auto zk = compute_Zk(p, grid, scheme);
            auto rec = reconstruct(desc, zk);
            double direct = riemann_sum(p, *desc.one_form, scheme == RiemannScheme::Midpoint
                                                               ? RiemannScheme::Midpoint
                                                               : RiemannScheme::Left);
            log.check("reconstruction_accuracy",
                      std::abs(rec.value - direct) <= 0.1 * std::max(1e-12, std::abs(direct)),
                      detail::num(rec.value) + " vs direct " + detail::num(direct));
            log.check("imaginary_part", rec.imag_ratio < 0.01,
                      "imag ratio " + detail::num(rec.imag_ratio));
            out.summary["reconstructed"] = rec.value;
            out.summary["imag_ratio"] = rec.imag_ratio;
            out.summary["direct_sum"] = direct;
        } else if (mode == "sobolev") {
            double s = cfg_.get_double("s", 2.0);
            auto gen = [this](int r) { return make_path(static_cast<std::uint64_t>(r)); };
            auto est = sobolev_estimate(gen, replicas, grid, s, scheme, threads_);
            out.summary["sobolev"] = sobolev_json(est);
            log.check("finite", std::isfinite(est.value), "estimate is finite");
        } else if (mode == "algass") {
            auto gen = [this](int r) { return make_path(static_cast<std::uint64_t>(r)); };
            auto table =
                coefficient_moment_table(gen, replicas, grid, scheme,
                                         cfg_.get_double("fit_lo", 4.0),
                                         cfg_.get_double("fit_hi", K), threads_);
            out.summary["slope"] = table.slope;
            bool is_bm = cfg_.get_str("generator", "fbm") == "bm" ||
                         cfg_.get_double("hurst", 0.7) == 0.5;
            if (is_bm && scheme == RiemannScheme::Midpoint)
                log.check("bounded_growth", table.slope >= -0.5 && table.slope <= 0.5,
                          "log-log slope " + detail::num(table.slope));
            std::string f = artifact_base("moments") + ".csv";
            std::ofstream os(f);
            write_moment_table_csv(table, os);
            out.artifacts.push_back(f);
        } else {
            throw std::invalid_argument("spectral: unknown mode '" + mode + "'");
        }
        out.summary["assertions"] = log.entries;
        out.summary["pass"] = log.pass;
        out.pass = log.pass;
        finalize(out, "spectral");
        return out;
    }

    ExperimentOutcome run_scaling() {
        int replicas = static_cast<int>(cfg_.get_long("replicas", 200));
        int n_max = static_cast<int>(cfg_.get_long("nmax", 4));
        int n = static_cast<int>(cfg_.get_long("nsteps", 1 << 15));
        auto rep = scaling_experiment(replicas, n_max,
                                      static_cast<std::uint64_t>(cfg_.get_long("seed", 1)),
                                      static_cast<int>(cfg_.get_long("dim", 2)),
                                      kernel_by_name(cfg_.get_str("kernel", "epanechnikov")), n,
                                      cfg_.get_double("horizon", 3.0), threads_);
        detail::AssertionLog log;
        for (int m = 1; m <= n_max; ++m) {
            double ratio = rep.strip_total[m] / rep.strip_total[0];
            log.check("strip_total_flat_n" + std::to_string(m), ratio >= 0.8 && ratio <= 1.2,
                      "A_n/A_0 = " + detail::num(ratio));
            double halves = rep.square_mean[m] / rep.square_mean[m - 1];
            log.check("square_mean_halves_n" + std::to_string(m), halves >= 0.4 && halves <= 0.6,
                      "a_n/a_{n-1} = " + detail::num(halves));
        }
        // linear growth of partial sums: the divergence signature
        double mean_inc = 0.0;
        for (int m = 1; m <= n_max; ++m) mean_inc += rep.strip_total[m];
        if (n_max >= 1) {
            mean_inc /= n_max;
            log.check("partial_sums_linear",
                      std::abs(mean_inc - rep.strip_total[0]) <= 0.25 * rep.strip_total[0],
                      "mean increment " + detail::num(mean_inc) + " vs A_0 " +
                          detail::num(rep.strip_total[0]));
        }
        ExperimentOutcome out;
        out.summary = header("scaling");
        out.summary["replicas"] = replicas;
        out.summary["n_max"] = n_max;
        out.summary["strip_total"] = rep.strip_total;
        out.summary["strip_stderr"] = rep.strip_stderr;
        out.summary["square_mean"] = rep.square_mean;
        out.summary["square_stderr"] = rep.square_stderr;
        out.summary["assertions"] = log.entries;
        out.summary["pass"] = log.pass;
        out.pass = log.pass;
        std::string f = artifact_base("strips") + ".csv";
        std::ofstream os(f);
        write_strip_report_csv(rep, os);
        out.artifacts.push_back(f);
        finalize(out, "scaling");
        return out;
    }

 private:
    json header(const std::string& sub) const {
        json j;
        j["subcommand"] = sub;
        j["config_hash"] = cfg_.hash();
        json c = json::object();
        for (const auto& [k, v] : cfg_.entries()) c[k] = v;
        j["config"] = c;
        return j;
    }

    std::string artifact_base(const std::string& tag) const {
        return (std::filesystem::path(out_dir_) / (tag + "-" + cfg_.hash())).string();
    }

    void finalize(ExperimentOutcome& out, const std::string& sub) {
        std::string f = artifact_base(sub) + ".json";
        write_text_file(f, out.summary.dump(2) + "\n");
        out.artifacts.push_back(f);
        // timestamps live in a sidecar so the summary stays byte-identical per config
        std::string meta = artifact_base(sub) + ".meta.json";
        json m;
        m["written_unix_time"] = static_cast<long>(::time(nullptr));
        write_text_file(meta, m.dump(2) + "\n");
    }

    ExperimentConfig cfg_;
    std::string out_dir_;
    int threads_ = 1;
};

}  // namespace flatchain
