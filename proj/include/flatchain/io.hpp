#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chain.hpp"
#include "common.hpp"
#include "path.hpp"
#include "scaling.hpp"
#include "sheet.hpp"
#include "spectral.hpp"

namespace flatchain {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// ---- path serialization: CSV `t,x1,...,xd` + JSON meta sidecar ----

inline void write_path_csv(const SampledPath& p, std::ostream& os) {
    os << "t";
    for (int i = 1; i <= p.dim(); ++i) os << ",x" << i;
    os << "\n";
    for (int j = 0; j <= p.n_steps(); ++j) {
        os << detail::fmt17(p.time(j));
        for (int i = 0; i < p.dim(); ++i) os << "," << detail::fmt17(p.coord(j, i));
        os << "\n";
    }
}

inline json path_meta_json(const SampledPath& p) {
    json j;
    j["generator"] = p.meta().generator;
    j["seed"] = p.meta().seed;
    if (p.meta().hurst)
        j["hurst"] = *p.meta().hurst;
    else
        j["hurst"] = nullptr;
    j["descriptor"] = p.meta().descriptor;
    j["dim"] = p.dim();
    j["n_steps"] = p.n_steps();
    j["horizon"] = p.horizon();
    return j;
}

inline SampledPath read_path_csv(std::istream& is, PathMeta meta = {}) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "read_path_csv: empty input");
    int dim = -1;
    std::vector<double> times, values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        require(row.size() >= 2, "read_path_csv: malformed row");
        if (dim < 0) dim = static_cast<int>(row.size()) - 1;
        require(static_cast<int>(row.size()) == dim + 1, "read_path_csv: ragged rows");
        times.push_back(row[0]);
        values.insert(values.end(), row.begin() + 1, row.end());
    }
    require(times.size() >= 3, "read_path_csv: need at least 3 samples");
    double T = times.back();
    int n = static_cast<int>(times.size()) - 1;
    for (int j = 0; j <= n; ++j)
        require(std::abs(times[j] - T * j / n) <= 1e-9 * (1.0 + T), "read_path_csv: nonuniform times");
    return SampledPath(dim, T, std::move(values), std::move(meta));
}

// ---- sheet export: t,alpha,x...,dt...,da...,Jf ----

inline void write_sheet_csv(const SheetGrid& g, std::ostream& os) {
    const int d = g.dim();
    os << "t,alpha";
    for (int i = 1; i <= d; ++i) os << ",x" << i;
    for (int i = 1; i <= d; ++i) os << ",dt" << i;
    for (int i = 1; i <= d; ++i) os << ",da" << i;
    os << ",Jf\n";
    for (int m = 0; m < g.n_alpha(); ++m)
        for (int j = 0; j < g.n_t(); ++j) {
            os << detail::fmt17(g.path().time(j)) << "," << detail::fmt17(g.alphas()[m]);
            for (int i = 0; i < d; ++i) os << "," << detail::fmt17(g.value(m, j)[i]);
            for (int i = 0; i < d; ++i) os << "," << detail::fmt17(g.dt(m, j)[i]);
            for (int i = 0; i < d; ++i) os << "," << detail::fmt17(g.dalpha(m, j)[i]);
            os << "," << detail::fmt17(jacobian(g.dt(m, j), g.dalpha(m, j), d)) << "\n";
        }
}

// ---- result JSON ----

inline json chain_result_json(const ChainIntegralResult& r) {
    json j;
    j["value_at_alpha_min"] = r.value_at_alpha_min;
    j["extrapolated_value"] = r.extrapolated_value;
    j["extrapolated"] = r.extrapolated;
    j["extrapolation_exponent"] = r.extrapolation_exponent;
    j["fit_slope"] = r.fit_slope;
    j["fit_residual"] = r.fit_residual;
    j["terms"] = {{"t_dphi", r.terms.t_dphi},
                  {"top_edge", r.terms.top_edge},
                  {"right_edge", r.terms.right_edge},
                  {"left_edge", r.terms.left_edge}};
    j["stokes_residual"] = r.stokes_residual;
    j["residual_tolerance"] = r.residual_tolerance;
    j["alpha_sequence"] = r.alpha_sequence;
    j["curve_values"] = r.curve_values;
    return j;
}

inline void write_alpha_curve_csv(const ChainIntegralResult& r, std::ostream& os) {
    os << "alpha,curve_integral\n";
    for (std::size_t i = 0; i < r.alpha_sequence.size(); ++i)
        os << detail::fmt17(r.alpha_sequence[i]) << "," << detail::fmt17(r.curve_values[i]) << "\n";
}

inline json mass_report_json(const MassReport& r) {
    json j;
    j["total"] = r.total;
    j["bound_prediction"] = r.bound_prediction;
    j["holder_constant"] = r.holder_constant;
    j["kappa1"] = r.kappa1;
    j["kappa2"] = r.kappa2;
    j["band_mass"] = r.band_mass;
    j["band_bound"] = r.band_bound;
    return j;
}

inline json sobolev_json(const SobolevEstimate& e) {
    json j;
    j["s"] = e.s;
    j["value"] = e.value;
    j["stderr"] = e.stderr_mean;
    j["tail_trend"] = e.tail_trend;
    j["per_replica"] = e.per_replica;
    return j;
}

inline void write_moment_table_csv(const MomentTable& t, std::ostream& os) {
    os << "k_mag,moment,stderr,bin_size\n";
    for (std::size_t i = 0; i < t.k_mag.size(); ++i)
        os << detail::fmt17(t.k_mag[i]) << "," << detail::fmt17(t.moment[i]) << ","
           << detail::fmt17(t.stderr_[i]) << "," << t.bin_size[i] << "\n";
}

inline void write_strip_report_csv(const StripReport& r, std::ostream& os) {
    os << "n,strip_total,strip_stderr,square_mean,square_stderr\n";
    for (int n = 0; n <= r.n_max; ++n)
        os << n << "," << detail::fmt17(r.strip_total[n]) << "," << detail::fmt17(r.strip_stderr[n])
           << "," << detail::fmt17(r.square_mean[n]) << "," << detail::fmt17(r.square_stderr[n])
           << "\n";
}

// ---- experiment configuration: flat `key = value` document, CLI-overridable ----

class ExperimentConfig {
 public:
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& fallback = "") const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : std::stod(it->second);
    }
    long get_long(const std::string& key, long fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : std::stol(it->second);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        return it->second == "1" || it->second == "true" || it->second == "yes";
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

    std::string serialize() const {
        std::ostringstream os;
        for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
        return os.str();
    }

    static ExperimentConfig parse(std::istream& is) {
        ExperimentConfig cfg;
        std::string line;
        while (std::getline(is, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (!key.empty()) cfg.set(key, value);
        }
        return cfg;
    }

    // FNV-1a over the canonical serialization; embedded in artifacts for provenance.
    std::string hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : serialize()) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

 private:
    std::map<std::string, std::string> kv_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << content;
}

}  // namespace flatchain
