#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "sbm/bernstein.hpp"
#include "sbm/errors.hpp"
#include "sbm/heatkernel.hpp"

namespace sbm {

enum class command {
    phi_table,
    scaling,
    tails,
    kernel,
    verify,
    green,
    blowup,
};

inline command parse_command(const std::string& s) {
    if (s == "phi-table") return command::phi_table;
    if (s == "scaling") return command::scaling;
    if (s == "tails") return command::tails;
    if (s == "kernel") return command::kernel;
    if (s == "verify") return command::verify;
    if (s == "green") return command::green;
    if (s == "blowup") return command::blowup;
    throw config_error("unknown command '" + s + "'");
}

struct RunConfig {
    LaplaceExponentSpec spec;
    command cmd = command::verify;
    int d = 1;
    std::uint64_t seed = 20240901;
    std::pair<double, double> t_range{1e-3, 1.0};
    int t_count = 12;
    std::pair<double, double> r_range{1e-2, 10.0};
    int r_count = 12;
    std::pair<double, double> lambda_range{1.0, 1e6};
    int lambda_count = 48;
    scaling_target target = scaling_target::phi;
    double epsilon = 0.5;      // tail regime margin
    double L = 8.0;            // interval width
    std::size_t sample_count = 100000;
    EnvelopeConfig envelope;
    envelope_form form = envelope_form::main;
    bool all = false;          // verify --all battery
    std::string out = "out";

    void validate() const {
        spec.validate();
        if (t_count < 2 || r_count < 2 || lambda_count < 2)
            throw config_error("grid counts must be >= 2");
        for (auto rg : {t_range, lambda_range})
            if (!(rg.first > 0) || !(rg.second > rg.first))
                throw config_error("ranges must be positive and increasing");
        if (!(r_range.second > r_range.first) || r_range.first < 0)
            throw config_error("r_range must be nonnegative and increasing");
        if (d < 1) throw config_error("d must be >= 1");
        if ((cmd == command::verify || cmd == command::green || cmd == command::blowup) && d > 3)
            throw config_error("this command needs the Fourier path: d in {1,2,3}");
        if (!(epsilon > 0 && epsilon < 1)) throw config_error("epsilon must be in (0,1)");
        if (!(L > 1)) throw config_error("L must be > 1");
        if (sample_count < 1) throw config_error("sample_count must be >= 1");
        envelope.validate();
    }
};

namespace detail {
inline void expect_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                        const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("unknown key '" + it.key() + "' in " + where);
}

inline std::pair<double, double> read_range(const nlohmann::json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw config_error(key + " must be [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}
} // namespace detail

inline LaplaceExponentSpec spec_from_json(const nlohmann::json& j) {
    LaplaceExponentSpec spec;
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "stable") {
        spec.fam = family::stable;
        spec.alpha = j.at("alpha").get<double>();
    } else if (fam == "geometric_stable") {
        spec.fam = family::geometric_stable;
        spec.beta = j.at("beta").get<double>();
    } else if (fam == "conjugate_geometric") {
        spec.fam = family::conjugate_geometric;
        spec.beta = j.at("beta").get<double>();
    } else if (fam == "conjugate_gamma") {
        spec.fam = family::conjugate_gamma;
    } else if (fam == "pure_drift") {
        spec.fam = family::pure_drift;
        spec.drift_b = j.at("drift_b").get<double>();
    } else if (fam == "user_table") {
        spec.fam = family::user_table;
        for (const auto& p : j.at("points")) {
            if (!p.is_array() || p.size() != 2)
                throw config_error("user_table points must be [lambda, phi] pairs");
            spec.points.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
    } else {
        throw config_error("unknown family '" + fam + "'");
    }
    if (j.contains("drift_b")) spec.drift_b = j.at("drift_b").get<double>();
    spec.validate();
    return spec;
}

inline nlohmann::json spec_to_json(const LaplaceExponentSpec& spec) {
    nlohmann::json j;
    j["family"] = family_name(spec.fam);
    switch (spec.fam) {
        case family::stable: j["alpha"] = spec.alpha; break;
        case family::geometric_stable:
        case family::conjugate_geometric: j["beta"] = spec.beta; break;
        case family::pure_drift: j["drift_b"] = spec.drift_b; break;
        case family::user_table: {
            auto pts = nlohmann::json::array();
            for (auto [l, p] : spec.points) pts.push_back({l, p});
            j["points"] = pts;
            break;
        }
        default: break;
    }
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    detail::expect_keys(j,
                        {"family", "alpha", "beta", "drift_b", "points", "command", "d", "seed",
                         "t_range", "t_count", "r_range", "r_count", "lambda_range",
                         "lambda_count", "target", "epsilon", "L", "sample_count", "envelope",
                         "form", "all", "out"},
                        "config");
    RunConfig cfg;
    cfg.spec = spec_from_json(j);
    if (j.contains("command")) cfg.cmd = parse_command(j.at("command").get<std::string>());
    if (j.contains("d")) cfg.d = j.at("d").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("t_range")) cfg.t_range = detail::read_range(j, "t_range");
    if (j.contains("t_count")) cfg.t_count = j.at("t_count").get<int>();
    if (j.contains("r_range")) cfg.r_range = detail::read_range(j, "r_range");
    if (j.contains("r_count")) cfg.r_count = j.at("r_count").get<int>();
    if (j.contains("lambda_range")) cfg.lambda_range = detail::read_range(j, "lambda_range");
    if (j.contains("lambda_count")) cfg.lambda_count = j.at("lambda_count").get<int>();
    if (j.contains("target")) {
        const std::string t = j.at("target").get<std::string>();
        if (t == "phi") cfg.target = scaling_target::phi;
        else if (t == "H") cfg.target = scaling_target::H;
        else throw config_error("target must be 'phi' or 'H'");
    }
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("L")) cfg.L = j.at("L").get<double>();
    if (j.contains("sample_count")) cfg.sample_count = j.at("sample_count").get<std::size_t>();
    if (j.contains("envelope")) {
        const auto& e = j.at("envelope");
        detail::expect_keys(e, {"a_L", "a_U", "C", "kappa", "eta", "theta"}, "envelope");
        if (e.contains("a_L")) cfg.envelope.a_L = e.at("a_L").get<double>();
        if (e.contains("a_U")) cfg.envelope.a_U = e.at("a_U").get<double>();
        if (e.contains("C")) cfg.envelope.C = e.at("C").get<double>();
        if (e.contains("kappa")) cfg.envelope.kappa = e.at("kappa").get<double>();
        if (e.contains("eta")) cfg.envelope.eta = e.at("eta").get<double>();
        if (e.contains("theta")) cfg.envelope.theta = e.at("theta").get<double>();
    }
    if (j.contains("form")) {
        const std::string f = j.at("form").get<std::string>();
        if (f == "main") cfg.form = envelope_form::main;
        else if (f == "classical") cfg.form = envelope_form::classical;
        else throw config_error("form must be 'main' or 'classical'");
    }
    if (j.contains("all")) cfg.all = j.at("all").get<bool>();
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config validation error in " + path + ": " + e.what());
    }
}

} // namespace sbm
