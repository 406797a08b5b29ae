#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "sbm/battery.hpp"
#include "sbm/config.hpp"
#include "sbm/green.hpp"
#include "sbm/heatkernel.hpp"
#include "sbm/subordinator.hpp"

namespace sbm::cli {

inline void write_text(const std::string& path, const std::string& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw error("cannot open " + path);
    os << body;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json report_summary(const BoundCheckReport& rep) {
    nlohmann::json j;
    for (const auto& [k, v] : rep.constants) j[k] = v;
    j["pass"] = rep.pass;
    j["worst_point"] = rep.worst_point;
    if (!rep.notes.empty()) j["notes"] = rep.notes;
    return j;
}

inline int run_phi_table(const RunConfig& cfg, const std::string& out) {
    Table tab;
    tab.columns = {"lambda", "phi", "phi_prime", "phi_second", "H"};
    for (double l : geomspace(cfg.lambda_range.first, cfg.lambda_range.second, cfg.lambda_count)) {
        const auto e = eval(cfg.spec, l);
        tab.add_row({l, e.phi, e.phi_prime, e.phi_second, e.H});
    }
    tab.write_csv(out + "/phi_table.csv");
    return 0;
}

inline int run_scaling(const RunConfig& cfg, const std::string& out) {
    const auto rep = scaling_indices(cfg.spec, cfg.target, cfg.lambda_range, cfg.lambda_count);
    nlohmann::json j;
    j["target"] = rep.target == scaling_target::phi ? "phi" : "H";
    j["gamma"] = rep.gamma;
    j["C_L"] = rep.C_L;
    j["lambda_L"] = rep.lambda_L;
    j["delta"] = rep.delta;
    j["C_U"] = rep.C_U;
    j["lambda_U"] = rep.lambda_U;
    j["window"] = {rep.window.first, rep.window.second};
    j["residual"] = rep.residual;
    write_json(out + "/scaling.json", j);
    return 0;
}

inline int run_tails(const RunConfig& cfg, const std::string& out) {
    const auto grid = make_tail_grid(cfg.spec, cfg.t_range, cfg.r_range, cfg.t_count, cfg.r_count,
                                     cfg.epsilon, cfg.sample_count, cfg.seed);
    const auto up = check_upper_tail(cfg.spec, grid);
    const auto low = check_lower_tail(cfg.spec, grid);
    const auto iv = check_interval_prob(cfg.spec, grid, cfg.L);
    const auto two = check_two_sided(cfg.spec, grid);
    up.rows.write_csv(out + "/tail_upper.csv");
    low.rows.write_csv(out + "/tail_lower.csv");
    iv.rows.write_csv(out + "/tail_interval.csv");
    two.rows.write_csv(out + "/tail_two_sided.csv");
    nlohmann::json j;
    j["upper"] = report_summary(up);
    j["lower"] = report_summary(low);
    j["interval"] = report_summary(iv);
    j["two_sided"] = report_summary(two);
    const bool pass = up.pass && low.pass && iv.pass && two.pass;
    j["pass"] = pass;
    write_json(out + "/tails.json", j);
    return pass ? 0 : 1;
}

inline int run_kernel(const RunConfig& cfg, const std::string& out) {
    Table tab;
    tab.columns = {"t", "r", "d", "regime", "p_fourier", "p_subord", "p_stderr",
                   "env_lower", "env_upper", "ratio_lo", "ratio_hi"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t stream = 0;
    for (double t : geomspace(cfg.t_range.first, cfg.t_range.second, cfg.t_count)) {
        const SubordinatorLaw lw(cfg.spec, t);
        for (double r : geomspace(cfg.r_range.first, cfg.r_range.second, cfg.r_count)) {
            KernelPoint kp;
            kp.t = t;
            kp.r = r;
            kp.d = cfg.d;
            if (cfg.d <= 3) kp.p_fourier = p_fourier(cfg.spec, t, r, cfg.d);
            const auto ps = p_subordinate(lw, r, cfg.d, subord_mode::monte_carlo,
                                          cfg.sample_count, cfg.seed, stream++);
            kp.p_subord = ps.value;
            kp.p_stderr = ps.stderr_;
            const auto env = envelope(cfg.spec, t, r, cfg.d, cfg.envelope, cfg.form);
            kp.regime = env.regime;
            kp.env_lower = env.lower;
            kp.env_upper = env.upper;
            const double p = kp.p_fourier.value_or(kp.p_subord);
            tab.add_row({kp.t, kp.r, double(kp.d),
                         kp.regime == kernel_regime::near_diagonal ? 0.0 : 1.0,
                         kp.p_fourier.value_or(nan), kp.p_subord, kp.p_stderr, kp.env_lower,
                         kp.env_upper, p / kp.env_lower, p / kp.env_upper});
        }
    }
    tab.write_csv(out + "/kernel.csv");
    return 0;
}

inline int run_verify_all(const RunConfig&, const std::string& out) {
    const auto lines = run_invariant_battery();
    nlohmann::json j;
    bool all_pass = true;
    for (const auto& l : lines) {
        std::cout << (l.pass ? "[PASS] " : "[FAIL] ") << l.name
                  << (l.detail.empty() ? "" : "  (" + l.detail + ")") << "\n";
        j[l.name] = l.pass;
        all_pass &= l.pass;
    }
    j["pass"] = all_pass;
    write_json(out + "/verify_all.json", j);
    return all_pass ? 0 : 1;
}

inline int run_verify(const RunConfig& cfg, const std::string& out) {
    if (cfg.all) return run_verify_all(cfg, out);
    const auto pts = theorem_grid(cfg.spec, cfg.t_range, cfg.r_range, cfg.t_count, cfg.r_count,
                                  cfg.envelope);
    const auto main_rep = verify_main_theorem(cfg.spec, pts, cfg.d, cfg.envelope);
    std::vector<std::pair<double, double>> near_pts;
    for (auto [t, r] : pts)
        if (classify_regime(cfg.spec, t, r) == kernel_regime::near_diagonal)
            near_pts.emplace_back(t, r);
    main_rep.rows.write_csv(out + "/kernel_verify.csv");
    nlohmann::json j;
    j["C"] = main_rep.constants.at("C");
    j["a_L"] = main_rep.constants.at("a_L");
    j["a_U"] = main_rep.constants.at("a_U");
    j["grid"] = {{"t_min", cfg.t_range.first}, {"t_max", cfg.t_range.second},
                 {"t_count", cfg.t_count},     {"r_min", cfg.r_range.first},
                 {"r_max", cfg.r_range.second}, {"r_count", cfg.r_count},
                 {"d", cfg.d}};
    j["pass"] = main_rep.pass;
    j["worst_point"] = main_rep.worst_point;
    j["max_zone_trend"] = main_rep.constants.at("max_zone_trend");
    if (!near_pts.empty()) {
        const auto near_rep = verify_near_diagonal(cfg.spec, near_pts, cfg.d);
        j["near_diagonal_c"] = near_rep.constants.at("c");
        j["near_diagonal_pass"] = near_rep.pass;
    }
    write_json(out + "/calibration.json", j);
    return main_rep.pass ? 0 : 1;
}

inline int run_green(const RunConfig& cfg, const std::string& out) {
    const auto rep = verify_green(cfg.spec,
                                  geomspace(cfg.r_range.first, cfg.r_range.second, cfg.r_count),
                                  cfg.d);
    rep.rows.write_csv(out + "/green.csv");
    write_json(out + "/green.json", report_summary(rep));
    return rep.pass ? 0 : 1;
}

inline int run_blowup(const RunConfig& cfg, const std::string& out) {
    std::vector<double> rs = geomspace(cfg.r_range.first, cfg.r_range.second, cfg.r_count);
    std::reverse(rs.begin(), rs.end()); // probe downward toward the diagonal
    const auto rep = blowup_probe(cfg.spec, cfg.d, rs);
    Table tab;
    tab.columns = {"r", "p_times_r_power"};
    for (auto [r, v] : rep.points) tab.add_row({r, v});
    tab.write_csv(out + "/blowup.csv");
    nlohmann::json j;
    j["lower_constant"] = rep.lower_constant;
    j["trend_violations"] = rep.trend_violations;
    j["exponent"] = cfg.d - cfg.spec.beta;
    j["pass"] = rep.pass;
    write_json(out + "/blowup.json", j);
    return rep.pass ? 0 : 1;
}

// Dispatch a validated config; writes artifacts under cfg.out.
// Exit codes: 0 pass, 1 bound-check fail, 2 numeric error, 3 config error.
inline int run(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out);
    switch (cfg.cmd) {
        case command::phi_table: return run_phi_table(cfg, cfg.out);
        case command::scaling: return run_scaling(cfg, cfg.out);
        case command::tails: return run_tails(cfg, cfg.out);
        case command::kernel: return run_kernel(cfg, cfg.out);
        case command::verify: return run_verify(cfg, cfg.out);
        case command::green: return run_green(cfg, cfg.out);
        case command::blowup: return run_blowup(cfg, cfg.out);
    }
    throw config_error("unhandled command");
}

} // namespace sbm::cli
