// sbm-lab: numerical laboratory for subordinate Brownian motion heat kernels.
//
//   sbm-lab <command> --config <path> [--seed N] [--out DIR] [--d N] [--all]
//
// Commands: phi-table, scaling, tails, kernel, verify, green, blowup.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbm/cli.hpp"
#include "sbm/config.hpp"

namespace {

void add_command(CLI::App& app, const std::string& name, const std::string& desc,
                 std::vector<std::pair<std::string, CLI::App*>>& subs) {
    auto* sub = app.add_subcommand(name, desc);
    subs.emplace_back(name, sub);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "sbm-lab: two-sided heat kernel, subordinator tail and Green function\n"
        "checks for subordinate Brownian motions driven by a catalog of\n"
        "Bernstein functions.\n\n"
        "Artifacts are CSV tables (UTF-8, LF, '.' decimal, shortest round-trip\n"
        "floats) plus JSON summaries. Column glossary:\n"
        "  phi_table.csv:   lambda,phi,phi_prime,phi_second,H\n"
        "  tail_*.csv:      t,r,regime_lhs,tail_prob,tH,ratio,stderr\n"
        "  kernel*.csv:     t,r,d,regime,p_fourier,p_subord,p_stderr,\n"
        "                   env_lower,env_upper,ratio_lo,ratio_hi\n"
        "  green.csv:       r,d,G,envelope,refined_envelope,ratio\n"
        "  blowup.csv:      r,p_times_r_power\n"
        "Exit codes: 0 pass, 1 bound-check fail, 2 numeric error, 3 config error."};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int d = 0;
    bool all = false;
    bool have_seed = false, have_out = false, have_d = false;

    std::vector<std::pair<std::string, CLI::App*>> subs;
    add_command(app, "phi-table", "tabulate phi, its derivatives and H on a lambda grid", subs);
    add_command(app, "scaling", "fit the scaling indices (gamma, delta) and prefactors", subs);
    add_command(app, "tails", "subordinator tail proposition checks", subs);
    add_command(app, "kernel", "kernel sweep with both estimators and envelopes", subs);
    add_command(app, "verify", "calibrate and verify the theorem sandwiches", subs);
    add_command(app, "green", "Green function computation and envelope check", subs);
    add_command(app, "blowup", "near-diagonal blow-up probe (geometric stable)", subs);

    for (auto& [name, sub] : subs) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--out", out_dir, "override the output directory")
            ->each([&](const std::string&) { have_out = true; });
        sub->add_option("--d", d, "override the dimension")
            ->each([&](const std::string&) { have_d = true; });
        if (name == "verify")
            sub->add_flag("--all", all, "run the full invariant battery");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        sbm::RunConfig cfg = sbm::load_config(config_path);
        for (auto& [name, sub] : subs)
            if (sub->parsed()) cfg.cmd = sbm::parse_command(name);
        if (have_seed) cfg.seed = seed;
        if (have_out) cfg.out = out_dir;
        if (have_d) cfg.d = d;
        if (all) cfg.all = true;
        cfg.validate();
        return sbm::cli::run(cfg);
    } catch (const sbm::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const sbm::numeric_error& e) {
        nlohmann::json diag{{"error", "numeric"}, {"what", e.what()}};
        std::cerr << diag.dump(2) << "\n";
        return 2;
    } catch (const sbm::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
