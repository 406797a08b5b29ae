#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sbm/bernstein.hpp"
#include "sbm/green.hpp"
#include "sbm/heatkernel.hpp"
#include "sbm/subordinator.hpp"

namespace sbm {

struct battery_line {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline LaplaceExponentSpec mk_stable(double a) {
    LaplaceExponentSpec s;
    s.fam = family::stable;
    s.alpha = a;
    return s;
}
inline LaplaceExponentSpec mk_geo(double b) {
    LaplaceExponentSpec s;
    s.fam = family::geometric_stable;
    s.beta = b;
    return s;
}
inline LaplaceExponentSpec mk_conj_geo(double b) {
    LaplaceExponentSpec s;
    s.fam = family::conjugate_geometric;
    s.beta = b;
    return s;
}
inline LaplaceExponentSpec mk_conj_gamma() {
    LaplaceExponentSpec s;
    s.fam = family::conjugate_gamma;
    return s;
}
inline LaplaceExponentSpec mk_drift(double b) {
    LaplaceExponentSpec s;
    s.fam = family::pure_drift;
    s.drift_b = b;
    return s;
}

} // namespace detail

// The fixed invariant battery behind `verify --all`: one line per suite.
inline std::vector<battery_line> run_invariant_battery() {
    using namespace detail;
    std::vector<battery_line> out;
    auto add = [&](const std::string& name, bool ok, const std::string& detail = "") {
        out.push_back({name, ok, detail});
    };

    const std::vector<std::pair<std::string, LaplaceExponentSpec>> catalog = {
        {"stable(0.6)", mk_stable(0.6)},   {"stable(1)", mk_stable(1.0)},
        {"stable(1.4)", mk_stable(1.4)},   {"geometric_stable(1)", mk_geo(1.0)},
        {"conjugate_geometric(1)", mk_conj_geo(1.0)}, {"conjugate_gamma", mk_conj_gamma()},
        {"pure_drift(2)", mk_drift(2.0)},
    };

    // doubling inequalities phi(lx) <= x phi(l), H(lx) <= x^2 H(l)
    {
        bool ok = true;
        std::string bad;
        for (const auto& [nm, spec] : catalog)
            for (double l : geomspace(1e-4, 1e6, 41))
                for (double x : {2.0, 4.0, 8.0}) {
                    const auto e0 = eval(spec, l), e1 = eval(spec, l * x);
                    if (e1.phi > x * e0.phi * (1 + 1e-12) ||
                        e1.H > x * x * e0.H * (1 + 1e-10) + 1e-300) {
                        ok = false;
                        bad = nm + " lambda=" + format_double(l);
                    }
                }
        add("doubling inequalities", ok, bad);
    }

    // inverse round trip and inverse lower scaling
    {
        bool ok = true;
        std::string bad;
        for (const auto& [nm, spec] : catalog) {
            for (double l : geomspace(1e-3, 1e5, 17)) {
                const double y = eval(spec, l).phi;
                const double back = phi_inverse(spec, y);
                if (std::fabs(back - l) > 1e-8 * l) {
                    ok = false;
                    bad = nm + " round-trip lambda=" + format_double(l);
                }
                for (double x : {2.0, 4.0, 8.0}) {
                    const double q = phi_inverse(spec, y * x) / back;
                    if (q < x * (1 - 1e-9)) {
                        ok = false;
                        bad = nm + " inverse scaling lambda=" + format_double(l);
                    }
                }
            }
        }
        add("inverse round-trips and lower scaling", ok, bad);
    }

    // sharpness of the doubling bounds at conjugate_gamma, lambda -> 0+
    {
        const auto spec = mk_conj_gamma();
        const double l = 1e-6, x = 2.0;
        const auto e0 = eval(spec, l), e1 = eval(spec, l * x);
        const double q_phi = e1.phi / (x * e0.phi);
        const double q_H = e1.H / (x * x * e0.H);
        add("conjugate-gamma doubling sharpness", q_phi > 0.99 && q_H > 0.99,
            "phi ratio " + format_double(q_phi) + ", H ratio " + format_double(q_H));
    }

    // normalization of the kernel
    {
        bool ok = true;
        std::string bad;
        struct Case { LaplaceExponentSpec spec; double t; int d; };
        const std::vector<std::pair<std::string, Case>> cases = {
            {"stable(1) d1 t=0.01", {mk_stable(1.0), 0.01, 1}},
            {"stable(1) d1 t=1", {mk_stable(1.0), 1.0, 1}},
            {"conjugate_geometric(1) d1 t=0.05", {mk_conj_geo(1.0), 0.05, 1}},
            {"conjugate_gamma d1 t=0.05", {mk_conj_gamma(), 0.05, 1}},
            {"stable(1) d3 t=0.1", {mk_stable(1.0), 0.1, 3}},
            {"pure_drift(1) d3 t=1", {mk_drift(1.0), 1.0, 3}},
        };
        for (const auto& [nm, c] : cases) {
            auto p = [&](double r) { return p_fourier(c.spec, c.t, r, c.d); };
            const double scale = 1.0 / std::sqrt(phi_inverse(c.spec, 1 / c.t));
            const double mass = c.d == 1 ? 2 * radial_integral(p, 0, scale)
                                         : 4 * pi * radial_integral(p, 2, scale);
            if (std::fabs(mass - 1) > 1e-3) {
                ok = false;
                bad = nm + " mass=" + format_double(mass);
            }
        }
        add("kernel normalization", ok, bad);
    }

    // Chapman-Kolmogorov spot check (d=1): p(2t,0) = 2 int p(t,r)^2 dr
    {
        bool ok = true;
        std::string bad;
        for (const auto& [nm, spec, t] :
             std::vector<std::tuple<std::string, LaplaceExponentSpec, double>>{
                 {"stable(1) t=0.1", mk_stable(1.0), 0.1},
                 {"conjugate_geometric(1) t=0.05", mk_conj_geo(1.0), 0.05}}) {
            auto p2 = [&](double r) {
                const double v = p_fourier(spec, t, r, 1);
                return v * v;
            };
            const double scale = 1.0 / std::sqrt(phi_inverse(spec, 1 / t));
            const double lhs = p_fourier(spec, 2 * t, 0, 1);
            const double rhs = 2 * radial_integral(p2, 0, scale);
            if (std::fabs(lhs - rhs) > 1e-3 * lhs) {
                ok = false;
                bad = nm + " lhs=" + format_double(lhs) + " rhs=" + format_double(rhs);
            }
        }
        add("Chapman-Kolmogorov spot check", ok, bad);
    }

    // radial monotonicity
    {
        bool ok = true;
        std::string bad;
        for (const auto& [nm, spec, t] :
             std::vector<std::tuple<std::string, LaplaceExponentSpec, double>>{
                 {"stable(1) t=0.1", mk_stable(1.0), 0.1},
                 {"conjugate_geometric(1) t=0.05", mk_conj_geo(1.0), 0.05},
                 {"conjugate_gamma t=0.05", mk_conj_gamma(), 0.05}}) {
            double prev = std::numeric_limits<double>::infinity();
            for (double r : geomspace(1e-3, 5.0, 25)) {
                const double v = p_fourier(spec, t, r, 1);
                if (v < 0 || v > prev * (1 + 1e-9)) {
                    ok = false;
                    bad = nm + " r=" + format_double(r);
                }
                prev = v;
            }
        }
        add("kernel positivity and radial monotonicity", ok, bad);
    }

    // chi-square tail sandwich, d = 3
    {
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (double t = 1.0; t <= 50.0; t += 0.5) {
            const double ratio = chi_square_tail(3, t) / (std::sqrt(t) * std::exp(-0.5 * t));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        add("chi-square tail sandwich", hi / lo <= 10.0, "spread " + format_double(hi / lo));
    }

    // Levy-tail identity for the stable family:
    // mu(r,inf) + r^-2 int_0^r y^2 mu(dy) = 2 r^-2 int_0^r y mu(y,inf) dy
    {
        const double alpha = 1.0;
        const double nu = 0.5 * alpha / std::tgamma(1 - 0.5 * alpha); // density coefficient
        bool ok = true;
        std::string bad;
        for (double r : {0.1, 1.0, 10.0}) {
            auto mu_tail = [&](double y) { return stable_levy_tail(alpha, y); };
            auto f2 = [&](double y) { return y * y * nu * std::pow(y, -1 - 0.5 * alpha); };
            auto f1 = [&](double y) { return y * mu_tail(y); };
            double i2 = 0, i1 = 0;
            const auto edges = geomspace(r * 1e-12, r, 64);
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                i2 += gl_panel<16>(f2, edges[i], edges[i + 1]);
                i1 += gl_panel<16>(f1, edges[i], edges[i + 1]);
            }
            const double lhs = mu_tail(r) + i2 / (r * r);
            const double rhs = 2 * i1 / (r * r);
            if (std::fabs(lhs - rhs) > 1e-8 * rhs) {
                ok = false;
                bad = "r=" + format_double(r);
            }
            // Lemma (ii): int_0^r y mu(y,inf) dy <= e r^2 H(1/r)
            if (i1 > std::exp(1.0) * r * r * eval(mk_stable(alpha), 1 / r).H) {
                ok = false;
                bad = "lemma(ii) r=" + format_double(r);
            }
        }
        add("Levy-tail identity (stable)", ok, bad);
    }

    return out;
}

} // namespace sbm
