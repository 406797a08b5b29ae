#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sbm/bernstein.hpp"
#include "sbm/mathx.hpp"
#include "sbm/rng.hpp"

using namespace sbm;
using Catch::Approx;

namespace {
LaplaceExponentSpec stable(double a) {
    LaplaceExponentSpec s;
    s.fam = family::stable;
    s.alpha = a;
    return s;
}
LaplaceExponentSpec geo(double b) {
    LaplaceExponentSpec s;
    s.fam = family::geometric_stable;
    s.beta = b;
    return s;
}
LaplaceExponentSpec conj_geo(double b) {
    LaplaceExponentSpec s;
    s.fam = family::conjugate_geometric;
    s.beta = b;
    return s;
}
LaplaceExponentSpec conj_gamma() {
    LaplaceExponentSpec s;
    s.fam = family::conjugate_gamma;
    return s;
}
LaplaceExponentSpec drift(double b) {
    LaplaceExponentSpec s;
    s.fam = family::pure_drift;
    s.drift_b = b;
    return s;
}

std::vector<LaplaceExponentSpec> catalog() {
    return {stable(0.6), stable(1.0), stable(1.4), geo(1.0), geo(2.0),
            conj_geo(0.5), conj_geo(1.0), conj_gamma(), drift(2.0)};
}
} // namespace

TEST_CASE("eval closed forms") {
    // symbolic: H_stable = (1 - a/2) lambda^{a/2}
    const auto e = eval(stable(1.0), 4.0);
    CHECK(e.phi == Approx(2.0).epsilon(1e-12));
    CHECK(e.H == Approx(1.0).epsilon(1e-12));

    CHECK(eval(geo(2.0), std::exp(1.0) - 1).phi == Approx(1.0).epsilon(1e-12));

    // conjugate gamma: phi ~ lambda/2 and H ~ lambda^2/12 near zero
    const double l1 = 1e-6;
    CHECK(eval(conj_gamma(), l1).phi / l1 == Approx(0.5).epsilon(1e-3));
    const double l2 = 1e-3;
    CHECK(eval(conj_gamma(), l2).H / (l2 * l2) == Approx(1.0 / 12.0).epsilon(1e-2));
}

TEST_CASE("eval errors") {
    CHECK_THROWS_AS(eval(stable(1.0), 0.0), domain_error);
    CHECK_THROWS_AS(eval(stable(1.0), -2.0), domain_error);
    auto bad = stable(2.5);
    CHECK_THROWS_AS(eval(bad, 1.0), config_error);
    CHECK_THROWS_WITH(eval(bad, 1.0), "alpha out of (0,2)");

    LaplaceExponentSpec tab;
    tab.fam = family::user_table;
    for (double l : geomspace(0.1, 10.0, 16)) tab.points.emplace_back(l, std::sqrt(l));
    CHECK_THROWS_AS(eval(tab, 100.0), domain_error); // extrapolation
}

TEST_CASE("eval invariants on the catalog") {
    for (const auto& spec : catalog()) {
        double prev_phi = 0;
        for (double l : geomspace(1e-5, 1e7, 49)) {
            const auto e = eval(spec, l);
            INFO(family_name(spec.fam) << " lambda=" << l);
            CHECK(e.phi > prev_phi);
            CHECK(e.phi_prime >= 0);
            CHECK(e.phi_second <= 0);
            CHECK(e.H >= 0);
            CHECK(e.H <= e.phi * (1 + 1e-12));
            // exact half of the second-derivative comparison
            CHECK(0.5 * l * l * (-e.phi_second) <= e.H * (1 + 1e-9) + 1e-300);
            prev_phi = e.phi;
        }
    }
}

TEST_CASE("doubling bounds, quantified") {
    for (const auto& spec : catalog())
        for (double l : geomspace(1e-4, 1e6, 21))
            for (double x : {2.0, 4.0, 8.0}) {
                const auto e0 = eval(spec, l), e1 = eval(spec, l * x);
                CHECK(e1.phi <= x * e0.phi * (1 + 1e-12));
                CHECK(e1.H <= x * x * e0.H * (1 + 1e-10) + 1e-300);
            }
}

TEST_CASE("conjugate gamma attains the doubling bounds as lambda -> 0") {
    const double l = 1e-6, x = 2.0;
    const auto e0 = eval(conj_gamma(), l), e1 = eval(conj_gamma(), l * x);
    CHECK(e1.phi / (x * e0.phi) > 0.99);
    CHECK(e1.H / (x * x * e0.H) > 0.99);
}

TEST_CASE("finite differences agree with closed forms") {
    // validates the machinery behind the user_table derivative path; the
    // extended-precision callable keeps the second difference above its
    // cancellation floor
    for (const auto& spec : catalog()) {
        for (double l : geomspace(1e-2, 1e4, 13)) {
            const auto e = eval(spec, l);
            auto f = [&](long double x) { return phi_value<long double>(spec, x); };
            const auto [p1, p2] = fd_derivatives(f, (long double)l, (long double)l * 1e-4L);
            INFO(family_name(spec.fam) << " lambda=" << l);
            CHECK(double(p1) == Approx(e.phi_prime).epsilon(1e-6));
            if (std::fabs(e.phi_second) > 1e-13 * e.phi / (l * l))
                CHECK(double(p2) == Approx(e.phi_second).epsilon(1e-6).margin(1e-14));
        }
    }
}

TEST_CASE("user table reproduces a sampled exponent") {
    LaplaceExponentSpec tab;
    tab.fam = family::user_table;
    const auto ref = conj_geo(1.0);
    for (double l : geomspace(1e-4, 1e6, 400))
        tab.points.emplace_back(l, eval(ref, l).phi);
    tab.validate();
    for (double l : geomspace(1e-2, 1e4, 17)) {
        const auto et = eval(tab, l);
        const auto er = eval(ref, l);
        CHECK(et.phi == Approx(er.phi).epsilon(1e-6));
        CHECK(et.phi_prime == Approx(er.phi_prime).epsilon(1e-3));
        CHECK(et.H == Approx(er.H).epsilon(2e-2));
    }
}

TEST_CASE("user table validation") {
    LaplaceExponentSpec tab;
    tab.fam = family::user_table;
    tab.points = {{1, 1}, {2, 3}, {3, 2}, {4, 4}};
    CHECK_THROWS_AS(tab.validate(), config_error); // non-monotone phi
    tab.points = {{1, 1}, {2, 1.2}, {3, 2.5}, {4, 5.0}};
    CHECK_THROWS_AS(tab.validate(), config_error); // convex data
}

TEST_CASE("phi_inverse") {
    CHECK(phi_inverse(stable(1.0), 3.0) == Approx(9.0).epsilon(1e-9));
    for (const auto& spec : catalog()) {
        const double y = eval(spec, 7.0).phi;
        CHECK(phi_inverse(spec, y) == Approx(7.0).epsilon(1e-8));
    }
    // residual contract |phi(l) - y| <= 1e-10 y
    const auto cg = conj_geo(1.0);
    for (double y : {0.01, 1.0, 1e4}) {
        const double l = phi_inverse(cg, y);
        CHECK(std::fabs(eval(cg, l).phi - y) <= 1e-10 * y);
    }
    // conjugate geometric grows like y log y above the crossover
    std::vector<double> band;
    for (double y : {10.0, 100.0, 1000.0, 10000.0})
        band.push_back(phi_inverse(cg, y) / (y * std::log(y)));
    const auto [mn, mx] = std::minmax_element(band.begin(), band.end());
    CHECK(*mx / *mn <= 3.0);
}

TEST_CASE("phi_inverse domain errors") {
    LaplaceExponentSpec tab;
    tab.fam = family::user_table;
    for (double l : geomspace(0.1, 10.0, 16)) tab.points.emplace_back(l, std::sqrt(l));
    CHECK_THROWS_AS(phi_inverse(tab, 1e6), domain_error);
    CHECK_THROWS_AS(phi_inverse(stable(1.0), -1.0), domain_error);
}

TEST_CASE("inverse round trip and lower scaling on grids") {
    for (const auto& spec : catalog()) {
        for (double l : geomspace(1e-3, 1e5, 9)) {
            const double y = eval(spec, l).phi;
            const double back = phi_inverse(spec, y);
            CHECK(back == Approx(l).epsilon(1e-8));
            for (double x : {2.0, 4.0, 8.0})
                CHECK(phi_inverse(spec, y * x) / back >= x * (1 - 1e-9));
        }
    }
}

TEST_CASE("scaling indices: exact power law") {
    const auto rep = scaling_indices(stable(1.2), scaling_target::phi, {1.0, 1e6});
    CHECK(rep.gamma == Approx(0.6).epsilon(1e-3));
    CHECK(rep.delta == Approx(0.6).epsilon(1e-3));
    CHECK(rep.residual < 1e-9);
    CHECK(rep.C_L <= 1.0 + 1e-9);
    CHECK(rep.C_U >= 1.0 - 1e-9);
    CHECK(rep.lambda_L == 0.0);
}

TEST_CASE("scaling indices: conjugate geometric H approaches order 1") {
    const auto rep = scaling_indices(conj_geo(1.0), scaling_target::H, {1e2, 1e8});
    CHECK(rep.gamma >= 0.8);
    CHECK(rep.delta <= 1.2);
    CHECK(rep.gamma <= rep.delta);
}

TEST_CASE("scaling indices: conjugate gamma H is quadratic near zero") {
    const auto rep = scaling_indices(conj_gamma(), scaling_target::H, {1e-6, 1e-1});
    CHECK(rep.gamma >= 1.8);
    CHECK(rep.delta <= 2.0 + 1e-3);
    CHECK(rep.lambda_U == 2.0);
}

TEST_CASE("scaling indices: certified prefactors hold on the grid") {
    for (const auto& spec : {stable(0.8), conj_geo(1.0), conj_gamma()}) {
        const auto rep = scaling_indices(spec, scaling_target::phi, {1e-2, 1e2}, 16);
        for (double l : geomspace(rep.window.first, rep.window.second, 16))
            for (int k = 1; k <= 10; ++k) {
                const double x = std::pow(2.0, k);
                const double ratio = eval(spec, l * x).phi / eval(spec, l).phi;
                CHECK(ratio >= rep.C_L * std::pow(x, rep.gamma) * (1 - 1e-9));
                CHECK(ratio <= rep.C_U * std::pow(x, rep.delta) * (1 + 1e-9));
            }
    }
}

TEST_CASE("scaling indices errors") {
    CHECK_THROWS_AS(scaling_indices(stable(1.0), scaling_target::phi, {1.0, 10.0}),
                    domain_error); // window span < 1e3
    // noisy table values are rejected somewhere along the path
    LaplaceExponentSpec tab;
    tab.fam = family::user_table;
    counter_rng rng(7, 0);
    int k = 0;
    for (double l : geomspace(1e-3, 1e5, 60)) {
        const double jitter = 1 + 0.02 * (rng.uniform(k++) - 0.5);
        tab.points.emplace_back(l, std::sqrt(l) * jitter);
    }
    bool rejected = false;
    try {
        tab.validate();
        scaling_indices(tab, scaling_target::H, {1e-2, 1e4}, 24);
    } catch (const error&) {
        rejected = true;
    }
    CHECK(rejected);
}

TEST_CASE("comparability: stable ratios are exact constants") {
    const auto rep = comparability(stable(1.0), {1e-2, 1e6});
    CHECK(rep.H_over_phi.inf == Approx(0.5).epsilon(1e-12));
    CHECK(rep.H_over_phi.sup == Approx(0.5).epsilon(1e-12));
    CHECK(rep.H_over_phi.comparable());
    CHECK(rep.lphip_over_phi.inf == Approx(0.5).epsilon(1e-12));
    // symbolic: H/(lambda^2 (-phi'')) = (1-a/2) / ((a/2)(1-a/2)) = 2/alpha
    CHECK(rep.H_over_l2phipp.inf == Approx(2.0).epsilon(1e-10));
    CHECK(rep.H_over_l2phipp.sup == Approx(2.0).epsilon(1e-10));
}

TEST_CASE("comparability: conjugate gamma H and phi drift apart") {
    const auto rep = comparability(conj_gamma(), {1e2, 1e8});
    CHECK(rep.H_phi_monotone_decreasing);
    CHECK(rep.H_over_phi.inf <= 0.06);
    CHECK(rep.H_over_phi.sup / rep.H_over_phi.inf >= 3.0);
}

TEST_CASE("comparability: second-derivative ratio stays in band on (L) windows") {
    for (const auto& spec : {stable(0.6), stable(1.0), stable(1.4), conj_geo(1.0)}) {
        const auto rep = comparability(spec, {1e-2, 1e8}, 300);
        INFO(family_name(spec.fam));
        CHECK(rep.l2phipp_over_H.inf >= 0.3 - 1e-9);
        CHECK(rep.l2phipp_over_H.sup <= 1.0 + 1e-9);
    }
    const auto cg = comparability(conj_gamma(), {1e2, 1e8}, 300);
    CHECK(cg.l2phipp_over_H.inf >= 0.3);
    CHECK(cg.l2phipp_over_H.sup <= 1.0);
}

TEST_CASE("levy tail: stable closed form and H sandwich") {
    const auto lt = levy_tail(stable(1.0), 1.0);
    REQUIRE(lt.mu_tail.has_value());
    // inverting phi(l) = int (1-e^{-l y}) mu(dy) for the power law gives
    // mu(r,inf) = r^{-a/2} / Gamma(1-a/2)
    CHECK(*lt.mu_tail == Approx(1.0 / std::sqrt(pi)).epsilon(1e-12));
    CHECK(lt.upper_bound == Approx(2 * std::exp(1.0) * 0.5).epsilon(1e-12));
    CHECK(*lt.mu_tail <= lt.upper_bound);
    CHECK(*lt.mu_tail >= lt.lower_bound);
    CHECK(lt.M > 0);
    CHECK(lt.M < 1);
}

TEST_CASE("levy tail: hard-coded stable constant matches the representation") {
    // quadrature of int (1-e^{-l y}) nu y^{-1-a/2} dy against phi(l) = l^{a/2},
    // with analytic closures of both cut tails
    for (double a : {0.6, 1.0, 1.4}) {
        const double nu = 0.5 * a / std::tgamma(1 - 0.5 * a);
        for (double l : {0.5, 2.0, 7.0}) {
            auto f = [&](double y) {
                return -std::expm1(-l * y) * nu * std::pow(y, -1 - 0.5 * a);
            };
            const double clo = 1e-14, chi = 1e12;
            double acc = nu * l * std::pow(clo, 1 - 0.5 * a) / (1 - 0.5 * a) // 1-e^{-ly} ~ ly
                         + nu * std::pow(chi, -0.5 * a) / (0.5 * a);         // 1-e^{-ly} ~ 1
            const auto edges = geomspace(clo, chi, 320);
            for (std::size_t i = 0; i + 1 < edges.size(); ++i)
                acc += gl_panel<16>(f, edges[i], edges[i + 1]);
            CHECK(acc == Approx(std::pow(l, 0.5 * a)).epsilon(1e-6));
        }
    }
}

TEST_CASE("levy tail: integral lemma at the stable exponent") {
    // mu(r,inf) + r^-2 int_0^r y^2 mu(dy) = 2 r^-2 int_0^r y mu(y,inf) dy
    const double a = 1.0;
    const double nu = 0.5 * a / std::tgamma(1 - 0.5 * a);
    for (double r : {0.1, 1.0, 10.0}) {
        auto f2 = [&](double y) { return y * y * nu * std::pow(y, -1 - 0.5 * a); };
        auto f1 = [&](double y) { return y * stable_levy_tail(a, y); };
        double i2 = 0, i1 = 0;
        const auto edges = geomspace(r * 1e-12, r, 80);
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            i2 += gl_panel<16>(f2, edges[i], edges[i + 1]);
            i1 += gl_panel<16>(f1, edges[i], edges[i + 1]);
        }
        const double lhs = stable_levy_tail(a, r) + i2 / (r * r);
        const double rhs = 2 * i1 / (r * r);
        CHECK(lhs == Approx(rhs).epsilon(1e-8));
        // int_0^r y mu(y,inf) dy <= e r^2 H(1/r)
        CHECK(i1 <= std::exp(1.0) * r * r * eval(stable(a), 1 / r).H);
    }
}
