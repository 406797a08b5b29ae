#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sbm/heatkernel.hpp"

using namespace sbm;
using Catch::Approx;

namespace {
LaplaceExponentSpec stable(double a) {
    LaplaceExponentSpec s;
    s.fam = family::stable;
    s.alpha = a;
    return s;
}
LaplaceExponentSpec conj_geo(double b) {
    LaplaceExponentSpec s;
    s.fam = family::conjugate_geometric;
    s.beta = b;
    return s;
}
LaplaceExponentSpec geo(double b) {
    LaplaceExponentSpec s;
    s.fam = family::geometric_stable;
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

// rotationally invariant Cauchy kernel in d dimensions
double cauchy(double t, double r, int d) {
    return std::tgamma(0.5 * (d + 1)) / std::pow(pi, 0.5 * (d + 1)) * t /
           std::pow(t * t + r * r, 0.5 * (d + 1));
}
} // namespace

TEST_CASE("p_fourier closed forms") {
    CHECK(p_fourier(stable(1.0), 1.0, 1.0, 1) == Approx(1 / (2 * pi)).epsilon(1e-6));
    CHECK(p_fourier(drift(1.0), 1.0, 0.0, 1) ==
          Approx(std::pow(4 * pi, -0.5)).epsilon(1e-6));
    CHECK(p_fourier(stable(1.0), 1.0, 1.0, 3) == Approx(1 / (4 * pi * pi)).epsilon(1e-5));
    CHECK(p_fourier(stable(1.0), 1.0, 1.0, 2) == Approx(cauchy(1, 1, 2)).epsilon(1e-5));
    // Gaussian kernel everywhere for the drift exponent
    for (double r : {0.0, 0.5, 2.0})
        CHECK(p_fourier(drift(1.0), 0.5, r, 3) ==
              Approx(std::pow(2 * pi, -1.5) * std::exp(-r * r / 2)).epsilon(1e-6));
    CHECK_THROWS_AS(p_fourier(stable(1.0), 0.0, 1.0, 1), domain_error);
    CHECK_THROWS_AS(p_fourier(stable(1.0), 1.0, 1.0, 4), domain_error);
}

TEST_CASE("p_fourier hits the Cauchy oracle on a hard grid") {
    for (double t : {1e-3, 0.03, 1.0})
        for (double r : {0.0, 0.01, 0.63, 10.0})
            CHECK(p_fourier(stable(1.0), t, r, 1) == Approx(cauchy(t, r, 1)).epsilon(1e-6));
}

TEST_CASE("p_subordinate agrees with the Cauchy oracle") {
    const SubordinatorLaw lw(stable(1.0), 1.0);
    const auto q = p_subordinate(lw, 1.0, 1, subord_mode::quadrature);
    CHECK(q.value == Approx(1 / (2 * pi)).epsilon(1e-3));
    CHECK(q.stderr_ == 0.0);
    const auto mc = p_subordinate(lw, 1.0, 1, subord_mode::monte_carlo, 100000, 20240901);
    CHECK(std::fabs(mc.value - 1 / (2 * pi)) <= 3 * mc.stderr_);
}

TEST_CASE("p_subordinate point mass short-circuit") {
    const SubordinatorLaw lw(drift(1.0), 1.0);
    const auto q = p_subordinate(lw, 2.0, 3);
    CHECK(q.value == Approx(std::pow(4 * pi, -1.5) * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("geometric stable blow-up onset in the subordination estimator") {
    const SubordinatorLaw lw(geo(1.0), 1.0);
    double prev = 0;
    for (double r : {0.2, 0.1, 0.05}) {
        const auto q = p_subordinate(lw, r, 3, subord_mode::quadrature);
        const double v = q.value * std::pow(r, 3 - 1.0);
        CHECK(v >= prev * (1 - 1e-9));
        prev = v;
    }
}

TEST_CASE("cross-estimator agreement across the catalog") {
    struct Case {
        LaplaceExponentSpec spec;
        std::pair<double, double> ts, rs;
    };
    const std::vector<Case> cases = {
        {stable(1.0), {0.01, 0.5}, {0.05, 2.0}},
        {conj_geo(1.0), {0.01, 0.5}, {0.05, 2.0}},
        {conj_gamma(), {0.05, 0.5}, {0.05, 2.0}},
        {geo(1.0), {0.5, 1.0}, {0.5, 3.0}},
        {drift(1.0), {0.1, 1.0}, {0.05, 1.0}},
    };
    for (const auto& c : cases) {
        for (double t : geomspace(c.ts.first, c.ts.second, 5)) {
            const SubordinatorLaw lw(c.spec, t);
            for (double r : geomspace(c.rs.first, c.rs.second, 5)) {
                const double pf = p_fourier(c.spec, t, r, 1);
                const double ps = p_subordinate(lw, r, 1).value;
                INFO(family_name(c.spec.fam) << " t=" << t << " r=" << r);
                CHECK(std::fabs(ps - pf) / pf <= 1e-2);
            }
        }
    }
}

TEST_CASE("variance warning fires in the deep tail") {
    const SubordinatorLaw lw(stable(1.0), 1e-3);
    const auto mc = p_subordinate(lw, 30.0, 1, subord_mode::monte_carlo, 10000, 3);
    CHECK(mc.variance_warning);
}

TEST_CASE("sbm_tail") {
    const SubordinatorLaw lw(stable(1.0), 1.0);
    // Cauchy CDF: P(|X_1| >= 1) = 1 - (2/pi) arctan(1) = 1/2
    CHECK(sbm_tail(lw, 1.0, 1) == Approx(0.5).margin(1e-3));
    CHECK(sbm_tail(lw, 1e-8, 1) == Approx(1.0).margin(1e-6));
    // d=2: chi-square(2) is the exponential law; spot equality of the two paths
    const double generic = sbm_tail(lw, 1.0, 2);
    auto inner = [&](double ly) {
        const double y = std::exp(ly);
        return 0.5 * std::exp(-0.5 * y) * tail_prob(lw, 1.0 / (2 * y)) * y;
    };
    double direct = 0;
    const auto edges = geomspace(1e-9, 80.0, 80);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        direct += gl_panel<16>(inner, std::log(edges[i]), std::log(edges[i + 1]));
    CHECK(generic == Approx(direct).epsilon(1e-6));
}

TEST_CASE("sbm_tail equals the radial integral of the kernel") {
    for (int d : {1, 3}) {
        const double t = 0.3, r0 = 0.7;
        const SubordinatorLaw lw(stable(1.0), t);
        const double tail = sbm_tail(lw, r0, d);
        auto p = [&](double r) { return p_fourier(stable(1.0), t, r, d); };
        double integral = 0;
        double a = r0;
        for (int k = 0; k < 80; ++k) {
            const double b = 2 * a;
            auto f = [&](double r) {
                return (d == 1 ? 2.0 : 4 * pi * r * r) * p(r);
            };
            const double c = gl_panel<24>(f, a, b);
            integral += c;
            a = b;
            if (c < 1e-9 * integral && k > 2) break;
        }
        INFO("d=" << d);
        CHECK(tail == Approx(integral).epsilon(1e-3));
    }
}

TEST_CASE("chi_square_tail") {
    CHECK(chi_square_tail(2, 2.0) == Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(chi_square_tail(1, 4.0) == Approx(std::erfc(std::sqrt(2.0))).epsilon(1e-12));
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (double t = 1.0; t <= 50.0; t += 0.25) {
        const double ratio = chi_square_tail(3, t) / (std::sqrt(t) * std::exp(-0.5 * t));
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    CHECK(hi / lo <= 10.0);
    CHECK(chi_square_tail(3, 0.0) == 1.0);
}

TEST_CASE("envelope arithmetic at a worked point") {
    EnvelopeConfig cfg;
    cfg.C = 1.0;
    cfg.a_U = 1.0;
    cfg.a_L = 2.0;
    // (t,r) = (0.01, 1): H(1) = 1/2, jump term 0.005, exponential term ~ 0
    const auto env = envelope(stable(1.0), 0.01, 1.0, 1, cfg);
    CHECK(env.regime == kernel_regime::off_diagonal);
    CHECK(env.upper == Approx(0.005).epsilon(1e-10));
    const double p = cauchy(0.01, 1.0, 1);
    CHECK(p <= env.upper);
    // the |x|^{-d}-prefactor variant dominates the kernel too
    CHECK(p <= env.upper_alt);
    // a modest constant closes the lower side as well
    cfg.C = 2.0;
    CHECK(p >= envelope(stable(1.0), 0.01, 1.0, 1, cfg).lower);
}

TEST_CASE("envelope regime boundary consistency") {
    EnvelopeConfig cfg;
    const auto spec = stable(1.0);
    const double r = 0.1;
    const double t_star = 1 / phi_value<double>(spec, 1 / (r * r)); // t phi(r^-2) = 1
    const auto near = envelope(spec, t_star * (1 + 1e-9), r, 1, cfg);
    const auto off = envelope(spec, t_star * (1 - 1e-9), r, 1, cfg);
    CHECK(near.regime == kernel_regime::near_diagonal);
    CHECK(off.regime == kernel_regime::off_diagonal);
    const double factor = std::exp(cfg.a_U) * cfg.C * cfg.C;
    CHECK(near.upper / off.upper <= factor);
    CHECK(off.upper / near.upper <= factor);
}

TEST_CASE("classical envelope") {
    EnvelopeConfig cfg;
    const auto env = envelope(stable(1.0), 1.0, 10.0, 1, cfg, envelope_form::classical);
    CHECK(env.upper == Approx(1e-2).epsilon(1e-9)); // min(1, t r^-1 phi(r^-2))
    CHECK_THROWS_AS(envelope(conj_geo(1.0), 0.1, 1.0, 1, cfg, envelope_form::classical),
                    precondition_error);
}

TEST_CASE("envelope at r = 0 is near-diagonal") {
    EnvelopeConfig cfg;
    const auto env = envelope(stable(1.0), 0.5, 0.0, 3, cfg);
    CHECK(env.regime == kernel_regime::near_diagonal);
    CHECK(env.upper == Approx(std::pow(phi_inverse(stable(1.0), 2.0), 1.5)).epsilon(1e-9));
}

TEST_CASE("near-diagonal verification") {
    // stable d=1 at r=0: p(t,0) = 1/(pi t), phi^{-1}(1/t)^{1/2} = 1/t
    std::vector<std::pair<double, double>> pts;
    for (double t : geomspace(1e-3, 1.0, 8)) pts.emplace_back(t, 0.0);
    auto rep = verify_near_diagonal(stable(1.0), pts, 1);
    CHECK(rep.pass);
    CHECK(rep.constants.at("ratio_inf") == Approx(1 / pi).epsilon(1e-6));
    CHECK(rep.constants.at("ratio_sup") == Approx(1 / pi).epsilon(1e-6));

    // pure drift d=3 at r=0: ratio is (4 pi)^{-3/2}
    rep = verify_near_diagonal(drift(1.0), pts, 3);
    CHECK(rep.pass);
    CHECK(rep.constants.at("ratio_sup") == Approx(std::pow(4 * pi, -1.5)).epsilon(1e-6));

    // conjugate geometric: flat within a factor 10 over two decades of t
    std::vector<std::pair<double, double>> pts2;
    for (double t : geomspace(1e-3, 1e-1, 9)) pts2.emplace_back(t, 0.0);
    rep = verify_near_diagonal(conj_geo(1.0), pts2, 1);
    CHECK(rep.pass);
    CHECK(rep.constants.at("ratio_sup") / rep.constants.at("ratio_inf") <= 10.0);

    // regime gate
    std::vector<std::pair<double, double>> bad = {{1e-3, 10.0}};
    CHECK_THROWS_AS(verify_near_diagonal(stable(1.0), bad, 1), precondition_error);
}

TEST_CASE("main theorem verification, small stable grid") {
    EnvelopeConfig cfg;
    const auto pts = theorem_grid(stable(1.0), {1e-2, 1.0}, {0.05, 5.0}, 8, 8, cfg);
    const auto rep = verify_main_theorem(stable(1.0), pts, 1, cfg);
    CHECK(rep.pass);
    CHECK(rep.constants.at("C") <= 10.0);
    CHECK(rep.constants.at("max_zone_trend") <= 0.3);
}

TEST_CASE("conjugate geometric goes stable-like at large scales") {
    // for t > 1/2 and r > 1/2 the kernel is sandwiched by
    // t^{-d/(2-beta)} ^ t r^{-(d+2-beta)}  (beta = 1, d = 1)
    const auto spec = conj_geo(1.0);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (double t : {0.6, 1.2, 2.4, 4.8})
        for (double r : {0.6, 1.5, 4.0}) {
            const double env = std::min(1.0 / t, t / (r * r));
            const double q = p_fourier(spec, t, r, 1) / env;
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
    CHECK(hi / lo <= 10.0);
    CHECK(lo > 0.05);
    CHECK(hi < 2.0);
}

TEST_CASE("near-diagonal sweep in d = 2") {
    std::vector<std::pair<double, double>> pts;
    for (double t : geomspace(1e-2, 1.0, 6)) pts.emplace_back(t, 0.0);
    const auto rep = verify_near_diagonal(stable(1.0), pts, 2);
    CHECK(rep.pass);
    // Cauchy d=2 at the origin: p(t,0) = Gamma(3/2)/pi^{3/2} t^{-2}
    CHECK(rep.constants.at("ratio_sup") ==
          Approx(std::tgamma(1.5) / std::pow(pi, 1.5)).epsilon(1e-6));
}

TEST_CASE("theorem grid hypothesis gate lists offenders") {
    EnvelopeConfig cfg;
    // conjugate gamma has lambda_U = 2, so r must stay below eta/sqrt(2)
    CHECK_THROWS_AS(theorem_grid(conj_gamma(), {1e-3, 1e-1}, {0.01, 10.0}, 4, 4, cfg),
                    precondition_error);
    try {
        theorem_grid(conj_gamma(), {1e-3, 1e-1}, {0.01, 10.0}, 4, 4, cfg);
    } catch (const precondition_error& e) {
        CHECK(std::string(e.what()).find("r=10") != std::string::npos);
    }
    // compliant window passes
    const auto pts = theorem_grid(conj_gamma(), {1e-3, 1e-1}, {0.01, 0.3}, 4, 4, cfg);
    CHECK(pts.size() == 16);
}

TEST_CASE("blow-up probe") {
    const auto rep = blowup_probe(geo(1.0), 3, {0.2, 0.1, 0.05, 0.025});
    CHECK(rep.pass);
    CHECK(rep.lower_constant > 0.03);
    CHECK(rep.trend_violations <= 1);

    const auto rep2 = blowup_probe(geo(2.0), 3, {0.2, 0.1, 0.05});
    CHECK(rep2.pass);

    CHECK_THROWS_AS(blowup_probe(stable(1.0), 3, {0.1}), precondition_error);
    CHECK_THROWS_AS(blowup_probe(geo(1.0), 1, {0.1}), precondition_error); // d = beta
}

TEST_CASE("stable kernel stays bounded near the diagonal, in contrast") {
    // the (L) family control: p(1, r) has a finite limit as r -> 0
    const double p0 = p_fourier(stable(1.0), 1.0, 0.0, 3);
    for (double r : {0.2, 0.1, 0.05, 0.025})
        CHECK(p_fourier(stable(1.0), 1.0, r, 3) <= p0 * (1 + 1e-9));
}

TEST_CASE("kernel normalization and Chapman-Kolmogorov") {
    const auto spec = stable(1.0);
    const double t = 0.1;
    auto p = [&](double r) { return p_fourier(spec, t, r, 1); };
    const double scale = 1.0 / std::sqrt(phi_inverse(spec, 1 / t));
    CHECK(2 * radial_integral(p, 0, scale) == Approx(1.0).margin(1e-3));
    auto p3 = [&](double r) { return p_fourier(spec, t, r, 3); };
    CHECK(4 * pi * radial_integral(p3, 2, scale) == Approx(1.0).margin(1e-3));
    auto psq = [&](double r) {
        const double v = p_fourier(spec, t, r, 1);
        return v * v;
    };
    CHECK(p_fourier(spec, 2 * t, 0.0, 1) ==
          Approx(2 * radial_integral(psq, 0, scale)).epsilon(1e-3));
}
