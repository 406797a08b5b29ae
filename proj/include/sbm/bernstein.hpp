#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbm/errors.hpp"
#include "sbm/mathx.hpp"

namespace sbm {

enum class family {
    stable,              // phi(l) = l^{alpha/2}
    geometric_stable,    // phi(l) = log(1 + l^{beta/2})
    conjugate_geometric, // phi(l) = l / log(1 + l^{beta/2})
    conjugate_gamma,     // phi(l) = l / log(1 + l) - 1
    pure_drift,          // phi(l) = b l
    user_table,          // monotone concave interpolation of (lambda_i, phi_i)
};

inline const char* family_name(family f) {
    switch (f) {
        case family::stable: return "stable";
        case family::geometric_stable: return "geometric_stable";
        case family::conjugate_geometric: return "conjugate_geometric";
        case family::conjugate_gamma: return "conjugate_gamma";
        case family::pure_drift: return "pure_drift";
        case family::user_table: return "user_table";
    }
    return "?";
}

// Single source of truth for one subordinator's Laplace exponent.
struct LaplaceExponentSpec {
    family fam = family::stable;
    double alpha = 1.0;  // stable, in (0,2)
    double beta = 1.0;   // geometric_stable (0,2], conjugate_geometric (0,2)
    double drift_b = 0.0;
    std::vector<std::pair<double, double>> points; // user_table (lambda_i, phi_i)

    void validate() const {
        switch (fam) {
            case family::stable:
                if (!(alpha > 0 && alpha < 2)) throw config_error("alpha out of (0,2)");
                break;
            case family::geometric_stable:
                if (!(beta > 0 && beta <= 2)) throw config_error("beta out of (0,2]");
                break;
            case family::conjugate_geometric:
                if (!(beta > 0 && beta < 2)) throw config_error("beta out of (0,2)");
                break;
            case family::conjugate_gamma:
                break;
            case family::pure_drift:
                if (!(drift_b > 0)) throw config_error("pure_drift requires drift_b > 0");
                break;
            case family::user_table: {
                if (points.size() < 4) throw config_error("user_table needs >= 4 points");
                for (std::size_t i = 0; i < points.size(); ++i) {
                    if (!(points[i].first > 0) || !(points[i].second > 0))
                        throw config_error("user_table points must be positive");
                    if (i > 0 && !(points[i].first > points[i - 1].first))
                        throw config_error("user_table lambda_i must be strictly increasing");
                    if (i > 0 && !(points[i].second > points[i - 1].second))
                        throw config_error("user_table phi_i must be strictly increasing");
                }
                // concavity of the interpolated data: divided differences non-increasing
                for (std::size_t i = 2; i < points.size(); ++i) {
                    const double s0 = (points[i - 1].second - points[i - 2].second) /
                                      (points[i - 1].first - points[i - 2].first);
                    const double s1 = (points[i].second - points[i - 1].second) /
                                      (points[i].first - points[i - 1].first);
                    if (s1 > s0 * (1 + 1e-9))
                        throw config_error("user_table data is not concave");
                }
                break;
            }
        }
        if (drift_b < 0) throw config_error("drift_b must be >= 0");
        if (fam != family::pure_drift && drift_b != 0)
            throw config_error("nonzero drift is only supported via the pure_drift family");
    }

    // Range checks only; the full table scan lives in validate().
    void validate_params() const {
        switch (fam) {
            case family::stable:
                if (!(alpha > 0 && alpha < 2)) throw config_error("alpha out of (0,2)");
                break;
            case family::geometric_stable:
                if (!(beta > 0 && beta <= 2)) throw config_error("beta out of (0,2]");
                break;
            case family::conjugate_geometric:
                if (!(beta > 0 && beta < 2)) throw config_error("beta out of (0,2)");
                break;
            case family::pure_drift:
                if (!(drift_b > 0)) throw config_error("pure_drift requires drift_b > 0");
                break;
            default:
                break;
        }
    }

    bool has_known_levy_tail() const { return fam == family::stable; }

    // Catalog scaling thresholds; the conjugate gamma exponent scales only above
    // lambda_U = 2 on the upper side.
    double lambda_L() const { return 0.0; }
    double lambda_U() const { return fam == family::conjugate_gamma ? 2.0 : 0.0; }
};

namespace detail {

// Taylor coefficients of lambda/log(1+lambda) around 0 (exact rationals).
// phi_conjugate_gamma = sum c_k lambda^k - 1.
inline constexpr std::array<double, 14> conj_gamma_c = {
    1.0,
    0.5,
    -1.0 / 12.0,
    1.0 / 24.0,
    -19.0 / 720.0,
    3.0 / 160.0,
    -863.0 / 60480.0,
    275.0 / 24192.0,
    -33953.0 / 3628800.0,
    8183.0 / 1036800.0,
    -3250433.0 / 479001600.0,
    4671.0 / 788480.0,
    -13695779093.0 / 2615348736000.0,
    2224234463.0 / 475517952000.0,
};

// Monotone cubic interpolation (Fritsch-Carlson) in log-log coordinates.
struct table_interp {
    std::vector<double> x, y, m; // x = log lambda, y = log phi, m = slopes

    explicit table_interp(const std::vector<std::pair<double, double>>& pts) {
        const std::size_t n = pts.size();
        x.resize(n); y.resize(n); m.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = std::log(pts[i].first);
            y[i] = std::log(pts[i].second);
        }
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            m[i] = d[i - 1] * d[i] <= 0 ? 0.0 : 0.5 * (d[i - 1] + d[i]);
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0) { m[i] = m[i + 1] = 0; continue; }
            const double a = m[i] / d[i], b = m[i + 1] / d[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double tau = 3.0 / std::sqrt(s);
                m[i] = tau * a * d[i];
                m[i + 1] = tau * b * d[i];
            }
        }
    }

    double operator()(double lambda) const {
        const double t = std::log(lambda);
        if (t < x.front() - 1e-12 || t > x.back() + 1e-12)
            throw domain_error("user_table: lambda outside the table span");
        std::size_t i = std::upper_bound(x.begin(), x.end(), t) - x.begin();
        if (i == 0) i = 1;
        if (i == x.size()) i = x.size() - 1;
        --i;
        const double h = x[i + 1] - x[i], s = (t - x[i]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return std::exp(h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1]);
    }

    double lo() const { return std::exp(x.front()); }
    double hi() const { return std::exp(x.back()); }
};

inline const table_interp& interp_for(const LaplaceExponentSpec& spec) {
    // Specs are immutable value types; key the cache on the point data.
    thread_local std::vector<std::pair<std::vector<std::pair<double, double>>, table_interp>> cache;
    for (auto& [pts, itp] : cache)
        if (pts == spec.points) return itp;
    cache.emplace_back(spec.points, table_interp(spec.points));
    return cache.back().second;
}

} // namespace detail

// phi(lambda) alone, evaluable in double / long double / __float128.
// The Laplace inversion needs phi on the positive real axis in quad precision.
template <class R>
R phi_value(const LaplaceExponentSpec& spec, R lambda) {
    if (!(lambda > R(0))) throw domain_error("phi: lambda must be > 0");
    switch (spec.fam) {
        case family::stable:
            return fp::pow(lambda, R(0.5) * R(spec.alpha));
        case family::geometric_stable:
            return fp::log1p(fp::pow(lambda, R(0.5) * R(spec.beta)));
        case family::conjugate_geometric: {
            const R u = fp::pow(lambda, R(0.5) * R(spec.beta));
            return lambda / fp::log1p(u);
        }
        case family::conjugate_gamma: {
            if (lambda < R(0.05)) {
                R s = R(0), p = R(1);
                for (std::size_t k = 1; k < detail::conj_gamma_c.size(); ++k) {
                    p *= lambda;
                    s += R(detail::conj_gamma_c[k]) * p;
                }
                return s;
            }
            return lambda / fp::log1p(lambda) - R(1);
        }
        case family::pure_drift:
            return R(spec.drift_b) * lambda;
        case family::user_table:
            return R(detail::interp_for(spec)(static_cast<double>(lambda)));
    }
    throw domain_error("phi: unknown family");
}

// One evaluation of phi with derivative bookkeeping.
struct BernsteinEval {
    double lambda = 0;
    double phi = 0;
    double phi_prime = 0;
    double phi_second = 0;
    double H = 0; // phi - lambda phi'
};

// Richardson-extrapolated central differences, step h (two levels). The value
// type of the callable sets the attainable accuracy; the second difference
// loses ~eps f / (f'' h^2) to cancellation.
template <class F, class R>
std::pair<R, R> fd_derivatives(F&& f, R lambda, R h) {
    auto d1 = [&](R hh) { return (f(lambda + hh) - f(lambda - hh)) / (2 * hh); };
    auto d2 = [&](R hh) { return (f(lambda + hh) - 2 * f(lambda) + f(lambda - hh)) / (hh * hh); };
    const R p1 = (4 * d1(h / 2) - d1(h)) / 3;
    const R p2 = (4 * d2(h / 2) - d2(h)) / 3;
    return {p1, p2};
}

inline BernsteinEval eval(const LaplaceExponentSpec& spec, double lambda) {
    if (!(lambda > 0)) throw domain_error("eval: lambda must be > 0");
    spec.validate_params();
    BernsteinEval e;
    e.lambda = lambda;
    using ld = long double;
    const ld l = lambda;
    switch (spec.fam) {
        case family::stable: {
            const ld a = 0.5L * spec.alpha;
            const ld p = std::pow(l, a);
            e.phi = double(p);
            e.phi_prime = double(a * p / l);
            e.phi_second = double(a * (a - 1) * p / (l * l));
            e.H = double((1 - a) * p);
            break;
        }
        case family::geometric_stable: {
            const ld b2 = 0.5L * spec.beta;
            const ld u = std::pow(l, b2);
            const ld g = std::log1p(u);
            const ld w = b2 * u / (1 + u); // = lambda g'
            e.phi = double(g);
            e.phi_prime = double(w / l);
            e.phi_second = double(b2 * u * ((b2 - 1) - u) / ((1 + u) * (1 + u) * l * l));
            if (u < 0.05L) {
                // H = sum_{k>=1} (-1)^{k-1} (1/k - b2) u^k, kills the g - w cancellation
                ld s = 0, p = 1, sign = 1;
                for (int k = 1; k <= 24; ++k) {
                    p *= u;
                    s += sign * (1.0L / k - b2) * p;
                    sign = -sign;
                }
                e.H = double(s);
            } else {
                e.H = double(g - w);
            }
            break;
        }
        case family::conjugate_geometric: {
            const ld b2 = 0.5L * spec.beta;
            const ld u = std::pow(l, b2);
            const ld g = std::log1p(u);
            const ld w = b2 * u / (1 + u);                                // lambda g'
            const ld v = b2 * u * ((b2 - 1) - u) / ((1 + u) * (1 + u));   // lambda^2 g''
            e.phi = double(l / g);
            e.phi_prime = double((g - w) / (g * g));
            e.phi_second = double(-(v * g + 2 * w * g - 2 * w * w) / (l * g * g * g));
            e.H = double(l * w / (g * g));
            break;
        }
        case family::conjugate_gamma: {
            if (l < 0.05L) {
                ld phi = 0, phip = 0, phipp = 0, H = 0, p = 1;
                for (std::size_t k = 1; k < detail::conj_gamma_c.size(); ++k) {
                    const ld c = detail::conj_gamma_c[k];
                    // p = lambda^{k-1} entering the loop
                    phip += ld(k) * c * p;
                    if (k >= 2) phipp += ld(k) * ld(k - 1) * c * p / l;
                    p *= l;
                    phi += c * p;
                    if (k >= 2) H += (1.0L - ld(k)) * c * p;
                }
                e.phi = double(phi);
                e.phi_prime = double(phip);
                e.phi_second = double(phipp);
                e.H = double(H);
            } else {
                const ld g = std::log1p(l);
                const ld w = l / (1 + l); // lambda g'
                e.phi = double(l / g - 1);
                e.phi_prime = double((g - w) / (g * g));
                e.phi_second = double(-(w * (2 * g - w * g - 2 * w)) / (l * g * g * g));
                e.H = double(l * w / (g * g) - 1);
            }
            break;
        }
        case family::pure_drift:
            e.phi = spec.drift_b * lambda;
            e.phi_prime = spec.drift_b;
            e.phi_second = 0;
            e.H = 0;
            break;
        case family::user_table: {
            const auto& itp = detail::interp_for(spec);
            e.phi = itp(lambda);
            const double room = std::min(lambda - itp.lo(), itp.hi() - lambda);
            const double h = std::min(lambda * 1e-4, room / 2.01);
            if (h <= 0) throw domain_error("user_table: lambda too close to the table edge");
            auto [p1, p2] = fd_derivatives([&](double t) { return itp(t); }, lambda, h);
            e.phi_prime = std::max(p1, 0.0);
            e.phi_second = std::min(p2, 0.0);
            e.H = e.phi - lambda * e.phi_prime;
            if (e.H < 0 && e.H > -1e-9 * e.phi) e.H = 0; // interpolation noise
            break;
        }
    }
    return e;
}

// Inverse of the (strictly increasing) Laplace exponent.
// Bracket by doubling/halving from lambda = 1, then bisect in log space.
inline double phi_inverse(const LaplaceExponentSpec& spec, double y) {
    if (!(y > 0)) throw domain_error("phi_inverse: y must be > 0");
    if (spec.fam == family::pure_drift) return y / spec.drift_b;
    if (spec.fam == family::user_table) {
        const auto& itp = detail::interp_for(spec);
        if (y < itp(itp.lo()) || y > itp(itp.hi()))
            throw domain_error("phi_inverse: y outside the table range");
    }
    auto phi = [&](double l) { return phi_value<double>(spec, l); };
    double lo = 1.0, hi = 1.0;
    if (spec.fam == family::user_table) {
        const auto& itp = detail::interp_for(spec);
        lo = itp.lo();
        hi = itp.hi();
    } else {
        int guard = 0;
        while (phi(hi) < y) {
            hi *= 2;
            if (++guard > 2100) throw domain_error("phi_inverse: y above the range of phi");
        }
        guard = 0;
        while (phi(lo) > y) {
            lo /= 2;
            if (++guard > 2100) throw domain_error("phi_inverse: y below the range of phi");
        }
    }
    double mid = std::sqrt(lo * hi);
    for (int it = 0; it < 200; ++it) {
        mid = std::sqrt(lo * hi);
        const double v = phi(mid);
        if (std::fabs(v - y) <= 1e-12 * y) break;
        (v < y ? lo : hi) = mid;
    }
    return mid;
}

// -------- scaling conditions (L)/(U) --------

enum class scaling_target { phi, H };

struct ScalingReport {
    scaling_target target = scaling_target::phi;
    double gamma = 0;   // pooled least-squares index
    double C_L = 0;     // extremal prefactor certifying the lower inequality on the grid
    double lambda_L = 0;
    double delta = 0;   // max per-lambda least-squares index
    double C_U = 0;
    double lambda_U = 0;
    std::pair<double, double> window{0, 0};
    double residual = 0; // max log deviation from the pooled fit
};

inline ScalingReport scaling_indices(const LaplaceExponentSpec& spec, scaling_target target,
                                     std::pair<double, double> window, int n_lambda = 48) {
    if (!(window.first > 0) || !(window.second / window.first >= 1e3))
        throw domain_error("scaling_indices: window must be positive with span >= 1e3");
    auto f = [&](double l) {
        const auto ev = eval(spec, l);
        return target == scaling_target::phi ? ev.phi : ev.H;
    };
    const auto lams = geomspace(window.first, window.second, n_lambda);
    // monotonicity guard (user_table H can be FD noise)
    double prev = 0;
    for (double l : lams) {
        const double v = f(l);
        if (!(v > 0) || (prev > 0 && v < prev * (1 - 1e-9)))
            throw diagnostic_error("scaling_indices: target values are not positive increasing");
        prev = v;
    }
    std::vector<double> all_lx, all_lr;
    std::vector<double> per_lambda_slope;
    for (double l : lams) {
        std::vector<double> lx, lr;
        const double f0 = f(l);
        for (int k = 1; k <= 10; ++k) {
            const double x = std::pow(2.0, k);
            lx.push_back(std::log(x));
            lr.push_back(std::log(f(l * x) / f0));
        }
        per_lambda_slope.push_back(fit_line(lx, lr).slope);
        all_lx.insert(all_lx.end(), lx.begin(), lx.end());
        all_lr.insert(all_lr.end(), lr.begin(), lr.end());
    }
    const auto pooled = fit_line(all_lx, all_lr);
    ScalingReport rep;
    rep.target = target;
    rep.window = window;
    rep.gamma = pooled.slope;
    rep.delta = *std::max_element(per_lambda_slope.begin(), per_lambda_slope.end());
    rep.residual = pooled.max_resid;
    rep.lambda_L = spec.fam == family::user_table ? window.first : spec.lambda_L();
    rep.lambda_U = spec.fam == family::user_table ? window.first : spec.lambda_U();
    double cl = std::numeric_limits<double>::infinity(), cu = 0;
    for (std::size_t i = 0; i < all_lx.size(); ++i) {
        cl = std::min(cl, std::exp(all_lr[i] - rep.gamma * all_lx[i]));
        cu = std::max(cu, std::exp(all_lr[i] - rep.delta * all_lx[i]));
    }
    rep.C_L = cl;
    rep.C_U = cu;
    const double cap = target == scaling_target::phi ? 1.0 : 2.0;
    if (rep.gamma > rep.delta + 1e-9 || rep.delta > cap + 1e-3)
        throw numeric_error("scaling_indices: fitted indices violate the doubling caps");
    return rep;
}

// Asymptotic scaling indices of phi at infinity (regular-variation orders).
// Closed-form for the catalog; fitted on the top decades for user tables.
inline double upper_index_at_infinity(const LaplaceExponentSpec& spec) {
    switch (spec.fam) {
        case family::stable: return 0.5 * spec.alpha;
        case family::geometric_stable: return 0.0;
        case family::conjugate_geometric:
        case family::conjugate_gamma:
        case family::pure_drift: return 1.0;
        case family::user_table: {
            const double hi = detail::interp_for(spec).hi();
            return scaling_indices(spec, scaling_target::phi, {hi / 3e6, hi / 2048}, 16).delta;
        }
    }
    return 1.0;
}

inline double lower_index_at_infinity(const LaplaceExponentSpec& spec) {
    switch (spec.fam) {
        case family::stable: return 0.5 * spec.alpha;
        case family::geometric_stable: return 0.0;
        case family::conjugate_geometric:
        case family::conjugate_gamma:
        case family::pure_drift: return 1.0;
        case family::user_table: {
            const double hi = detail::interp_for(spec).hi();
            return scaling_indices(spec, scaling_target::phi, {hi / 3e6, hi / 2048}, 16).gamma;
        }
    }
    return 0.0;
}

// -------- comparability diagnostics --------

struct ratio_range {
    double inf = std::numeric_limits<double>::infinity();
    double sup = 0;
    bool comparable() const { return sup > 0 && inf > 0 && sup / inf <= 50.0; }
    void take(double v) {
        inf = std::min(inf, v);
        sup = std::max(sup, v);
    }
};

struct ComparabilityReport {
    ratio_range H_over_phi;
    ratio_range lphip_over_phi;       // lambda phi' / phi
    ratio_range H_over_l2phipp;       // H / (lambda^2 (-phi''))
    ratio_range l2phipp_over_H;       // lambda^2 (-phi'') / H
    bool H_phi_monotone_decreasing = true;
};

inline ComparabilityReport comparability(const LaplaceExponentSpec& spec,
                                         std::pair<double, double> window, int n = 200) {
    if (!(window.first > 0) || !(window.second > window.first))
        throw domain_error("comparability: bad window");
    ComparabilityReport rep;
    double prev_hp = std::numeric_limits<double>::infinity();
    for (double l : geomspace(window.first, window.second, std::max(n, 200))) {
        const auto e = eval(spec, l);
        const double hp = e.H / e.phi;
        rep.H_over_phi.take(hp);
        rep.lphip_over_phi.take(l * e.phi_prime / e.phi);
        const double l2pp = l * l * (-e.phi_second);
        if (l2pp > 0 && e.H > 0) {
            rep.H_over_l2phipp.take(e.H / l2pp);
            rep.l2phipp_over_H.take(l2pp / e.H);
        }
        if (hp > prev_hp * (1 + 1e-12)) rep.H_phi_monotone_decreasing = false;
        prev_hp = hp;
    }
    return rep;
}

// -------- Levy measure tails --------

struct LevyTail {
    std::optional<double> mu_tail; // closed form, stable family only
    double upper_bound = 0;        // 2e H(1/r)
    double lower_bound = 0;        // (M^2/2) H(1/r) with fitted M
    double M = 0;
};

// Closed-form stable tail: mu(r, inf) = r^{-alpha/2} / Gamma(1 - alpha/2).
inline double stable_levy_tail(double alpha, double r) {
    return std::pow(r, -0.5 * alpha) / std::tgamma(1 - 0.5 * alpha);
}

inline LevyTail levy_tail(const LaplaceExponentSpec& spec, double r) {
    if (!(r > 0)) throw domain_error("levy_tail: r must be > 0");
    LevyTail out;
    const double Hr = eval(spec, 1.0 / r).H;
    out.upper_bound = 2 * std::exp(1.0) * Hr;
    // M from the fitted upper scaling of H: 2e C_U (2-delta)^{-1} M^{2-delta} = 1/2
    const double w0 = std::max(spec.lambda_U(), 1.0 / r);
    const auto rep = scaling_indices(spec, scaling_target::H, {w0, w0 * 1e4}, 24);
    const double expo = std::max(2.0 - rep.delta, 1e-6);
    double M = std::pow(expo / (4 * std::exp(1.0) * rep.C_U), 1.0 / expo);
    M = std::min(M, 0.999);
    out.M = M;
    out.lower_bound = 0.5 * M * M * Hr;
    if (spec.has_known_levy_tail()) {
        out.mu_tail = stable_levy_tail(spec.alpha, r);
        if (!(*out.mu_tail <= out.upper_bound * (1 + 1e-12)) ||
            !(*out.mu_tail >= out.lower_bound * (1 - 1e-12)))
            throw numeric_error("levy_tail: closed-form tail escapes the H-based sandwich");
    }
    return out;
}

} // namespace sbm
