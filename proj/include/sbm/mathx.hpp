#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <quadmath.h>

#include "sbm/errors.hpp"

namespace sbm {

using quad = __float128;

// Overload set so the Bernstein evaluators can be instantiated at double,
// long double or __float128 (the Laplace inversion needs the latter).
namespace fp {
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double log1p(double x) { return std::log1p(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double pow(double x, double y) { return std::pow(x, y); }
inline double fabs(double x) { return std::fabs(x); }
inline long double exp(long double x) { return std::exp(x); }
inline long double log(long double x) { return std::log(x); }
inline long double log1p(long double x) { return std::log1p(x); }
inline long double sqrt(long double x) { return std::sqrt(x); }
inline long double pow(long double x, long double y) { return std::pow(x, y); }
inline long double fabs(long double x) { return std::fabs(x); }
inline quad exp(quad x) { return expq(x); }
inline quad log(quad x) { return logq(x); }
inline quad log1p(quad x) { return log1pq(x); }
inline quad sqrt(quad x) { return sqrtq(x); }
inline quad pow(quad x, quad y) { return powq(x, y); }
inline quad fabs(quad x) { return fabsq(x); }
} // namespace fp

inline constexpr double pi = 3.141592653589793238462643383279502884;

inline std::vector<double> geomspace(double lo, double hi, int n) {
    if (!(lo > 0) || !(hi > lo) || n < 2)
        throw domain_error("geomspace: need 0 < lo < hi and n >= 2");
    std::vector<double> v(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        v[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

struct line_fit {
    double slope = 0;
    double intercept = 0;
    double max_resid = 0;
};

inline line_fit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw domain_error("fit_line: need >= 2 points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= n; my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    line_fit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < n; ++i)
        f.max_resid = std::max(f.max_resid, std::fabs(y[i] - (f.intercept + f.slope * x[i])));
    return f;
}

// Gauss-Legendre nodes/weights on [-1,1], computed once by Newton iteration.
template <int N>
struct gauss_legendre {
    std::array<double, N> x{}, w{};
    gauss_legendre() {
        for (int i = 0; i < (N + 1) / 2; ++i) {
            double z = std::cos(pi * (i + 0.75) / (N + 0.5));
            double pp = 0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1, p1 = 0;
                for (int j = 0; j < N; ++j) {
                    double p2 = p1;
                    p1 = p0;
                    p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
                }
                pp = N * (z * p0 - p1) / (z * z - 1);
                double dz = p0 / pp;
                z -= dz;
                if (std::fabs(dz) < 1e-16) break;
            }
            x[i] = -z;
            x[N - 1 - i] = z;
            w[i] = w[N - 1 - i] = 2.0 / ((1 - z * z) * pp * pp);
        }
    }
};

template <int N, class F>
double gl_panel(F&& f, double a, double b) {
    static const gauss_legendre<N> rule;
    const double m = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0;
    for (int i = 0; i < N; ++i) s += rule.w[i] * f(m + h * rule.x[i]);
    return h * s;
}

// van Wijngaarden averaging for an alternating (or slowly oscillating) series:
// repeatedly average adjacent partial sums, keep the deepest element.
inline double euler_sum(const std::vector<double>& terms) {
    if (terms.empty()) return 0.0;
    std::vector<double> row(terms.size());
    double acc = 0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        acc += terms[i];
        row[i] = acc;
    }
    while (row.size() > 1) {
        for (std::size_t i = 0; i + 1 < row.size(); ++i)
            row[i] = 0.5 * (row[i] + row[i + 1]);
        row.pop_back();
    }
    return row[0];
}

// integral of f ds over a log-uniform grid given node values, composite
// Simpson in log coordinates (du-integrand is f(s) s).
inline double integral_log_grid(const std::vector<double>& s, const std::vector<double>& f) {
    const std::size_t n = s.size();
    if (n != f.size() || n < 3) throw domain_error("integral_log_grid: need >= 3 nodes");
    const double du = std::log(s[1] / s[0]);
    auto g = [&](std::size_t i) { return f[i] * s[i]; };
    double acc = 0;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) acc += du / 3 * (g(i) + 4 * g(i + 1) + g(i + 2));
    if (i + 1 < n) acc += 0.5 * du * (g(i) + g(i + 1));
    return acc;
}

// Shortest round-trip decimal for report files.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace sbm
