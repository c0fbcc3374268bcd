#pragma once

#include <functional>
#include <span>
#include <vector>

namespace switchq::numerics {

struct QuadratureSettings {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    int max_depth = 60;

    void check() const;
};

struct SeriesSettings {
    double tail_tol = 1e-12;
    long max_terms = 100000;

    void check() const;
};

/// Exponentially scaled modified Bessel function of the first kind,
/// e^{-x} I_order(x).  Finite for every x >= 0; the plain I_n(x) overflows
/// near x ~ 700 while the scaled form stays in [0, 1].
double bessel_i_scaled(int order, double x);

/// All orders 0..max_order at once, from a single backward-recurrence pass.
/// Much cheaper than max_order+1 separate calls.
std::vector<double> bessel_i_scaled_all(int max_order, double x);

/// Complementary error function (2/sqrt(pi)) * int_x^inf e^{-z^2} dz.
double erfc(double x);

/// Scaled complement e^{x^2} erfc(x); stays representable for large x.
double erfcx(double x);

struct CubicRoots {
    // Real roots of c3 z^3 + c2 z^2 + c1 z + c0, unordered; classification
    // is the caller's concern.
    double r1, r2, r3;
};

/// Roots of a cubic known to have three real roots (possibly coincident).
/// Throws ConvergenceError when the discriminant signals a genuinely complex
/// pair beyond tolerance.
CubicRoots solve_cubic(double c3, double c2, double c1, double c0);

/// Adaptive Gauss-Kronrod integration of f over [a, b].  b may be
/// +infinity, in which case the tail is folded onto [0, 1) via
/// x = a + u/(1-u).  Throws ConvergenceError past max_depth subdivisions.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureSettings& settings = {});

/// Integration over [front, back] with interior breakpoints seeding the
/// subdivision.  Use when the integrand has known narrow features the
/// top-level Kronrod pass would step over.
double integrate_segments(const std::function<double(double)>& f,
                          std::span<const double> breakpoints,
                          const QuadratureSettings& settings = {});

/// Sum of term(k) for k >= start, truncated once 5 consecutive terms have
/// magnitude below tail_tol.  Throws ConvergenceError when max_terms is
/// exhausted before the stop rule fires.
double sum_series(const std::function<double(long)>& term, long start,
                  const SeriesSettings& settings = {});

} // namespace switchq::numerics
