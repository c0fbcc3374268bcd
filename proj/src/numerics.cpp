#include "switchq/numerics.hpp"
#include "switchq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace switchq::numerics {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Below this argument the ascending series wins; above it the backward
// (Miller) recurrence normalized through the Neumann sum
// ibar_0 + 2 * sum_k ibar_k = 1 is both stable and cheap.
constexpr double kBesselSeriesCutoff = 30.0;

double bessel_series_scaled(int order, double x) {
    // e^{-x} * sum_k (x/2)^{2k+order} / (k! (k+order)!)
    double log_first = order * std::log(x / 2.0) - std::lgamma(order + 1.0) - x;
    if (log_first < -745.0) return 0.0;
    double term = std::exp(log_first);
    double sum = term;
    double q = x * x / 4.0;
    for (int k = 1; k < 400; ++k) {
        term *= q / (static_cast<double>(k) * (k + static_cast<double>(order)));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

int miller_start_order(int max_order, double x) {
    // orders up to ~x carry mass, so the downward pass must start above both
    const double big = std::max(static_cast<double>(max_order), x);
    return static_cast<int>(std::ceil(big)) + 40 +
           static_cast<int>(std::ceil(std::sqrt(40.0 * big)));
}

std::vector<double> bessel_miller_scaled(int max_order, double x) {
    const int start = miller_start_order(max_order, x);
    std::vector<double> u(static_cast<size_t>(start) + 2, 0.0);
    u[static_cast<size_t>(start) + 1] = 0.0;
    u[static_cast<size_t>(start)] = 1e-280;
    for (int k = start; k >= 1; --k) {
        u[static_cast<size_t>(k) - 1] =
            u[static_cast<size_t>(k) + 1] + (2.0 * k / x) * u[static_cast<size_t>(k)];
        if (u[static_cast<size_t>(k) - 1] > 1e270) {
            for (int m = k - 1; m <= start + 1; ++m) u[static_cast<size_t>(m)] *= 1e-270;
        }
    }
    double norm = u[0];
    for (int k = 1; k <= start; ++k) norm += 2.0 * u[static_cast<size_t>(k)];
    std::vector<double> out(static_cast<size_t>(max_order) + 1);
    for (int n = 0; n <= max_order; ++n) out[static_cast<size_t>(n)] = u[static_cast<size_t>(n)] / norm;
    return out;
}

struct GaussKronrod15 {
    // Nodes on [0,1] of the positive half; weights for K15 and embedded G7.
    static constexpr int n = 8;
    static constexpr double node[n] = {
        0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
        0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
    static constexpr double wk[n] = {
        0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
        0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
    static constexpr double wg[4] = {
        0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};
};

struct SegmentResult {
    double kronrod;
    double err;
};

SegmentResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resk = 0.0;
    double resg = 0.0;
    for (int i = 0; i < GaussKronrod15::n; ++i) {
        const double sn = GaussKronrod15::node[i];
        double fv;
        if (sn == 0.0) {
            fv = f(c);
            resk += GaussKronrod15::wk[i] * fv;
            resg += GaussKronrod15::wg[3] * fv;
        } else {
            const double f1 = f(c - h * sn);
            const double f2 = f(c + h * sn);
            resk += GaussKronrod15::wk[i] * (f1 + f2);
            if (i % 2 == 1) resg += GaussKronrod15::wg[i / 2] * (f1 + f2);
        }
    }
    return {resk * h, std::abs(resk - resg) * h};
}

double integrate_seeded(const std::function<double(double)>& f, std::span<const double> points,
                        const QuadratureSettings& settings) {
    struct Seg {
        double a, b, value, err;
        int depth;
        bool retired; // error is dominated by rounding; splitting cannot help
    };
    auto rounding_floor = [](const SegmentResult& r) {
        return 50.0 * 2.22e-16 * std::abs(r.kronrod);
    };
    std::vector<Seg> stack;
    double total = 0.0;
    double total_err = 0.0;
    for (size_t i = 0; i + 1 < points.size(); ++i) {
        if (points[i] == points[i + 1]) continue;
        SegmentResult r = gk15(f, points[i], points[i + 1]);
        stack.push_back({points[i], points[i + 1], r.kronrod, r.err, 0, false});
        total += r.kronrod;
        total_err += r.err;
    }
    while (true) {
        double tol = std::max(settings.abs_tol, settings.rel_tol * std::abs(total));
        if (total_err <= tol) break;
        size_t worst = stack.size();
        for (size_t i = 0; i < stack.size(); ++i)
            if (!stack[i].retired && (worst == stack.size() || stack[i].err > stack[worst].err))
                worst = i;
        if (worst == stack.size())
            throw ConvergenceError("integrate: tolerance unreachable (rounding floor)");
        Seg seg = stack[worst];
        if (seg.depth >= settings.max_depth)
            throw ConvergenceError("integrate: subdivision limit reached");
        const double mid = 0.5 * (seg.a + seg.b);
        SegmentResult left = gk15(f, seg.a, mid);
        SegmentResult right = gk15(f, mid, seg.b);
        const bool l_floor = left.err <= rounding_floor(left);
        const bool r_floor = right.err <= rounding_floor(right);
        total += left.kronrod + right.kronrod - seg.value;
        total_err += left.err + right.err - seg.err;
        stack[worst] = {seg.a, mid, left.kronrod, left.err, seg.depth + 1, l_floor};
        stack.push_back({mid, seg.b, right.kronrod, right.err, seg.depth + 1, r_floor});
        if (stack.size() > 100000)
            throw ConvergenceError("integrate: too many segments");
    }
    return total;
}

} // namespace

void QuadratureSettings::check() const {
    if (!(abs_tol > 0.0)) throw ValidationError("QuadratureSettings: abs_tol must be > 0");
    if (!(rel_tol > 0.0)) throw ValidationError("QuadratureSettings: rel_tol must be > 0");
    if (max_depth < 1) throw ValidationError("QuadratureSettings: max_depth must be >= 1");
}

void SeriesSettings::check() const {
    if (!(tail_tol > 0.0)) throw ValidationError("SeriesSettings: tail_tol must be > 0");
    if (max_terms < 1) throw ValidationError("SeriesSettings: max_terms must be >= 1");
}

double bessel_i_scaled(int order, double x) {
    if (order < 0) throw std::domain_error("bessel_i_scaled: order must be >= 0");
    if (x < 0.0 || std::isnan(x)) throw std::domain_error("bessel_i_scaled: x must be >= 0");
    if (x == 0.0) return order == 0 ? 1.0 : 0.0;
    if (x < kBesselSeriesCutoff) return bessel_series_scaled(order, x);
    return bessel_miller_scaled(order, x)[static_cast<size_t>(order)];
}

std::vector<double> bessel_i_scaled_all(int max_order, double x) {
    if (max_order < 0) throw std::domain_error("bessel_i_scaled_all: max_order must be >= 0");
    if (x < 0.0 || std::isnan(x)) throw std::domain_error("bessel_i_scaled_all: x must be >= 0");
    std::vector<double> out(static_cast<size_t>(max_order) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    if (x < kBesselSeriesCutoff) {
        for (int n = 0; n <= max_order; ++n) out[static_cast<size_t>(n)] = bessel_series_scaled(n, x);
        return out;
    }
    return bessel_miller_scaled(max_order, x);
}

double erfc(double x) { return std::erfc(x); }

double erfcx(double x) {
    if (x > 26.5) {
        // asymptotic expansion 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - ...)
        const double inv2x2 = 1.0 / (2.0 * x * x);
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 12; ++k) {
            term *= -(2.0 * k - 1.0) * inv2x2;
            sum += term;
            if (std::abs(term) < 1e-18) break;
        }
        return sum / (x * std::sqrt(kPi));
    }
    if (x < -26.5) return std::numeric_limits<double>::infinity();
    return std::exp(x * x) * std::erfc(x);
}

CubicRoots solve_cubic(double c3, double c2, double c1, double c0) {
    if (c3 == 0.0) throw ValidationError("solve_cubic: leading coefficient is zero");
    const double a = c2 / c3;
    const double b = c1 / c3;
    const double c = c0 / c3;
    const double q = (a * a - 3.0 * b) / 9.0;
    const double r = (a * (2.0 * a * a - 9.0 * b) + 27.0 * c) / 54.0;
    const double q3 = q * q * q;
    const double disc = r * r - q3;
    // Three real roots require r^2 <= q^3; allow rounding slop at the boundary.
    if (disc > 1e-10 * std::max({std::abs(r * r), std::abs(q3), 1e-300}))
        throw ConvergenceError("solve_cubic: complex root pair detected");
    const double theta = std::acos(std::clamp(r / std::sqrt(std::max(q3, 1e-300)), -1.0, 1.0));
    const double m = -2.0 * std::sqrt(std::max(q, 0.0));
    double roots[3];
    for (int k = 0; k < 3; ++k)
        roots[k] = m * std::cos((theta + 2.0 * kPi * k) / 3.0) - a / 3.0;
    // one Newton step per root knocks out the trig cancellation error
    for (double& z : roots) {
        for (int it = 0; it < 2; ++it) {
            const double p = ((c3 * z + c2) * z + c1) * z + c0;
            const double dp = (3.0 * c3 * z + 2.0 * c2) * z + c1;
            if (dp != 0.0) z -= p / dp;
        }
    }
    return {roots[0], roots[1], roots[2]};
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureSettings& settings) {
    settings.check();
    if (!(a <= b)) throw ValidationError("integrate: requires a <= b");
    if (a == b) return 0.0;
    if (std::isinf(b)) {
        auto mapped = [&f, a](double u) {
            const double om = 1.0 - u;
            return f(a + u / om) / (om * om);
        };
        const double pts[] = {0.0, 1.0};
        return integrate_seeded(mapped, pts, settings);
    }
    const double pts[] = {a, b};
    return integrate_seeded(f, pts, settings);
}

double integrate_segments(const std::function<double(double)>& f,
                          std::span<const double> breakpoints,
                          const QuadratureSettings& settings) {
    settings.check();
    if (breakpoints.size() < 2)
        throw ValidationError("integrate_segments: need at least two breakpoints");
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] <= breakpoints[i + 1]))
            throw ValidationError("integrate_segments: breakpoints must be sorted");
    return integrate_seeded(f, breakpoints, settings);
}

double sum_series(const std::function<double(long)>& term, long start,
                  const SeriesSettings& settings) {
    settings.check();
    double sum = 0.0;
    int below = 0;
    for (long k = start; k - start < settings.max_terms; ++k) {
        const double t = term(k);
        sum += t;
        below = std::abs(t) < settings.tail_tol ? below + 1 : 0;
        if (below >= 5) return sum;
    }
    throw ConvergenceError("sum_series: max_terms exhausted before stop rule");
}

} // namespace switchq::numerics
