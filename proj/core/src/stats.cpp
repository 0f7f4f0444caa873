#include "ssmrecon/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ssmrecon/error.hpp"

namespace ssmrecon::stats {

namespace {

constexpr int kMaxIterations = 300;
constexpr double kTolerance = 1e-14;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b) by the modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kTolerance) return h;
    }
    return h;  // not converged within the documented budget; best estimate
}

// I_x(a, b) with y = 1 - x supplied separately to avoid cancellation.
double incomplete_beta_xy(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

// P(T <= -|t|).
double lower_tail(double t, double df) {
    const double t2 = t * t;
    const double x = df / (df + t2);
    const double y = t2 / (df + t2);
    return 0.5 * incomplete_beta_xy(0.5 * df, 0.5, x, y);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::domain_error("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete_beta: x must lie in [0, 1]");
    return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double t_cdf(double t, double df) {
    if (!(df >= 1.0)) throw std::domain_error("t_cdf: degrees of freedom must be >= 1");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (t == 0.0) return 0.5;
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = lower_tail(t, df);
    return t > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("t_quantile: p must lie in (0, 1)");
    if (!(df >= 1.0)) throw std::domain_error("t_quantile: degrees of freedom must be >= 1");
    if (p == 0.5) return 0.0;
    // search on the tail probability, which keeps precision for small p
    const double tail = p < 0.5 ? p : 1.0 - p;
    double lo = 0.0;
    double hi = 1.0;
    while (lower_tail(hi, df) > tail && hi < 1e300) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 2000; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (lower_tail(mid, df) > tail) lo = mid;
        else hi = mid;
    }
    const double t = 0.5 * (lo + hi);
    return p < 0.5 ? -t : t;
}

Summary summary(std::span<const double> values) {
    if (values.size() < 2) throw DataError("summary needs at least 2 values");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return Summary{mean, std::sqrt(sq / static_cast<double>(values.size() - 1))};
}

PairedTestReport paired_t_from_summary(double mean, double std, int n) {
    if (n < 2) throw DataError("paired t-test needs at least 2 pairs");
    if (!(std >= 0.0) || !std::isfinite(mean)) throw DataError("paired t-test: invalid summary");
    PairedTestReport r;
    r.n = n;
    r.df = n - 1;
    r.mean = mean;
    r.std = std;
    r.sem = std / std::sqrt(static_cast<double>(n));
    if (r.sem == 0.0) {
        r.t = 0.0;
        r.p = 1.0;
        r.ci_lower = r.ci_upper = mean;
        return r;
    }
    r.t = mean / r.sem;
    const double crit = t_quantile(0.975, r.df);
    r.ci_lower = mean - crit * r.sem;
    r.ci_upper = mean + crit * r.sem;
    r.p = std::min(1.0, 2.0 * t_cdf(-std::abs(r.t), r.df));
    return r;
}

PairedTestReport paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("paired t-test: series lengths differ");
    if (a.size() < 2) throw DataError("paired t-test needs at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const Summary s = summary(d);
    return paired_t_from_summary(s.mean, s.std, static_cast<int>(d.size()));
}

nlohmann::json to_json(const PairedTestReport& r) {
    return {{"n", r.n},     {"mu", r.mean}, {"std", r.std}, {"sem", r.sem},
            {"ci95", {r.ci_lower, r.ci_upper}}, {"t", r.t}, {"df", r.df}, {"p", r.p},
            {"p_display", format_p(r.p)}};
}

std::string format_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", p);
    std::string s = buf;
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    return s;
}

std::string table_header() {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %9s %9s %9s %9s %22s %7s %4s %7s", "Vol. Compar.", "RMSE",
                  "mu", "std.", "SEM", "95% CI (Lower, Upper)", "t", "df", "Signi.");
    return buf;
}

std::string table_row(const std::string& label, double rmse, const PairedTestReport& r) {
    char ci[64];
    std::snprintf(ci, sizeof ci, "(%.1f, %.1f)", r.ci_lower, r.ci_upper);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %9.1f %9.1f %9.1f %9.1f %22s %7.1f %4d %7s", label.c_str(),
                  rmse, r.mean, r.std, r.sem, ci, r.t, r.df, format_p(r.p).c_str());
    return buf;
}

}  // namespace ssmrecon::stats
