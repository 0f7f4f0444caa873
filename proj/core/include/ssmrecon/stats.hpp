#pragma once

#include <span>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace ssmrecon::stats {

/// Regularised incomplete beta I_x(a, b), continued fraction (300 terms, 1e-14).
[[nodiscard]] double incomplete_beta(double a, double b, double x);

/// Student-t CDF. Throws std::domain_error for df < 1.
[[nodiscard]] double t_cdf(double t, double df);
/// Inverse of t_cdf by bracketed bisection. Throws std::domain_error unless 0 < p < 1.
[[nodiscard]] double t_quantile(double p, double df);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  ///< sample std, divisor n - 1
};
[[nodiscard]] Summary summary(std::span<const double> values);

struct PairedTestReport {
    int n = 0;
    double mean = 0.0;
    double std = 0.0;
    double sem = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double t = 0.0;
    int df = 0;
    double p = 1.0;
};

/// Paired t-test on d_i = a_i - b_i. Zero-variance differences give t = 0,
/// p = 1. Throws DataError on length mismatch or n < 2.
[[nodiscard]] PairedTestReport paired_t_test(std::span<const double> a, std::span<const double> b);

/// Same report from the summary of the difference series.
[[nodiscard]] PairedTestReport paired_t_from_summary(double mean, double std, int n);

[[nodiscard]] nlohmann::json to_json(const PairedTestReport& r);

/// p formatted the way result tables print it: three decimals, no leading zero.
[[nodiscard]] std::string format_p(double p);

/// Fixed-column text table row: label, RMSE, mu, std, SEM, CI, t, df, p.
[[nodiscard]] std::string table_header();
[[nodiscard]] std::string table_row(const std::string& label, double rmse,
                                    const PairedTestReport& r);

}  // namespace ssmrecon::stats
