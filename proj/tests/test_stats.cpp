#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "ssmrecon/error.hpp"
#include "ssmrecon/stats.hpp"
#include "support/oracles.hpp"

using namespace ssmrecon;
using namespace ssmrecon::stats;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TEST(TCdf, ClosedFormsAndSymmetry) {
    for (double df : {1.0, 2.0, 7.0, 34.0, 1000.0}) EXPECT_EQ(t_cdf(0.0, df), 0.5);
    EXPECT_NEAR(t_cdf(1.0, 1), 0.75, 1e-14);
    // Cauchy: F(t) = 1/2 + atan(t)/pi
    for (double t : {-20.0, -3.0, -0.4, 0.7, 5.0, 49.0}) {
        EXPECT_NEAR(t_cdf(t, 1), 0.5 + std::atan(t) / std::numbers::pi, 1e-13);
    }
    // df = 2: F(t) = 1/2 + t / (2 sqrt(2 + t^2))
    for (double t : {-6.0, -1.0, 0.3, 2.5, 40.0}) {
        EXPECT_NEAR(t_cdf(t, 2), 0.5 + t / (2 * std::sqrt(2 + t * t)), 1e-13);
    }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 200; ++i) {
        const double t = u(rng);
        const double df = 1 + static_cast<double>(rng() % 1000);
        EXPECT_NEAR(t_cdf(-t, df), 1 - t_cdf(t, df), 1e-12);
    }
}

TEST(TCdf, TableValueAtDf34) {
    const double oracle_value = oracle::t_cdf_by_quadrature(2.0322, 34);
    EXPECT_NEAR(oracle_value, 0.975, 1e-4);
    EXPECT_NEAR(t_cdf(2.0322, 34), 0.975, 1e-4);
    EXPECT_NEAR(t_cdf(2.0322, 34), oracle_value, 1e-10);
}

TEST(TCdf, AgreesWithQuadratureOracleOnAGrid) {
    for (double df : {1.0, 3.0, 10.0, 34.0, 120.0, 1000.0}) {
        for (double t : {-50.0, -12.0, -4.0, -1.3, 0.2, 0.9, 2.0, 3.5, 8.0, 25.0}) {
            EXPECT_NEAR(t_cdf(t, df), oracle::t_cdf_by_quadrature(t, df), 1e-10) << "t=" << t << " df=" << df;
        }
    }
}

TEST(TCdf, MonotoneAndNormalLimit) {
    double previous = 0.0;
    for (double t = -10; t <= 10; t += 0.05) {
        const double f = t_cdf(t, 9);
        EXPECT_GE(f, previous);
        previous = f;
    }
    for (double t = -4; t <= 4; t += 0.25) EXPECT_NEAR(t_cdf(t, 500), normal_cdf(t), 1e-3);
}

TEST(TCdf, DomainErrors) {
    EXPECT_THROW((void)t_cdf(1.0, 0), std::domain_error);
    EXPECT_THROW((void)t_quantile(0.0, 5), std::domain_error);
    EXPECT_THROW((void)t_quantile(1.0, 5), std::domain_error);
    EXPECT_THROW((void)t_quantile(1.5, 5), std::domain_error);
}

TEST(TQuantile, ValuesAndInverseIdentity) {
    EXPECT_EQ(t_quantile(0.5, 12), 0.0);
    const double q = t_quantile(0.975, 34);
    EXPECT_NEAR(q, 2.0322, 1e-3);
    EXPECT_NEAR(q, oracle::t_quantile_by_quadrature(0.975, 34), 1e-8);
    EXPECT_LT(std::abs(t_cdf(q, 34) - 0.975), 1e-10);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-8, 8);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng);
        const double df = 1 + static_cast<double>(rng() % 200);
        // F(x) carries a rounding error of eps, which moves the inverse by eps / f(x)
        const double conditioning = std::numeric_limits<double>::epsilon() / oracle::t_density(x, df);
        EXPECT_NEAR(t_quantile(t_cdf(x, df), df), x, 1e-8 + 4 * conditioning) << "x=" << x << " df=" << df;
    }
}

TEST(IncompleteBeta, EdgesAndSymmetry) {
    EXPECT_EQ(incomplete_beta(2, 3, 0), 0.0);
    EXPECT_EQ(incomplete_beta(2, 3, 1), 1.0);
    // I_x(1, 1) = x, I_x(a, 1) = x^a
    EXPECT_NEAR(incomplete_beta(1, 1, 0.37), 0.37, 1e-14);
    EXPECT_NEAR(incomplete_beta(3.5, 1, 0.6), std::pow(0.6, 3.5), 1e-14);
    EXPECT_NEAR(incomplete_beta(2.5, 4, 0.3), 1 - incomplete_beta(4, 2.5, 0.7), 1e-14);
    EXPECT_THROW((void)incomplete_beta(0, 1, 0.5), std::domain_error);
}

TEST(Summary, ExamplesAndOracle) {
    const std::vector<double> c{4.2, 4.2, 4.2};
    EXPECT_EQ(summary(c).mean, 4.2);
    EXPECT_EQ(summary(c).std, 0.0);
    const std::vector<double> s{1, 2, 3};
    EXPECT_EQ(summary(s).mean, 2.0);
    EXPECT_EQ(summary(s).std, 1.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(1162.4, 275.7);
    std::vector<double> v;
    for (int i = 0; i < 35; ++i) v.push_back(g(rng));
    EXPECT_NEAR(summary(v).mean, oracle::mean_two_pass(v), 1e-12 * 1162.4);
    EXPECT_NEAR(summary(v).std, oracle::sample_std_two_pass(v), 1e-12 * 275.7);
    EXPECT_THROW((void)summary(std::vector<double>{1.0}), DataError);
}

TEST(PairedTTest, PublishedOursRow) {
    const PairedTestReport r = paired_t_from_summary(78.1, 268.4, 35);
    EXPECT_EQ(r.df, 34);
    EXPECT_NEAR(r.sem, 45.4, 0.05);
    EXPECT_NEAR(r.t, 1.7, 0.05);
    EXPECT_NEAR(r.ci_lower, -14.1, 0.15);
    EXPECT_NEAR(r.ci_upper, 170.3, 0.15);
    EXPECT_NEAR(r.p, 0.094, 0.002);
    EXPECT_EQ(format_p(r.p), ".094");
}

TEST(PairedTTest, PublishedChildsRow) {
    const PairedTestReport r = paired_t_from_summary(-201.5, 234.8, 35);
    EXPECT_NEAR(r.sem, 39.7, 0.05);
    EXPECT_NEAR(r.t, -5.1, 0.05);
    EXPECT_NEAR(r.ci_lower, -282.1, 0.15);
    EXPECT_NEAR(r.ci_upper, -120.8, 0.15);
    EXPECT_LT(r.p, 0.001);
    EXPECT_EQ(format_p(r.p), ".000");
}

TEST(PairedTTest, SeriesWithPublishedSummaryGivesSameReport) {
    // 35 differences rescaled to mean 78.1 and sample std 268.4
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<double> d;
    for (int i = 0; i < 35; ++i) d.push_back(g(rng));
    const double m = oracle::mean_two_pass(d), s = oracle::sample_std_two_pass(d);
    std::vector<double> a, b;
    for (double x : d) {
        b.push_back(1000.0);
        a.push_back(1000.0 + 78.1 + 268.4 * (x - m) / s);
    }
    const PairedTestReport r = paired_t_test(a, b);
    const PairedTestReport e = paired_t_from_summary(78.1, 268.4, 35);
    EXPECT_NEAR(r.mean, e.mean, 1e-9);
    EXPECT_NEAR(r.std, e.std, 1e-9);
    EXPECT_NEAR(r.t, e.t, 1e-9);
    EXPECT_NEAR(r.p, e.p, 1e-9);
}

TEST(PairedTTest, EqualSeriesGiveTZeroPOne) {
    const std::vector<double> a{1100, 950.5, 1320, 870};
    const PairedTestReport r = paired_t_test(a, a);
    EXPECT_EQ(r.mean, 0.0);
    EXPECT_EQ(r.t, 0.0);
    EXPECT_EQ(r.p, 1.0);
}

TEST(PairedTTest, AntisymmetryAndShiftInvariance) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(1000, 200);
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back(g(rng));
        b.push_back(g(rng));
    }
    const PairedTestReport ab = paired_t_test(a, b);
    const PairedTestReport ba = paired_t_test(b, a);
    EXPECT_NEAR(ba.mean, -ab.mean, 1e-9);
    EXPECT_NEAR(ba.t, -ab.t, 1e-9);
    EXPECT_NEAR(ba.ci_lower, -ab.ci_upper, 1e-9);
    EXPECT_NEAR(ba.ci_upper, -ab.ci_lower, 1e-9);
    EXPECT_NEAR(ba.p, ab.p, 1e-12);
    std::vector<double> a2 = a, b2 = b;
    for (double& x : a2) x += 321.0;
    for (double& x : b2) x += 321.0;
    const PairedTestReport shifted = paired_t_test(a2, b2);
    EXPECT_NEAR(shifted.mean, ab.mean, 1e-9);
    EXPECT_NEAR(shifted.std, ab.std, 1e-9);
    EXPECT_NEAR(shifted.t, ab.t, 1e-9);
    EXPECT_NEAR(shifted.p, ab.p, 1e-12);
}

TEST(PairedTTest, ReportInvariants) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a, b;
        const int n = 2 + trial;
        for (int i = 0; i < n; ++i) {
            a.push_back(g(rng) + 0.3 * trial);
            b.push_back(g(rng));
        }
        const PairedTestReport r = paired_t_test(a, b);
        EXPECT_NEAR(r.t, r.mean / r.sem, 1e-12 * std::abs(r.t) + 1e-15);
        const double crit = t_quantile(0.975, r.df);
        EXPECT_NEAR(r.ci_lower, r.mean - crit * r.sem, 1e-12);
        EXPECT_NEAR(r.ci_upper, r.mean + crit * r.sem, 1e-12);
        EXPECT_GE(r.p, 0.0);
        EXPECT_LE(r.p, 1.0);
        EXPECT_NEAR(r.p, 2 * (1 - t_cdf(std::abs(r.t), r.df)), 1e-12);
    }
}

TEST(PairedTTest, InputErrors) {
    EXPECT_THROW((void)paired_t_test(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
    EXPECT_THROW((void)paired_t_test(std::vector<double>{1}, std::vector<double>{1}), DataError);
}

TEST(Report, JsonAndTableColumns) {
    const PairedTestReport r = paired_t_from_summary(78.1, 268.4, 35);
    const nlohmann::json j = to_json(r);
    for (const char* key : {"mu", "std", "sem", "ci95", "t", "df", "p"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j.at("p_display").get<std::string>(), ".094");
    const std::string row = table_row("Truth & Ours", 275.8, r);
    EXPECT_NE(row.find("(-14.1, 170.3)"), std::string::npos) << row;
    EXPECT_NE(row.find(".094"), std::string::npos) << row;
    EXPECT_NE(table_header().find("95% CI"), std::string::npos);
    EXPECT_EQ(format_p(1.0), "1.000");
    EXPECT_EQ(format_p(0.0004), ".000");
}
