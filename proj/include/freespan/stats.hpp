#pragma once

#include <span>
#include <vector>

/// Nonparametric tests, effect sizes, correlation, and classification metrics
/// used by the evaluation protocol. All functions are pure.
namespace freespan::stats {

enum class PMethod { exact, normal_approx };

struct TestResult {
    double statistic = 0.0;  // U computed for the first sample
    double p_value = 1.0;    // two-sided
    PMethod method = PMethod::exact;
};

/// Two-sided Mann-Whitney U test. Exact enumeration (dynamic programming over
/// the U distribution) when n_a * n_b <= 400 and the pooled sample is
/// tie-free; otherwise a normal approximation with tie and continuity
/// corrections.
[[nodiscard]] TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Holm step-down adjustment; result is aligned with the input order.
[[nodiscard]] std::vector<double> holm_correct(const std::vector<double>& p_values);

/// (#{a_i > b_j} - #{a_i < b_j}) / (n_a * n_b), in [-1, 1].
[[nodiscard]] double cliffs_delta(std::span<const double> a, std::span<const double> b);

/// Product-moment correlation; throws "undefined correlation" on constant
/// input.
[[nodiscard]] double pearson_r(std::span<const double> x, std::span<const double> y);

struct BinaryMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Positive class = anomalous (true). precision = 0 with no positive
/// predictions; f1 = 0 when precision + recall = 0.
[[nodiscard]] BinaryMetrics binary_metrics(const std::vector<bool>& predicted,
                                           const std::vector<bool>& truth);

/// Mean absolute error, meters.
[[nodiscard]] double mae(std::span<const double> y_true, std::span<const double> y_pred);

namespace detail {
// Exposed so tests can compare the two p-value paths directly.
[[nodiscard]] double u_statistic(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double exact_two_sided_p(double u, long n_a, long n_b);
[[nodiscard]] double normal_two_sided_p(double u, std::span<const double> a,
                                        std::span<const double> b);
[[nodiscard]] bool has_ties(std::span<const double> a, std::span<const double> b);
} // namespace detail

} // namespace freespan::stats
