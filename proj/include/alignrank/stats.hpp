// SPDX-License-Identifier: Apache-2.0
#pragma once

// Rank-based tests: Friedman with Kendall's W and a Nemenyi critical
// difference for the repeated-measures design (topics x models), and
// Kruskal-Wallis with Dunn/Bonferroni pairwise follow-up for independent
// groups.

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "alignrank/special_functions.hpp"

namespace alignrank::stats {

class StatsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major n x k matrix of finite values.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Ascending ranks 1..n with tied values sharing the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Sum of t^3 - t over groups of tied values.
double tie_term(std::span<const double> values);

enum class RankDirection { higher_is_better, lower_is_better };

/// Ranks each row independently. With higher_is_better the largest value
/// receives rank k, so larger mean ranks mean better treatments.
struct RankMatrix {
    Matrix ranks;
    RankDirection direction = RankDirection::higher_is_better;
    double tie_sum = 0.0;  // sum over rows of tie_term

    std::vector<double> column_sums() const;
    std::vector<double> mean_ranks() const;
};

RankMatrix rank_within_rows(const Matrix& values,
                            RankDirection direction = RankDirection::higher_is_better);

struct FriedmanResult {
    double chi_square = 0.0;
    int df = 0;
    double p_value = 1.0;
    double kendalls_w = 0.0;
    std::size_t n = 0;
    std::size_t k = 0;
    bool tie_corrected = false;
    bool degenerate = false;  // every row fully tied
    std::vector<double> mean_ranks;
};

FriedmanResult friedman_test(const Matrix& values, bool tie_correction = true);

/// Kendall's W implied by a Friedman statistic.
double kendalls_w(double chi_square, std::size_t n, std::size_t k);

/// Two-tailed Nemenyi q (studentized range / sqrt 2, infinite df) for
/// 2 <= k <= 20 and alpha in {0.05, 0.10}; nullopt outside the table.
std::optional<double> nemenyi_q(std::size_t k, double alpha);

/// CD = q * sqrt(k (k + 1) / (6 n)).
double critical_difference(std::size_t k, std::size_t n, double alpha);

struct PairVerdict {
    std::string first;
    std::string second;
    double mean_rank_difference = 0.0;  // first - second
    bool significant = false;
};

struct NemenyiResult {
    double critical_difference = 0.0;
    double alpha = 0.05;
    std::map<std::string, double> mean_ranks;
    std::vector<PairVerdict> pairs;  // i < j in label order
};

NemenyiResult nemenyi(const Matrix& values, double alpha, const std::vector<std::string>& labels);
NemenyiResult nemenyi_from_mean_ranks(std::span<const double> mean_ranks, std::size_t n,
                                      double alpha, const std::vector<std::string>& labels);

struct KruskalWallisResult {
    double h_statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::vector<double> group_mean_ranks;
    std::vector<std::size_t> group_sizes;
    std::size_t total = 0;
    bool tie_corrected = false;
    bool degenerate = false;  // all observations equal
    double tie_sum = 0.0;
};

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups,
                                   bool tie_correction = true);

struct DunnComparison {
    std::size_t first = 0;  // group indices
    std::size_t second = 0;
    double z = 0.0;
    double p_unadjusted = 1.0;
    double p_bonferroni = 1.0;
    bool significant_at_adjusted_alpha = false;  // p_unadjusted < alpha / m
};

struct DunnResult {
    std::vector<DunnComparison> comparisons;
    double alpha = 0.05;
    double adjusted_alpha = 0.05;
    bool tie_corrected = false;
};

/// Pairwise z tests on joint mean ranks. `tie_sum` is sum(t^3 - t) over the
/// pooled sample; it only enters when tie_correction is set.
DunnResult dunn_from_mean_ranks(std::span<const double> mean_ranks,
                                std::span<const std::size_t> sizes, double alpha,
                                bool tie_correction, double tie_sum = 0.0);

DunnResult dunn_test(const std::vector<std::vector<double>>& groups, double alpha,
                     bool tie_correction = true);

}  // namespace alignrank::stats
