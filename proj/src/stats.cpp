// SPDX-License-Identifier: Apache-2.0
#include "alignrank/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace alignrank::stats {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw StatsError("Matrix::from_rows: ragged rows");
        std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + r * m.cols());
    }
    return m;
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) hold ranks i+1..j+1
        const double shared = 0.5 * static_cast<double>(i + j + 2);
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

double tie_term(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i);
        sum += t * t * t - t;
        i = j;
    }
    return sum;
}

std::vector<double> RankMatrix::column_sums() const {
    std::vector<double> sums(ranks.cols(), 0.0);
    for (std::size_t r = 0; r < ranks.rows(); ++r) {
        for (std::size_t c = 0; c < ranks.cols(); ++c) sums[c] += ranks(r, c);
    }
    return sums;
}

std::vector<double> RankMatrix::mean_ranks() const {
    auto sums = column_sums();
    for (auto& s : sums) s /= static_cast<double>(ranks.rows());
    return sums;
}

RankMatrix rank_within_rows(const Matrix& values, RankDirection direction) {
    RankMatrix out{Matrix(values.rows(), values.cols()), direction, 0.0};
    std::vector<double> row(values.cols());
    for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t c = 0; c < values.cols(); ++c) {
            const double v = values(r, c);
            if (!std::isfinite(v)) {
                throw StatsError("rank_within_rows: non-finite value at row " + std::to_string(r) +
                                 ", column " + std::to_string(c));
            }
            row[c] = direction == RankDirection::higher_is_better ? v : -v;
        }
        const auto ranks = average_ranks(row);
        for (std::size_t c = 0; c < values.cols(); ++c) out.ranks(r, c) = ranks[c];
        out.tie_sum += tie_term(row);
    }
    return out;
}

double kendalls_w(double chi_square, std::size_t n, std::size_t k) {
    if (n == 0 || k < 2) throw StatsError("kendalls_w: need n >= 1 and k >= 2");
    return chi_square / (static_cast<double>(n) * static_cast<double>(k - 1));
}

FriedmanResult friedman_test(const Matrix& values, bool tie_correction) {
    const std::size_t n = values.rows(), k = values.cols();
    if (n < 2 || k < 2) {
        throw StatsError("friedman_test: need at least 2 rows and 2 columns");
    }
    const auto rm = rank_within_rows(values);
    const auto sums = rm.column_sums();

    FriedmanResult res;
    res.n = n;
    res.k = k;
    res.df = static_cast<int>(k - 1);
    res.tie_corrected = tie_correction;
    res.mean_ranks = rm.mean_ranks();

    const auto nd = static_cast<double>(n), kd = static_cast<double>(k);
    // Every row fully tied contributes k^3 - k to the tie sum.
    res.degenerate = rm.tie_sum == nd * (kd * kd * kd - kd);
    if (res.degenerate) {
        return res;
    }
    double sum_sq = 0.0;
    for (double s : sums) sum_sq += s * s;
    double chi = 12.0 * sum_sq / (nd * kd * (kd + 1.0)) - 3.0 * nd * (kd + 1.0);
    if (tie_correction) {
        chi /= 1.0 - rm.tie_sum / (nd * kd * (kd * kd - 1.0));
    }
    res.chi_square = std::max(chi, 0.0);
    res.kendalls_w = std::clamp(kendalls_w(res.chi_square, n, k), 0.0, 1.0);
    res.p_value = chi_square_sf(res.chi_square, res.df);
    return res;
}

namespace {

// Demsar (2006) two-tailed critical values for k = 2..10; k = 11..20 extend
// the same construction (studentized range quantile at infinite df / sqrt 2).
constexpr std::array<double, 19> kNemenyiQ05 = {
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, 3.219,
    3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544};
constexpr std::array<double, 19> kNemenyiQ10 = {
    1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978,
    3.030, 3.077, 3.120, 3.159, 3.196, 3.230, 3.261, 3.291, 3.319};

}  // namespace

std::optional<double> nemenyi_q(std::size_t k, double alpha) {
    if (k < 2 || k > 20) return std::nullopt;
    if (std::fabs(alpha - 0.05) < 1e-12) return kNemenyiQ05[k - 2];
    if (std::fabs(alpha - 0.10) < 1e-12) return kNemenyiQ10[k - 2];
    return std::nullopt;
}

double critical_difference(std::size_t k, std::size_t n, double alpha) {
    auto q = nemenyi_q(k, alpha);
    if (!q) {
        throw StatsError("Nemenyi table covers 2 <= k <= 20 and alpha in {0.05, 0.10}; got k=" +
                         std::to_string(k) + ", alpha=" + std::to_string(alpha));
    }
    if (n == 0) throw StatsError("critical_difference: n must be >= 1");
    const auto kd = static_cast<double>(k);
    return *q * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n)));
}

NemenyiResult nemenyi_from_mean_ranks(std::span<const double> mean_ranks, std::size_t n,
                                      double alpha, const std::vector<std::string>& labels) {
    if (labels.size() != mean_ranks.size()) {
        throw StatsError("nemenyi: label count does not match column count");
    }
    NemenyiResult res;
    res.alpha = alpha;
    res.critical_difference = critical_difference(mean_ranks.size(), n, alpha);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!res.mean_ranks.emplace(labels[i], mean_ranks[i]).second) {
            throw StatsError("nemenyi: duplicate label " + labels[i]);
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            const double diff = mean_ranks[i] - mean_ranks[j];
            res.pairs.push_back(
                {labels[i], labels[j], diff, std::fabs(diff) > res.critical_difference});
        }
    }
    return res;
}

NemenyiResult nemenyi(const Matrix& values, double alpha, const std::vector<std::string>& labels) {
    if (values.rows() < 2) throw StatsError("nemenyi: need at least 2 rows");
    const auto rm = rank_within_rows(values);
    const auto mr = rm.mean_ranks();
    return nemenyi_from_mean_ranks(mr, values.rows(), alpha, labels);
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups,
                                   bool tie_correction) {
    if (groups.size() < 2) throw StatsError("kruskal_wallis: need at least 2 groups");
    std::vector<double> pooled;
    KruskalWallisResult res;
    for (const auto& g : groups) {
        if (g.empty()) throw StatsError("kruskal_wallis: empty group");
        for (double v : g) {
            if (!std::isfinite(v)) throw StatsError("kruskal_wallis: non-finite observation");
        }
        pooled.insert(pooled.end(), g.begin(), g.end());
        res.group_sizes.push_back(g.size());
    }
    const std::size_t N = pooled.size();
    if (N < 3) throw StatsError("kruskal_wallis: need at least 3 observations");
    res.total = N;
    res.df = static_cast<int>(groups.size() - 1);
    res.tie_corrected = tie_correction;

    const auto ranks = average_ranks(pooled);
    res.tie_sum = tie_term(pooled);
    const auto Nd = static_cast<double>(N);

    double weighted = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) sum += ranks[offset + i];
        offset += g.size();
        const auto ni = static_cast<double>(g.size());
        res.group_mean_ranks.push_back(sum / ni);
        weighted += sum * sum / ni;
    }

    const double tie_denominator = 1.0 - res.tie_sum / (Nd * Nd * Nd - Nd);
    res.degenerate = tie_denominator <= 0.0;
    if (res.degenerate) {
        return res;
    }
    double h = 12.0 * weighted / (Nd * (Nd + 1.0)) - 3.0 * (Nd + 1.0);
    if (tie_correction) h /= tie_denominator;
    res.h_statistic = std::max(h, 0.0);
    res.p_value = chi_square_sf(res.h_statistic, res.df);
    return res;
}

DunnResult dunn_from_mean_ranks(std::span<const double> mean_ranks,
                                std::span<const std::size_t> sizes, double alpha,
                                bool tie_correction, double tie_sum) {
    if (mean_ranks.size() != sizes.size() || sizes.size() < 2) {
        throw StatsError("dunn: need matching mean ranks and sizes for >= 2 groups");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw StatsError("dunn: alpha must lie in (0, 1)");
    std::size_t total = 0;
    for (auto s : sizes) {
        if (s == 0) throw StatsError("dunn: group with n = 0");
        total += s;
    }
    const auto N = static_cast<double>(total);
    const double ties = tie_correction ? tie_sum / (12.0 * (N - 1.0)) : 0.0;
    const double base_variance = N * (N + 1.0) / 12.0 - ties;

    DunnResult res;
    res.alpha = alpha;
    res.tie_corrected = tie_correction;
    const std::size_t g = sizes.size();
    const auto m = static_cast<double>(g * (g - 1) / 2);
    res.adjusted_alpha = alpha / m;
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = i + 1; j < g; ++j) {
            DunnComparison c;
            c.first = i;
            c.second = j;
            const double se = std::sqrt(base_variance * (1.0 / static_cast<double>(sizes[i]) +
                                                         1.0 / static_cast<double>(sizes[j])));
            const double diff = mean_ranks[i] - mean_ranks[j];
            c.z = se > 0.0 ? diff / se : 0.0;
            c.p_unadjusted = std::min(1.0, 2.0 * normal_sf(std::fabs(c.z)));
            c.p_bonferroni = std::min(1.0, m * c.p_unadjusted);
            c.significant_at_adjusted_alpha = c.p_unadjusted < res.adjusted_alpha;
            res.comparisons.push_back(c);
        }
    }
    return res;
}

DunnResult dunn_test(const std::vector<std::vector<double>>& groups, double alpha,
                     bool tie_correction) {
    if (groups.size() < 2) throw StatsError("dunn_test: need at least 2 groups");
    for (const auto& g : groups) {
        if (g.empty()) throw StatsError("dunn_test: group with n = 0");
    }
    std::vector<double> pooled;
    std::vector<std::size_t> sizes;
    for (const auto& g : groups) {
        pooled.insert(pooled.end(), g.begin(), g.end());
        sizes.push_back(g.size());
    }
    const auto ranks = average_ranks(pooled);
    std::vector<double> mean_ranks;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) sum += ranks[offset + i];
        offset += g.size();
        mean_ranks.push_back(sum / static_cast<double>(g.size()));
    }
    return dunn_from_mean_ranks(mean_ranks, sizes, alpha, tie_correction, tie_term(pooled));
}

}  // namespace alignrank::stats
