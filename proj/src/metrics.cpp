#include "monocost/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace monocost {

namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b, const char* name) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument(std::string(name) + ": length mismatch or empty input");
}

void check_binary(const std::vector<double>& labels, const char* name) {
    for (double y : labels)
        if (y != 0.0 && y != 1.0)
            throw std::invalid_argument(std::string(name) + ": labels must be 0/1");
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    check_lengths(scores, labels, "auc");
    check_binary(labels, "auc");
    const std::size_t n = scores.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, then the rank-sum form of Mann-Whitney U.
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] == 1.0) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::runtime_error("auc: labels contain a single class");
    const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(const std::vector<double>& scores, const std::vector<double>& labels) {
    check_lengths(scores, labels, "accuracy");
    check_binary(labels, "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double pred = scores[i] >= 0.5 ? 1.0 : 0.0;
        if (pred == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    check_lengths(predictions, targets, "rmse");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        acc += d * d;
    }
    return std::sqrt(acc / predictions.size());
}

double mae(const std::vector<double>& predictions, const std::vector<double>& targets) {
    check_lengths(predictions, targets, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) acc += std::abs(predictions[i] - targets[i]);
    return acc / predictions.size();
}

double metric(const std::string& kind, const std::vector<double>& predictions,
              const std::vector<double>& labels) {
    if (kind == "auc") return auc(predictions, labels);
    if (kind == "acc") return accuracy(predictions, labels);
    if (kind == "rmse") return rmse(predictions, labels);
    if (kind == "mae") return mae(predictions, labels);
    throw std::invalid_argument("metric: unknown kind '" + kind + "'");
}

}  // namespace monocost
