#pragma once

#include <string>
#include <vector>

namespace monocost {

// Mann-Whitney AUC with ties scored 1/2. Throws std::runtime_error when the
// labels contain a single class.
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

// Accuracy at threshold 0.5.
double accuracy(const std::vector<double>& scores, const std::vector<double>& labels);

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets);
double mae(const std::vector<double>& predictions, const std::vector<double>& targets);

double metric(const std::string& kind, const std::vector<double>& predictions,
              const std::vector<double>& labels);

}  // namespace monocost
