#pragma once

#include <string>
#include <vector>

namespace monocost {

// Two-sided 97.5% Student-t quantile: exact table through df = 10, then a
// Cornish-Fisher expansion (error < 1e-3 there).
double t_quantile_975(int df);

struct RunReport {
    std::string method;
    std::string dataset;
    std::string metric;
    std::vector<double> per_seed;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;

    double mean() const;
    double std_dev() const;                 // sample, n-1
    double ci_half_width() const;           // t_{0.975, n-1} * sd / sqrt(n)
    std::string summary_line() const;       // "method dataset metric mean +/- hw"
};

void write_results_jsonl(const std::string& path, const std::vector<RunReport>& reports);
void write_summary_csv(const std::string& path, const std::vector<RunReport>& reports);

}  // namespace monocost
