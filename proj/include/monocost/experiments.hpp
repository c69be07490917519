#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monocost/dataset.hpp"
#include "monocost/gcm.hpp"
#include "monocost/igcm.hpp"
#include "monocost/monotone.hpp"
#include "monocost/report.hpp"

namespace monocost {

struct TrainConfig {
    std::string method = "gcm";  // posnn|mm|smm|hint|pwl|gcm|igcm
    int hidden_dim = 16;
    int latent_dim = 4;      // D
    int sample_number = 32;  // N
    int k_samples = 32;      // M (igcm reconstruction samples)
    int max_epoch = 120;     // quantile simulation: iteration count
    std::string optimizer = "adam";
    int batch_size = 16;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
    int repeats = 10;

    void validate() const;
};

// Strict JSON readers: unknown keys are rejected.
TrainConfig train_config_from_json(const std::string& text);
TrainConfig train_config_from_file(const std::string& path);
SchemaConfig schema_from_json(const std::string& text);
SchemaConfig schema_from_file(const std::string& path);

// Regularizer defaults for the hint/pwl methods (weights are not part of the
// config surface).
struct RegularizerSpec {
    enum class Kind { None, Hint, Pwl } kind = Kind::None;
    double weight = 1.0;
    int hint_pairs_per_batch = 0;  // 0 = batch size
    int pwl_probe_points = 0;      // 0 = batch size
};

// ---- quantile simulation experiment ----

struct QuantileResult {
    std::string method;
    std::vector<double> levels;
    std::vector<RunReport> per_level;  // MAE against the true quantile
};

// Trains `repeats` seeds with fresh simulated batches and scores 1,000 fresh
// points per quantile level. When out_dir is non-empty, writes results.jsonl,
// summary.csv, per-level curves_<r>.csv, and model.json (last seed).
QuantileResult run_quantile_experiment(const TrainConfig& cfg, const std::string& out_dir);

// ---- tabular benchmark ----

// Metric selection per the evaluation protocol: RMSE for regression; ACC for
// binary tasks with positive ratio in [0.3, 0.7], AUC otherwise.
std::string metric_for(const Dataset& d);

RunReport run_benchmark(const TrainConfig& cfg, const SchemaConfig& schema, const std::string& out_dir);

struct AblationCell {
    int latent_dim;
    int sample_number;
    RunReport report;
};
std::vector<AblationCell> run_ablation(const TrainConfig& cfg, const SchemaConfig& schema,
                                       const std::vector<int>& d_grid, const std::vector<int>& n_grid,
                                       const std::string& out_dir);

// ---- amortized-inference timing ----

struct TimingRow {
    int r_count;
    double model_ms;     // amortized predictor
    double baseline_ms;  // full per-threshold forward
};
struct TimingResult {
    std::vector<TimingRow> rows;
    long encoder_calls_per_predict = 0;
};

// Medians of 30 repetitions after 5 warmups; also verifies the one-encoder-
// pass contract for every probed count.
TimingResult timing_probe(const GcmModel& model, const MonotoneNet& baseline,
                          const std::vector<double>& x, const std::vector<std::vector<double>>& thresholds,
                          const std::vector<int>& r_counts, Rng& rng);

// CLI wrapper: trains briefly on the schema's dataset, then probes.
TimingResult run_timing(const TrainConfig& cfg, const SchemaConfig& schema,
                        const std::vector<int>& r_counts, const std::string& out_dir);

}  // namespace monocost
