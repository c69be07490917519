#pragma once

#include <optional>
#include <string>
#include <vector>

#include "monocost/dataset.hpp"
#include "monocost/gcm.hpp"
#include "monocost/igcm.hpp"
#include "monocost/monotone.hpp"

namespace monocost {

// Everything a saved model needs to score raw CSV rows: column names, the
// train-split normalization, monotone-column signs, and the target transform
// for regression tasks.
struct PreprocessInfo {
    std::vector<std::string> x_names, r_names;
    std::vector<int> r_signs;
    std::vector<double> x_mean, x_sd, r_mean, r_sd;  // empty when not standardized
    double y_mean = 0.0, y_sd = 1.0;
    TaskKind task = TaskKind::Binary;
};

// Versioned JSON blob: {"format_version":1,"kind":...,"config":...,
// "preprocess":..., "params":{name:{rows,cols,data}}}. The same layout is
// shared by every model family.
void save_model(const std::string& path, const std::string& kind, const std::string& config_json,
                const std::vector<Node>& params, const PreprocessInfo& pre);

// A deserialized model of any family, exposing a uniform scoring surface.
class LoadedModel {
public:
    static LoadedModel load(const std::string& path);

    // Raw feature rows in, predictions out (probabilities for binary tasks,
    // de-standardized means for regression).
    std::vector<double> predict(const Tensor& x_raw, const Tensor& r_raw, Rng& rng) const;

    const PreprocessInfo& preprocess() const { return pre_; }
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
    PreprocessInfo pre_;
    std::optional<GcmModel> gcm_;
    std::optional<GcmRegressor> gcm_reg_;
    std::optional<IgcmModel> igcm_;
    std::optional<IgcmRegressor> igcm_reg_;
    std::optional<MonotoneNet> net_;
};

std::string preprocess_task_name(TaskKind t);

}  // namespace monocost
