#include "monocost/serialize.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace monocost {

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
    json j;
    j["rows"] = t.rows();
    j["cols"] = t.cols();
    j["data"] = t.data();
    return j;
}

Tensor tensor_from_json(const json& j) {
    return Tensor(j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("data").get<std::vector<double>>());
}

json pre_to_json(const PreprocessInfo& p) {
    json j;
    j["x_names"] = p.x_names;
    j["r_names"] = p.r_names;
    j["r_signs"] = p.r_signs;
    j["x_mean"] = p.x_mean;
    j["x_sd"] = p.x_sd;
    j["r_mean"] = p.r_mean;
    j["r_sd"] = p.r_sd;
    j["y_mean"] = p.y_mean;
    j["y_sd"] = p.y_sd;
    j["task"] = preprocess_task_name(p.task);
    return j;
}

PreprocessInfo pre_from_json(const json& j) {
    PreprocessInfo p;
    p.x_names = j.at("x_names").get<std::vector<std::string>>();
    p.r_names = j.at("r_names").get<std::vector<std::string>>();
    p.r_signs = j.at("r_signs").get<std::vector<int>>();
    p.x_mean = j.at("x_mean").get<std::vector<double>>();
    p.x_sd = j.at("x_sd").get<std::vector<double>>();
    p.r_mean = j.at("r_mean").get<std::vector<double>>();
    p.r_sd = j.at("r_sd").get<std::vector<double>>();
    p.y_mean = j.at("y_mean").get<double>();
    p.y_sd = j.at("y_sd").get<double>();
    p.task = j.at("task").get<std::string>() == "binary" ? TaskKind::Binary : TaskKind::Regression;
    return p;
}

void restore_params(const json& blob, const std::vector<Node>& params) {
    const json& jp = blob.at("params");
    for (const Node& p : params) {
        if (!jp.contains(p.name()))
            throw std::runtime_error("model blob is missing parameter '" + p.name() + "'");
        Tensor t = tensor_from_json(jp.at(p.name()));
        if (t.rows() != p.rows() || t.cols() != p.cols())
            throw std::runtime_error("model blob parameter '" + p.name() + "' has shape " + t.shape_str() +
                                     ", expected " + p.value().shape_str());
        p.get()->value = std::move(t);
    }
}

Tensor standardize_rows(const Tensor& raw, const std::vector<double>& mean, const std::vector<double>& sd) {
    if (mean.empty()) return raw;
    Tensor out(raw.rows(), raw.cols());
    for (int i = 0; i < raw.rows(); ++i)
        for (int j = 0; j < raw.cols(); ++j) out.at(i, j) = (raw.at(i, j) - mean[j]) / sd[j];
    return out;
}

}  // namespace

std::string preprocess_task_name(TaskKind t) { return t == TaskKind::Binary ? "binary" : "regression"; }

void save_model(const std::string& path, const std::string& kind, const std::string& config_json,
                const std::vector<Node>& params, const PreprocessInfo& pre) {
    json j;
    j["format_version"] = 1;
    j["kind"] = kind;
    j["config"] = json::parse(config_json);
    j["preprocess"] = pre_to_json(pre);
    json jp = json::object();
    for (const Node& p : params) {
        if (p.name().empty()) throw std::logic_error("save_model: unnamed parameter");
        if (jp.contains(p.name())) throw std::logic_error("save_model: duplicate parameter " + p.name());
        jp[p.name()] = tensor_to_json(p.value());
    }
    j["params"] = std::move(jp);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot write '" + path + "'");
    out << j.dump();
}

LoadedModel LoadedModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open '" + path + "'");
    json j = json::parse(in);
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("load_model: unsupported format_version");
    LoadedModel m;
    m.kind_ = j.at("kind").get<std::string>();
    m.pre_ = pre_from_json(j.at("preprocess"));
    const json& cfg = j.at("config");
    Rng rng(0);  // construction randomness is overwritten below
    if (m.kind_ == "gcm" || m.kind_ == "gcm_regressor") {
        GcmConfig c;
        c.x_dim = cfg.at("x_dim").get<int>();
        c.revenue_dim = cfg.at("revenue_dim").get<int>();
        c.latent_dim = cfg.at("latent_dim").get<int>();
        c.hidden_dim = cfg.at("hidden_dim").get<int>();
        c.sample_count = cfg.at("sample_count").get<int>();
        if (m.kind_ == "gcm") {
            m.gcm_.emplace(c, rng);
            restore_params(j, m.gcm_->params());
        } else {
            m.gcm_reg_.emplace(c, rng);
            restore_params(j, m.gcm_reg_->params());
        }
    } else if (m.kind_ == "igcm" || m.kind_ == "igcm_regressor") {
        IgcmConfig c;
        c.x_dim = cfg.at("x_dim").get<int>();
        c.revenue_dim = cfg.at("revenue_dim").get<int>();
        c.latent_dim = cfg.at("latent_dim").get<int>();
        c.kernel_dim = cfg.at("kernel_dim").get<int>();
        c.hidden_dim = cfg.at("hidden_dim").get<int>();
        c.sample_count = cfg.at("sample_count").get<int>();
        c.k_samples = cfg.at("k_samples").get<int>();
        if (m.kind_ == "igcm") {
            m.igcm_.emplace(c, rng);
            restore_params(j, m.igcm_->params());
        } else {
            m.igcm_reg_.emplace(c, rng);
            restore_params(j, m.igcm_reg_->params());
        }
    } else {
        MonotoneNetSpec spec;
        spec.kind = monotone_kind_from_string(m.kind_);
        spec.x_dim = cfg.at("x_dim").get<int>();
        spec.r_dim = cfg.at("r_dim").get<int>();
        spec.hidden = cfg.at("hidden").get<int>();
        spec.groups = cfg.at("groups").get<int>();
        spec.units_per_group = cfg.at("units_per_group").get<int>();
        spec.smoothing_beta = cfg.at("smoothing_beta").get<double>();
        m.net_.emplace(spec, rng, "net");
        restore_params(j, m.net_->params());
    }
    return m;
}

std::vector<double> LoadedModel::predict(const Tensor& x_raw, const Tensor& r_raw, Rng& rng) const {
    Tensor x = standardize_rows(x_raw, pre_.x_mean, pre_.x_sd);
    Tensor r = standardize_rows(r_raw, pre_.r_mean, pre_.r_sd);
    std::vector<double> out;
    if (gcm_) {
        out.resize(x.rows());
        for (int i = 0; i < x.rows(); ++i) {
            std::vector<double> xi(x.cols()), ri(r.cols());
            for (int j = 0; j < x.cols(); ++j) xi[j] = x.at(i, j);
            for (int j = 0; j < r.cols(); ++j) ri[j] = r.at(i, j);
            out[i] = gcm_->predict(xi, {ri}, rng)[0];
        }
    } else if (igcm_) {
        out = igcm_->predict_batch(x, r, rng);
    } else if (gcm_reg_) {
        out = gcm_reg_->predict(x, r, rng);
    } else if (igcm_reg_) {
        out = igcm_reg_->predict(x, r, rng);
    } else if (net_) {
        Tensor f = net_->forward_values(x, r);
        out.resize(f.rows());
        for (int i = 0; i < f.rows(); ++i)
            out[i] = pre_.task == TaskKind::Binary ? 1.0 / (1.0 + std::exp(-f.at(i, 0))) : f.at(i, 0);
    } else {
        throw std::logic_error("LoadedModel: empty model");
    }
    if (pre_.task == TaskKind::Regression)
        for (double& v : out) v = v * pre_.y_sd + pre_.y_mean;
    return out;
}

}  // namespace monocost
