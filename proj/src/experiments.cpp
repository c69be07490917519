#include "monocost/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "monocost/metrics.hpp"
#include "monocost/optim.hpp"
#include "monocost/quantile_sim.hpp"
#include "monocost/serialize.hpp"

namespace monocost {

using nlohmann::json;

void TrainConfig::validate() const {
    static const char* methods[] = {"posnn", "mm", "smm", "hint", "pwl", "gcm", "igcm"};
    if (std::find_if(std::begin(methods), std::end(methods),
                     [&](const char* m) { return method == m; }) == std::end(methods))
        throw std::invalid_argument("config: unknown method '" + method + "'");
    if (hidden_dim < 1 || latent_dim < 1 || sample_number < 1 || k_samples < 1 || max_epoch < 1 ||
        batch_size < 1 || repeats < 1)
        throw std::invalid_argument("config: counts and dimensions must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be positive");
    opt_kind_from_string(optimizer);
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw std::invalid_argument(std::string(what) + ": unknown key '" + it.key() + "'");
    }
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text) {
    json j = json::parse(text);
    reject_unknown_keys(j,
                        {"method", "hidden_dim", "latent_dim", "sample_number", "k_samples", "max_epoch",
                         "optimizer", "batch_size", "learning_rate", "seed", "repeats"},
                        "train config");
    TrainConfig c;
    if (j.contains("method")) c.method = j["method"].get<std::string>();
    if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("latent_dim")) c.latent_dim = j["latent_dim"].get<int>();
    if (j.contains("sample_number")) c.sample_number = j["sample_number"].get<int>();
    if (j.contains("k_samples")) c.k_samples = j["k_samples"].get<int>();
    if (j.contains("max_epoch")) c.max_epoch = j["max_epoch"].get<int>();
    if (j.contains("optimizer")) c.optimizer = j["optimizer"].get<std::string>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("repeats")) c.repeats = j["repeats"].get<int>();
    c.validate();
    return c;
}

SchemaConfig schema_from_json(const std::string& text) {
    json j = json::parse(text);
    reject_unknown_keys(j, {"csv_path", "target_column", "monotone_columns", "drop_columns", "standardize"},
                        "schema");
    SchemaConfig s;
    s.csv_path = j.at("csv_path").get<std::string>();
    s.target_column = j.at("target_column").get<std::string>();
    for (const json& mc : j.at("monotone_columns")) {
        reject_unknown_keys(mc, {"name", "sign"}, "monotone column");
        MonotoneColumn col;
        col.name = mc.at("name").get<std::string>();
        const std::string sign = mc.contains("sign") ? mc["sign"].get<std::string>() : "+";
        if (sign == "+")
            col.sign = +1;
        else if (sign == "-")
            col.sign = -1;
        else
            throw std::invalid_argument("schema: sign must be '+' or '-', got '" + sign + "'");
        s.monotone_columns.push_back(col);
    }
    if (j.contains("drop_columns")) s.drop_columns = j["drop_columns"].get<std::vector<std::string>>();
    if (j.contains("standardize")) s.standardize = j["standardize"].get<bool>();
    for (const auto& mc : s.monotone_columns)
        if (std::find(s.drop_columns.begin(), s.drop_columns.end(), mc.name) != s.drop_columns.end())
            throw std::invalid_argument("schema: column '" + mc.name + "' is both monotone and dropped");
    return s;
}

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TrainConfig train_config_from_file(const std::string& path) { return train_config_from_json(slurp(path)); }
SchemaConfig schema_from_file(const std::string& path) { return schema_from_json(slurp(path)); }

// ---------------------------------------------------------------------------
// shared training machinery
// ---------------------------------------------------------------------------

namespace {

Optimizer make_optimizer(const TrainConfig& cfg) {
    OptimizerConfig oc;
    oc.kind = opt_kind_from_string(cfg.optimizer);
    oc.learning_rate = cfg.learning_rate;
    return Optimizer(oc);
}

Tensor take_rows(const Tensor& src, const std::vector<int>& perm, int first, int count) {
    Tensor out(count, src.cols());
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < src.cols(); ++j) out.at(i, j) = src.at(perm[first + i], j);
    return out;
}

template <typename T>
std::vector<T> take_vals(const std::vector<T>& src, const std::vector<int>& perm, int first, int count) {
    std::vector<T> out(count);
    for (int i = 0; i < count; ++i) out[i] = src[perm[first + i]];
    return out;
}

Tensor col_tensor(const std::vector<double>& v) { return Tensor::col(v); }

std::vector<int> as_int_labels(const std::vector<double>& y) {
    std::vector<int> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] == 1.0 ? 1 : 0;
    return out;
}

MonotoneNetSpec baseline_spec(const TrainConfig& cfg, int x_dim, int r_dim) {
    MonotoneNetSpec spec;
    if (cfg.method == "posnn")
        spec.kind = MonotoneKind::PosNN;
    else if (cfg.method == "mm")
        spec.kind = MonotoneKind::MinMax;
    else if (cfg.method == "smm")
        spec.kind = MonotoneKind::SmoothMM;
    else
        spec.kind = MonotoneKind::Plain;
    spec.x_dim = x_dim;
    spec.r_dim = r_dim;
    spec.hidden = cfg.hidden_dim;
    return spec;
}

RegularizerSpec regularizer_for(const TrainConfig& cfg) {
    RegularizerSpec reg;
    if (cfg.method == "hint") reg.kind = RegularizerSpec::Kind::Hint;
    if (cfg.method == "pwl") reg.kind = RegularizerSpec::Kind::Pwl;
    return reg;
}

Node add_regularizer(Node loss, const MonotoneNet& net, const RegularizerSpec& reg, const Tensor& x,
                     const Tensor& r, Rng& rng) {
    if (reg.kind == RegularizerSpec::Kind::Hint) {
        const int pairs = reg.hint_pairs_per_batch > 0 ? reg.hint_pairs_per_batch : r.rows();
        return add(loss, scale(hint_penalty(net, x, r, pairs, rng), reg.weight));
    }
    if (reg.kind == RegularizerSpec::Kind::Pwl) {
        const int probes = reg.pwl_probe_points > 0 ? reg.pwl_probe_points : r.rows();
        return add(loss, scale(pwl_penalty(net, x, r, probes), reg.weight));
    }
    return loss;
}

Node pinball_rows(const Node& f, const std::vector<double>& y, const std::vector<double>& levels) {
    Node delta = sub(Node::constant(col_tensor(y)), f);
    Node lvl = Node::constant(col_tensor(levels));
    return mean_all(add(mul(lvl, relu(delta)), mul(shift(neg(lvl), 1.0), relu(neg(delta)))));
}

Node bce_with_logits(const Node& f, const std::vector<double>& y) {
    Node yv = Node::constant(col_tensor(y));
    return mean_all(sub(softplus(f), mul(yv, f)));
}

struct SimBatch {
    Tensor x;
    std::vector<double> y;
    std::vector<double> level;
};

SimBatch draw_sim_batch(int batch, Rng& rng) {
    SimBatch b;
    b.x = Tensor(batch, 1);
    b.y.resize(batch);
    b.level.resize(batch);
    for (int i = 0; i < batch; ++i) {
        const double x = rng.uniform(-1.5, 1.5);
        b.x.at(i, 0) = x;
        b.y[i] = quantile_sim_mean(x) + quantile_sim_noise_scale(x) * rng.normal();
        double u;
        do {
            u = rng.uniform();
        } while (u <= 0.0);
        b.level[i] = u;
    }
    return b;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t v = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    v ^= v >> 30;
    v *= 0xBF58476D1CE4E5B9ULL;
    v ^= v >> 27;
    return v;
}

std::string format_level(double r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Fn>
double time_ms_median(Fn&& fn, int warmups = 5, int reps = 30) {
    for (int i = 0; i < warmups; ++i) fn();
    std::vector<double> ts;
    ts.reserve(reps);
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        ts.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return median_of(std::move(ts));
}

}  // namespace

// ---------------------------------------------------------------------------
// quantile simulation experiment
// ---------------------------------------------------------------------------

namespace {

// One seed of quantile training; returns a scorer (x rows, level) -> y_hat.
struct QuantileModel {
    std::optional<GcmRegressor> gcm;
    std::optional<MonotoneNet> net;

    std::vector<double> quantile_curve(const Tensor& xs, double level, Rng& rng) const {
        const int n = xs.rows();
        if (gcm) {
            Tensor r = Tensor::full(n, 1, level);
            return gcm->predict(xs, r, rng);
        }
        Tensor r = Tensor::full(n, 1, level);
        Tensor f = net->forward_values(xs, r);
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) out[i] = f.at(i, 0);
        return out;
    }
};

QuantileModel train_quantile_seed(const TrainConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Optimizer opt = make_optimizer(cfg);
    QuantileModel out;
    if (cfg.method == "gcm") {
        GcmConfig gc;
        gc.x_dim = 1;
        gc.revenue_dim = 1;
        gc.latent_dim = cfg.latent_dim;
        gc.hidden_dim = cfg.hidden_dim;
        gc.sample_count = cfg.sample_number;
        out.gcm.emplace(gc, rng);
        std::vector<Node> params = out.gcm->params();
        for (int it = 0; it < cfg.max_epoch; ++it) {
            SimBatch b = draw_sim_batch(cfg.batch_size, rng);
            Node loss = out.gcm->pinball_loss(b.x, b.y, b.level, rng);
            backward(loss);
            opt.step(params);
        }
        return out;
    }
    MonotoneNetSpec spec = baseline_spec(cfg, 1, 1);
    RegularizerSpec reg = regularizer_for(cfg);
    out.net.emplace(spec, rng, cfg.method);
    std::vector<Node> params = out.net->params();
    for (int it = 0; it < cfg.max_epoch; ++it) {
        SimBatch b = draw_sim_batch(cfg.batch_size, rng);
        Tensor r_col(cfg.batch_size, 1);
        for (int i = 0; i < cfg.batch_size; ++i) r_col.at(i, 0) = b.level[i];
        Node f = out.net->forward(Node::constant(b.x), Node::constant(r_col));
        Node loss = pinball_rows(f, b.y, b.level);
        loss = add_regularizer(loss, *out.net, reg, b.x, r_col, rng);
        backward(loss);
        opt.step(params);
    }
    return out;
}

void write_curves(const std::string& out_dir, const QuantileModel& model, const std::vector<double>& levels,
                  Rng& rng) {
    const int grid = 201;
    Tensor xs(grid, 1);
    for (int i = 0; i < grid; ++i) xs.at(i, 0) = -1.5 + 3.0 * i / (grid - 1);
    for (double lvl : levels) {
        std::vector<double> yh = model.quantile_curve(xs, lvl, rng);
        std::ofstream out(out_dir + "/curves_" + format_level(lvl) + ".csv");
        out << "x,y_hat\n";
        for (int i = 0; i < grid; ++i) out << xs.at(i, 0) << "," << yh[i] << "\n";
    }
}

void save_quantile_model(const std::string& out_dir, const TrainConfig& cfg, const QuantileModel& model) {
    PreprocessInfo pre;
    pre.x_names = {"x"};
    pre.r_names = {"r"};
    pre.r_signs = {+1};
    pre.task = TaskKind::Regression;
    json c;
    if (model.gcm) {
        const GcmConfig& gc = model.gcm->core().config();
        c = {{"x_dim", gc.x_dim},
             {"revenue_dim", gc.revenue_dim},
             {"latent_dim", gc.latent_dim},
             {"hidden_dim", gc.hidden_dim},
             {"sample_count", gc.sample_count}};
        save_model(out_dir + "/model.json", "gcm_regressor", c.dump(), model.gcm->params(), pre);
    } else {
        const MonotoneNetSpec& sp = model.net->spec();
        c = {{"x_dim", sp.x_dim},          {"r_dim", sp.r_dim},
             {"hidden", sp.hidden},        {"groups", sp.groups},
             {"units_per_group", sp.units_per_group}, {"smoothing_beta", sp.smoothing_beta}};
        save_model(out_dir + "/model.json", to_string(sp.kind), c.dump(), model.net->params(), pre);
    }
    (void)cfg;
}

}  // namespace

QuantileResult run_quantile_experiment(const TrainConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    if (cfg.method == "igcm")
        throw std::invalid_argument("quantile experiment: igcm is excluded (strictly monotone setting)");
    QuantileResult result;
    result.method = cfg.method;
    result.levels = {0.1, 0.3, 0.5, 0.7, 0.9};
    result.per_level.resize(result.levels.size());
    for (std::size_t li = 0; li < result.levels.size(); ++li) {
        result.per_level[li].method = cfg.method;
        result.per_level[li].dataset = "quantile_sim";
        result.per_level[li].metric = "mae@r=" + format_level(result.levels[li]);
    }

    const int eval_n = 1000;
    std::optional<QuantileModel> last_model;
    for (int s = 0; s < cfg.repeats; ++s) {
        const std::uint64_t seed_s = cfg.seed + static_cast<std::uint64_t>(s);
        const auto t0 = std::chrono::steady_clock::now();
        QuantileModel model = train_quantile_seed(cfg, mix_seed(seed_s, 1));
        const auto t1 = std::chrono::steady_clock::now();
        Rng eval_rng(mix_seed(seed_s, 2));
        for (std::size_t li = 0; li < result.levels.size(); ++li) {
            const double lvl = result.levels[li];
            Tensor xs(eval_n, 1);
            std::vector<double> truth(eval_n);
            for (int i = 0; i < eval_n; ++i) {
                const double x = eval_rng.uniform(-1.5, 1.5);
                xs.at(i, 0) = x;
                truth[i] = true_quantile(x, lvl);
            }
            std::vector<double> pred = model.quantile_curve(xs, lvl, eval_rng);
            result.per_level[li].per_seed.push_back(mae(pred, truth));
        }
        const auto t2 = std::chrono::steady_clock::now();
        for (auto& rep : result.per_level) {
            rep.train_seconds += std::chrono::duration<double>(t1 - t0).count();
            rep.eval_seconds += std::chrono::duration<double>(t2 - t1).count();
        }
        if (s + 1 == cfg.repeats) last_model.emplace(std::move(model));
    }

    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_results_jsonl(out_dir + "/results.jsonl", result.per_level);
        write_summary_csv(out_dir + "/summary.csv", result.per_level);
        Rng curve_rng(mix_seed(cfg.seed, 3));
        write_curves(out_dir, *last_model, result.levels, curve_rng);
        save_quantile_model(out_dir, cfg, *last_model);
    }
    return result;
}

// ---------------------------------------------------------------------------
// tabular benchmark
// ---------------------------------------------------------------------------

std::string metric_for(const Dataset& d) {
    if (d.task == TaskKind::Regression) return "rmse";
    double pos = 0.0;
    for (double y : d.y) pos += y;
    const double ratio = pos / d.n();
    return (ratio >= 0.3 && ratio <= 0.7) ? "acc" : "auc";
}

namespace {

struct FittedModel {
    std::optional<GcmModel> gcm;
    std::optional<GcmRegressor> gcm_reg;
    std::optional<IgcmModel> igcm;
    std::optional<IgcmRegressor> igcm_reg;
    std::optional<MonotoneNet> net;
    double y_mean = 0.0, y_sd = 1.0;  // regression target transform

    std::vector<double> score(const Tensor& x, const Tensor& r, TaskKind task, Rng& rng) const {
        std::vector<double> out;
        if (gcm)
            out = gcm->predict_batch(x, r, rng);
        else if (igcm)
            out = igcm->predict_batch(x, r, rng);
        else if (gcm_reg)
            out = gcm_reg->predict(x, r, rng);
        else if (igcm_reg)
            out = igcm_reg->predict(x, r, rng);
        else {
            Tensor f = net->forward_values(x, r);
            out.resize(f.rows());
            for (int i = 0; i < f.rows(); ++i)
                out[i] = task == TaskKind::Binary ? 1.0 / (1.0 + std::exp(-f.at(i, 0))) : f.at(i, 0);
        }
        if (task == TaskKind::Regression)
            for (double& v : out) v = v * y_sd + y_mean;
        return out;
    }
};

FittedModel train_on_split(const TrainConfig& cfg, const Split& split, TaskKind task, Rng& rng) {
    const int n = split.x_train.rows();
    const int x_dim = split.x_train.cols();
    const int r_dim = split.r_train.cols();
    Optimizer opt = make_optimizer(cfg);
    FittedModel fm;

    std::vector<double> y_train = split.y_train;
    if (task == TaskKind::Regression) {
        double s = 0.0;
        for (double v : y_train) s += v;
        fm.y_mean = s / n;
        double var = 0.0;
        for (double v : y_train) var += (v - fm.y_mean) * (v - fm.y_mean);
        fm.y_sd = std::sqrt(var / n);
        if (fm.y_sd == 0.0) throw std::runtime_error("train: constant regression target");
        for (double& v : y_train) v = (v - fm.y_mean) / fm.y_sd;
    }

    std::vector<Node> params;
    if (cfg.method == "gcm") {
        GcmConfig gc;
        gc.x_dim = x_dim;
        gc.revenue_dim = r_dim;
        gc.latent_dim = cfg.latent_dim;
        gc.hidden_dim = cfg.hidden_dim;
        gc.sample_count = cfg.sample_number;
        if (task == TaskKind::Binary)
            fm.gcm.emplace(gc, rng);
        else
            fm.gcm_reg.emplace(gc, rng);
        params = fm.gcm ? fm.gcm->params() : fm.gcm_reg->params();
    } else if (cfg.method == "igcm") {
        IgcmConfig ic;
        ic.x_dim = x_dim;
        ic.revenue_dim = r_dim;
        ic.latent_dim = cfg.latent_dim;
        ic.hidden_dim = cfg.hidden_dim;
        ic.sample_count = cfg.sample_number;
        ic.k_samples = cfg.k_samples;
        if (task == TaskKind::Binary)
            fm.igcm.emplace(ic, rng);
        else
            fm.igcm_reg.emplace(ic, rng);
        params = fm.igcm ? fm.igcm->params() : fm.igcm_reg->params();
    } else {
        fm.net.emplace(baseline_spec(cfg, x_dim, r_dim), rng, cfg.method);
        params = fm.net->params();
    }
    RegularizerSpec reg = regularizer_for(cfg);

    std::vector<int> label_ints = task == TaskKind::Binary ? as_int_labels(y_train) : std::vector<int>{};
    for (int epoch = 0; epoch < cfg.max_epoch; ++epoch) {
        std::vector<int> perm = rng.permutation(n);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - start);
            Tensor xb = take_rows(split.x_train, perm, start, count);
            Tensor rb = take_rows(split.r_train, perm, start, count);
            Node loss;
            if (fm.gcm) {
                loss = fm.gcm->loss(xb, rb, take_vals(label_ints, perm, start, count), rng);
            } else if (fm.igcm) {
                loss = fm.igcm->loss(xb, rb, take_vals(label_ints, perm, start, count), rng);
            } else if (fm.gcm_reg) {
                loss = fm.gcm_reg->loss(xb, rb, take_vals(y_train, perm, start, count), rng);
            } else if (fm.igcm_reg) {
                loss = fm.igcm_reg->loss(xb, rb, take_vals(y_train, perm, start, count), rng);
            } else {
                Node f = fm.net->forward(Node::constant(xb), Node::constant(rb));
                std::vector<double> yb = take_vals(y_train, perm, start, count);
                loss = task == TaskKind::Binary ? bce_with_logits(f, yb)
                                                : mean_all(square(sub(f, Node::constant(col_tensor(yb)))));
                loss = add_regularizer(loss, *fm.net, reg, xb, rb, rng);
            }
            backward(loss);
            opt.step(params);
        }
    }
    return fm;
}

void save_benchmark_model(const std::string& path, const TrainConfig& cfg, const FittedModel& fm,
                          const Dataset& data, const SchemaConfig& schema, const Split& split,
                          TaskKind task) {
    PreprocessInfo pre;
    pre.x_names = data.x_names;
    pre.r_names = data.r_names;
    for (const auto& mc : schema.monotone_columns) pre.r_signs.push_back(mc.sign);
    if (split.standardized) {
        pre.x_mean = split.x_stats.mean;
        pre.x_sd = split.x_stats.sd;
        pre.r_mean = split.r_stats.mean;
        pre.r_sd = split.r_stats.sd;
    }
    pre.y_mean = fm.y_mean;
    pre.y_sd = fm.y_sd;
    pre.task = task;
    json c;
    if (fm.gcm || fm.gcm_reg) {
        const GcmConfig& gc = fm.gcm ? fm.gcm->config() : fm.gcm_reg->core().config();
        c = {{"x_dim", gc.x_dim},
             {"revenue_dim", gc.revenue_dim},
             {"latent_dim", gc.latent_dim},
             {"hidden_dim", gc.hidden_dim},
             {"sample_count", gc.sample_count}};
        if (fm.gcm)
            save_model(path, "gcm", c.dump(), fm.gcm->params(), pre);
        else
            save_model(path, "gcm_regressor", c.dump(), fm.gcm_reg->params(), pre);
    } else if (fm.igcm || fm.igcm_reg) {
        const IgcmConfig& ic = fm.igcm ? fm.igcm->config() : fm.igcm_reg->core().config();
        c = {{"x_dim", ic.x_dim},       {"revenue_dim", ic.revenue_dim}, {"latent_dim", ic.latent_dim},
             {"kernel_dim", ic.k_dim()}, {"hidden_dim", ic.hidden_dim},   {"sample_count", ic.sample_count},
             {"k_samples", ic.k_samples}};
        if (fm.igcm)
            save_model(path, "igcm", c.dump(), fm.igcm->params(), pre);
        else
            save_model(path, "igcm_regressor", c.dump(), fm.igcm_reg->params(), pre);
    } else {
        const MonotoneNetSpec& sp = fm.net->spec();
        c = {{"x_dim", sp.x_dim},          {"r_dim", sp.r_dim},
             {"hidden", sp.hidden},        {"groups", sp.groups},
             {"units_per_group", sp.units_per_group}, {"smoothing_beta", sp.smoothing_beta}};
        save_model(path, to_string(sp.kind), c.dump(), fm.net->params(), pre);
    }
}

}  // namespace

RunReport run_benchmark(const TrainConfig& cfg, const SchemaConfig& schema, const std::string& out_dir) {
    cfg.validate();
    Dataset data = load_dataset(schema);
    const std::string metric_kind = metric_for(data);
    RunReport rep;
    rep.method = cfg.method;
    rep.dataset = data.name;
    rep.metric = metric_kind;

    for (int s = 0; s < cfg.repeats; ++s) {
        const std::uint64_t seed_s = cfg.seed + static_cast<std::uint64_t>(s);
        Split split = train_test_split(data, seed_s, schema.standardize);
        Rng rng(mix_seed(seed_s, 11));
        const auto t0 = std::chrono::steady_clock::now();
        FittedModel fm = train_on_split(cfg, split, data.task, rng);
        const auto t1 = std::chrono::steady_clock::now();
        std::vector<double> pred = fm.score(split.x_test, split.r_test, data.task, rng);
        rep.per_seed.push_back(metric(metric_kind, pred, split.y_test));
        const auto t2 = std::chrono::steady_clock::now();
        rep.train_seconds += std::chrono::duration<double>(t1 - t0).count();
        rep.eval_seconds += std::chrono::duration<double>(t2 - t1).count();
        if (s + 1 == cfg.repeats && !out_dir.empty()) {
            ensure_dir(out_dir);
            save_benchmark_model(out_dir + "/model.json", cfg, fm, data, schema, split, data.task);
        }
    }
    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_results_jsonl(out_dir + "/results.jsonl", {rep});
        write_summary_csv(out_dir + "/summary.csv", {rep});
    }
    return rep;
}

std::vector<AblationCell> run_ablation(const TrainConfig& cfg, const SchemaConfig& schema,
                                       const std::vector<int>& d_grid, const std::vector<int>& n_grid,
                                       const std::string& out_dir) {
    if (cfg.method != "gcm" && cfg.method != "igcm")
        throw std::invalid_argument("ablation: method must be gcm or igcm");
    if (d_grid.empty() || n_grid.empty()) throw std::invalid_argument("ablation: empty grid");
    std::vector<AblationCell> cells;
    for (int d : d_grid)
        for (int n : n_grid) {
            TrainConfig c = cfg;
            c.latent_dim = d;
            c.sample_number = n;
            cells.push_back({d, n, run_benchmark(c, schema, "")});
        }
    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        std::ofstream out(out_dir + "/ablation.csv");
        out << "method,dataset,metric,latent_dim,sample_number,repeats,mean,ci95_half_width\n";
        for (const auto& cell : cells) {
            out << cell.report.method << "," << cell.report.dataset << "," << cell.report.metric << ","
                << cell.latent_dim << "," << cell.sample_number << "," << cell.report.per_seed.size() << ","
                << cell.report.mean() << ","
                << (cell.report.per_seed.size() >= 2 ? cell.report.ci_half_width() : 0.0) << "\n";
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// amortized-inference timing
// ---------------------------------------------------------------------------

TimingResult timing_probe(const GcmModel& model, const MonotoneNet& baseline,
                          const std::vector<double>& x, const std::vector<std::vector<double>>& thresholds,
                          const std::vector<int>& r_counts, Rng& rng) {
    TimingResult result;
    const int m = model.config().revenue_dim;
    for (int count : r_counts)
        if (count < 1 || count > static_cast<int>(thresholds.size()))
            throw std::invalid_argument("timing_probe: r_count exceeds threshold pool");

    {
        const long before = model.encoder().forward_calls();
        std::vector<std::vector<double>> sub(thresholds.begin(),
                                             thresholds.begin() + r_counts.back());
        model.predict(x, sub, rng);
        result.encoder_calls_per_predict = model.encoder().forward_calls() - before;
    }

    for (int count : r_counts) {
        std::vector<std::vector<double>> sub(thresholds.begin(), thresholds.begin() + count);
        Tensor xs(count, static_cast<int>(x.size()));
        Tensor rs(count, m);
        for (int i = 0; i < count; ++i) {
            for (int j = 0; j < static_cast<int>(x.size()); ++j) xs.at(i, j) = x[j];
            for (int j = 0; j < m; ++j) rs.at(i, j) = sub[i][j];
        }
        TimingRow row;
        row.r_count = count;
        row.model_ms = time_ms_median([&] { model.predict(x, sub, rng); });
        row.baseline_ms = time_ms_median([&] { baseline.forward_values(xs, rs); });
        result.rows.push_back(row);
    }
    return result;
}

TimingResult run_timing(const TrainConfig& cfg, const SchemaConfig& schema,
                        const std::vector<int>& r_counts, const std::string& out_dir) {
    Dataset data = load_dataset(schema);
    if (data.task != TaskKind::Binary)
        throw std::invalid_argument("timing: expects a binary-task dataset");
    Split split = train_test_split(data, cfg.seed, schema.standardize);
    Rng rng(mix_seed(cfg.seed, 21));

    TrainConfig gcm_cfg = cfg;
    gcm_cfg.method = "gcm";
    FittedModel gcm_fm = train_on_split(gcm_cfg, split, data.task, rng);
    TrainConfig mm_cfg = cfg;
    mm_cfg.method = "mm";
    FittedModel mm_fm = train_on_split(mm_cfg, split, data.task, rng);

    const int max_count = *std::max_element(r_counts.begin(), r_counts.end());
    std::vector<std::vector<double>> thresholds;
    for (int i = 0; i < max_count; ++i) {
        std::vector<double> t(data.r_dim());
        const int row = i % split.r_test.rows();
        for (int j = 0; j < data.r_dim(); ++j) t[j] = split.r_test.at(row, j);
        thresholds.push_back(std::move(t));
    }
    std::vector<double> x(data.x_dim());
    for (int j = 0; j < data.x_dim(); ++j) x[j] = split.x_test.at(0, j);

    TimingResult result = timing_probe(*gcm_fm.gcm, *mm_fm.net, x, thresholds, r_counts, rng);
    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        std::ofstream out(out_dir + "/timing.csv");
        out << "r_count,gcm_ms,mm_ms\n";
        for (const auto& row : result.rows)
            out << row.r_count << "," << row.model_ms << "," << row.baseline_ms << "\n";
    }
    return result;
}

}  // namespace monocost
