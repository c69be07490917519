#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "monocost/experiments.hpp"
#include "monocost/metrics.hpp"
#include "monocost/serialize.hpp"

namespace {

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        out.push_back(std::stoi(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (out.empty()) throw std::invalid_argument("empty integer list");
    return out;
}

void print_report(const monocost::RunReport& rep) { std::cout << rep.summary_line() << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"monocost: monotonic conditional probability models and benchmarks"};
    app.require_subcommand(1);

    std::string config_path, schema_path, out_dir = "out";

    auto* sim = app.add_subcommand("simulate", "quantile-regression simulation");
    sim->add_option("--config", config_path, "train config JSON")->required();
    sim->add_option("--out-dir", out_dir, "output directory");

    std::string bench_out = "out";
    auto* bench = app.add_subcommand("bench", "tabular benchmark on a CSV dataset");
    bench->add_option("--config", config_path, "train config JSON")->required();
    bench->add_option("--schema", schema_path, "dataset schema JSON")->required();
    bench->add_option("--out-dir", bench_out, "output directory");

    std::string d_grid_s = "4,8,12,16", n_grid_s = "8,16,24,32", ablate_out = "out";
    auto* ablate = app.add_subcommand("ablate", "latent-dim x sample-count grid sweep");
    ablate->add_option("--config", config_path, "train config JSON")->required();
    ablate->add_option("--schema", schema_path, "dataset schema JSON")->required();
    ablate->add_option("--d-grid", d_grid_s, "latent dims, comma separated");
    ablate->add_option("--n-grid", n_grid_s, "sample counts, comma separated");
    ablate->add_option("--out-dir", ablate_out, "output directory");

    std::string counts_s = "1,2,4,8,16,32,64,128,256,512,1024", timing_out = "out";
    auto* timing = app.add_subcommand("timing", "amortized-inference timing probe");
    timing->add_option("--config", config_path, "train config JSON")->required();
    timing->add_option("--schema", schema_path, "dataset schema JSON")->required();
    timing->add_option("--r-counts", counts_s, "threshold counts, comma separated");
    timing->add_option("--out-dir", timing_out, "output directory");

    std::string model_path, input_path, pred_out = "predictions.csv";
    auto* predict = app.add_subcommand("predict", "score CSV rows with a saved model");
    predict->add_option("--model", model_path, "model blob (JSON)")->required();
    predict->add_option("--input", input_path, "input rows CSV")->required();
    predict->add_option("--out", pred_out, "predictions CSV path");
    std::uint64_t predict_seed = 0;
    predict->add_option("--seed", predict_seed, "sampling seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            auto cfg = monocost::train_config_from_file(config_path);
            auto result = monocost::run_quantile_experiment(cfg, out_dir);
            for (const auto& rep : result.per_level) print_report(rep);
        } else if (bench->parsed()) {
            auto cfg = monocost::train_config_from_file(config_path);
            auto schema = monocost::schema_from_file(schema_path);
            print_report(monocost::run_benchmark(cfg, schema, bench_out));
        } else if (ablate->parsed()) {
            auto cfg = monocost::train_config_from_file(config_path);
            auto schema = monocost::schema_from_file(schema_path);
            auto cells = monocost::run_ablation(cfg, schema, parse_int_list(d_grid_s),
                                                parse_int_list(n_grid_s), ablate_out);
            for (const auto& cell : cells) {
                std::cout << "D=" << cell.latent_dim << " N=" << cell.sample_number << " ";
                print_report(cell.report);
            }
        } else if (timing->parsed()) {
            auto cfg = monocost::train_config_from_file(config_path);
            auto schema = monocost::schema_from_file(schema_path);
            auto result = monocost::run_timing(cfg, schema, parse_int_list(counts_s), timing_out);
            std::cout << "encoder calls per predict: " << result.encoder_calls_per_predict << "\n";
            for (const auto& row : result.rows)
                std::cout << "r_count=" << row.r_count << " gcm_ms=" << row.model_ms
                          << " mm_ms=" << row.baseline_ms << "\n";
        } else if (predict->parsed()) {
            auto model = monocost::LoadedModel::load(model_path);
            auto table = monocost::read_csv(input_path);
            const auto& pre = model.preprocess();
            auto col_of = [&](const std::string& name) {
                for (std::size_t j = 0; j < table.header.size(); ++j)
                    if (table.header[j] == name) return static_cast<int>(j);
                throw std::runtime_error("predict: input is missing column '" + name + "'");
            };
            const int n = static_cast<int>(table.rows.size());
            monocost::Tensor x(n, static_cast<int>(pre.x_names.size()));
            monocost::Tensor r(n, static_cast<int>(pre.r_names.size()));
            for (int i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < pre.x_names.size(); ++j)
                    x.at(i, static_cast<int>(j)) = std::stod(table.rows[i][col_of(pre.x_names[j])]);
                for (std::size_t j = 0; j < pre.r_names.size(); ++j)
                    r.at(i, static_cast<int>(j)) =
                        pre.r_signs[j] * std::stod(table.rows[i][col_of(pre.r_names[j])]);
            }
            monocost::Rng rng(predict_seed);
            auto pred = model.predict(x, r, rng);
            std::ofstream out(pred_out);
            out << "prediction\n";
            for (double v : pred) out << v << "\n";
            std::cout << "wrote " << n << " predictions to " << pred_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
