#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monocost/tensor.hpp"

namespace monocost {

enum class TaskKind { Binary, Regression };

struct MonotoneColumn {
    std::string name;
    int sign = +1;  // -1 negates the raw values on load
};

struct SchemaConfig {
    std::string csv_path;
    std::string target_column;
    std::vector<MonotoneColumn> monotone_columns;
    std::vector<std::string> drop_columns;
    bool standardize = true;
};

struct Dataset {
    Tensor x;  // n x n_x, non-monotone block
    Tensor r;  // n x m, monotone block (signs already applied)
    std::vector<double> y;
    TaskKind task = TaskKind::Regression;
    std::string name;
    std::vector<std::string> x_names, r_names;

    int n() const { return x.rows(); }
    int x_dim() const { return x.cols(); }
    int r_dim() const { return r.cols(); }
};

// Raw CSV table (RFC 4180: quoted fields, doubled-quote escapes, CRLF or LF).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

// Column extraction per the schema; numeric conversion failures carry
// row/column diagnostics. Task kind is inferred: binary iff every target
// value is 0 or 1.
Dataset load_dataset(const SchemaConfig& schema);

// Per-column affine normalization fitted on training rows only.
struct Standardizer {
    std::vector<double> mean, sd;
    void fit(const Tensor& rows, const std::vector<std::string>& names);
    Tensor apply(const Tensor& rows) const;
};

struct Split {
    Tensor x_train, r_train, x_test, r_test;
    std::vector<double> y_train, y_test;
    Standardizer x_stats, r_stats;  // fitted iff standardized
    bool standardized = false;
};

// Seeded-shuffle 4:1 train:test partition; when `standardize` is set, x and r
// are z-scored with training-split statistics.
Split train_test_split(const Dataset& d, std::uint64_t seed, bool standardize);

}  // namespace monocost
