#include "monocost/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "monocost/rng.hpp"

namespace monocost {

namespace {

std::vector<std::string> parse_csv_record(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quote at line " + std::to_string(line_no));
    fields.push_back(cur);
    return fields;
}

double parse_cell(const std::string& s, int row, const std::string& col) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("csv: non-numeric cell '" + s + "' at data row " + std::to_string(row) +
                                 ", column '" + col + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size())
        throw std::runtime_error("csv: non-numeric cell '" + s + "' at data row " + std::to_string(row) +
                                 ", column '" + col + "'");
    return v;
}

std::string basename_no_ext(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    const std::size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;
        auto fields = parse_csv_record(line, line_no);
        if (line_no == 1) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw std::runtime_error("csv: row " + std::to_string(line_no) + " has " +
                                         std::to_string(fields.size()) + " fields, expected " +
                                         std::to_string(table.header.size()));
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) throw std::runtime_error("csv: '" + path + "' is empty (no header row)");
    return table;
}

Dataset load_dataset(const SchemaConfig& schema) {
    CsvTable table = read_csv(schema.csv_path);
    if (table.rows.empty()) throw std::runtime_error("load_dataset: '" + schema.csv_path + "' has no data rows");

    auto col_index = [&](const std::string& name) {
        auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end())
            throw std::runtime_error("load_dataset: column '" + name + "' not present in '" +
                                     schema.csv_path + "'");
        return static_cast<int>(it - table.header.begin());
    };

    const int target_idx = col_index(schema.target_column);
    std::vector<int> r_idx;
    std::vector<int> r_sign;
    for (const auto& mc : schema.monotone_columns) {
        if (mc.name == schema.target_column)
            throw std::runtime_error("load_dataset: monotone column '" + mc.name + "' is the target");
        r_idx.push_back(col_index(mc.name));
        r_sign.push_back(mc.sign);
    }

    std::vector<int> x_idx;
    for (int j = 0; j < static_cast<int>(table.header.size()); ++j) {
        const std::string& name = table.header[j];
        if (j == target_idx) continue;
        if (std::find(schema.drop_columns.begin(), schema.drop_columns.end(), name) !=
            schema.drop_columns.end())
            continue;
        bool is_monotone = false;
        for (const auto& mc : schema.monotone_columns)
            if (mc.name == name) is_monotone = true;
        if (!is_monotone) x_idx.push_back(j);
    }

    const int n = static_cast<int>(table.rows.size());
    Dataset d;
    d.name = basename_no_ext(schema.csv_path);
    d.x = Tensor(n, static_cast<int>(x_idx.size()));
    d.r = Tensor(n, static_cast<int>(r_idx.size()));
    d.y.resize(n);
    for (int j : x_idx) d.x_names.push_back(table.header[j]);
    for (std::size_t k = 0; k < r_idx.size(); ++k) d.r_names.push_back(table.header[r_idx[k]]);

    bool binary = true;
    for (int i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        for (std::size_t k = 0; k < x_idx.size(); ++k)
            d.x.at(i, static_cast<int>(k)) = parse_cell(row[x_idx[k]], i + 1, table.header[x_idx[k]]);
        for (std::size_t k = 0; k < r_idx.size(); ++k)
            d.r.at(i, static_cast<int>(k)) =
                r_sign[k] * parse_cell(row[r_idx[k]], i + 1, table.header[r_idx[k]]);
        d.y[i] = parse_cell(row[target_idx], i + 1, schema.target_column);
        if (d.y[i] != 0.0 && d.y[i] != 1.0) binary = false;
    }
    d.task = binary ? TaskKind::Binary : TaskKind::Regression;
    return d;
}

void Standardizer::fit(const Tensor& rows, const std::vector<std::string>& names) {
    const int n = rows.rows(), m = rows.cols();
    mean.assign(m, 0.0);
    sd.assign(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += rows.at(i, j);
        mean[j] = s / n;
        double v = 0.0;
        for (int i = 0; i < n; ++i) {
            const double dlt = rows.at(i, j) - mean[j];
            v += dlt * dlt;
        }
        sd[j] = std::sqrt(v / n);
        if (sd[j] == 0.0) {
            const std::string name = j < static_cast<int>(names.size()) ? names[j] : std::to_string(j);
            throw std::runtime_error("standardize: column '" + name + "' has zero variance");
        }
    }
}

Tensor Standardizer::apply(const Tensor& rows) const {
    Tensor out(rows.rows(), rows.cols());
    for (int i = 0; i < rows.rows(); ++i)
        for (int j = 0; j < rows.cols(); ++j) out.at(i, j) = (rows.at(i, j) - mean[j]) / sd[j];
    return out;
}

Split train_test_split(const Dataset& d, std::uint64_t seed, bool standardize) {
    const int n = d.n();
    if (n < 5) throw std::runtime_error("train_test_split: need at least 5 rows");
    Rng rng(seed);
    std::vector<int> perm = rng.permutation(n);
    const int n_test = n / 5;
    const int n_train = n - n_test;

    auto take = [&](int first, int count, const Tensor& src) {
        Tensor out(count, src.cols());
        for (int i = 0; i < count; ++i)
            for (int j = 0; j < src.cols(); ++j) out.at(i, j) = src.at(perm[first + i], j);
        return out;
    };

    Split s;
    s.x_train = take(0, n_train, d.x);
    s.r_train = take(0, n_train, d.r);
    s.x_test = take(n_train, n_test, d.x);
    s.r_test = take(n_train, n_test, d.r);
    s.y_train.resize(n_train);
    s.y_test.resize(n_test);
    for (int i = 0; i < n_train; ++i) s.y_train[i] = d.y[perm[i]];
    for (int i = 0; i < n_test; ++i) s.y_test[i] = d.y[perm[n_train + i]];

    if (standardize) {
        s.x_stats.fit(s.x_train, d.x_names);
        s.r_stats.fit(s.r_train, d.r_names);
        s.x_train = s.x_stats.apply(s.x_train);
        s.x_test = s.x_stats.apply(s.x_test);
        s.r_train = s.r_stats.apply(s.r_train);
        s.r_test = s.r_stats.apply(s.r_test);
        s.standardized = true;
    }
    return s;
}

}  // namespace monocost
