#include "monocost/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace monocost {

double t_quantile_975(int df) {
    if (df < 1) throw std::invalid_argument("t_quantile_975: df must be >= 1");
    static const double table[] = {12.70620474, 4.30265273, 3.18244631, 2.77644511, 2.57058184,
                                   2.44691185,  2.36462425, 2.30600414, 2.26215716, 2.22813885};
    if (df <= 10) return table[df - 1];
    const double z = 1.95996398454;
    const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
    const double v = static_cast<double>(df);
    return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v) +
           (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * v * v * v);
}

double RunReport::mean() const {
    if (per_seed.empty()) return 0.0;
    double s = 0.0;
    for (double v : per_seed) s += v;
    return s / per_seed.size();
}

double RunReport::std_dev() const {
    const std::size_t n = per_seed.size();
    if (n < 2) return 0.0;
    const double m = mean();
    double acc = 0.0;
    for (double v : per_seed) acc += (v - m) * (v - m);
    return std::sqrt(acc / (n - 1));
}

double RunReport::ci_half_width() const {
    const std::size_t n = per_seed.size();
    if (n < 2) throw std::runtime_error("RunReport: confidence interval needs >= 2 repeats");
    return t_quantile_975(static_cast<int>(n) - 1) * std_dev() / std::sqrt(static_cast<double>(n));
}

std::string RunReport::summary_line() const {
    std::ostringstream os;
    os << method << " " << dataset << " " << metric << " " << mean();
    if (per_seed.size() >= 2) os << " +/- " << ci_half_width();
    return os.str();
}

void write_results_jsonl(const std::string& path, const std::vector<RunReport>& reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& r : reports) {
        for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
            out << "{\"method\":\"" << r.method << "\",\"dataset\":\"" << r.dataset << "\",\"metric\":\""
                << r.metric << "\",\"seed_index\":" << s << ",\"value\":" << r.per_seed[s]
                << ",\"train_seconds\":" << r.train_seconds << ",\"eval_seconds\":" << r.eval_seconds
                << "}\n";
        }
    }
}

void write_summary_csv(const std::string& path, const std::vector<RunReport>& reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "method,dataset,metric,repeats,mean,ci95_half_width,train_seconds,eval_seconds\n";
    for (const auto& r : reports) {
        out << r.method << "," << r.dataset << "," << r.metric << "," << r.per_seed.size() << ","
            << r.mean() << "," << (r.per_seed.size() >= 2 ? r.ci_half_width() : 0.0) << ","
            << r.train_seconds << "," << r.eval_seconds << "\n";
    }
}

}  // namespace monocost
