#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace monocost {

// Dense row-major 2-D array of doubles. Rank is fixed at two; vectors are
// 1xN or Nx1, scalars are 1x1.
class Tensor {
public:
    Tensor() = default;

    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(check_extents(rows, cols), 0.0) {}

    Tensor(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (static_cast<std::size_t>(check_extents(rows, cols)) != data_.size())
            throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_str());
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

    static Tensor full(int rows, int cols, double v) {
        Tensor t(rows, cols);
        t.fill(v);
        return t;
    }

    static Tensor row(std::vector<double> v) {
        const int n = static_cast<int>(v.size());
        return Tensor(1, n, std::move(v));
    }

    static Tensor col(std::vector<double> v) {
        const int n = static_cast<int>(v.size());
        return Tensor(n, 1, std::move(v));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

    void fill(double v) {
        for (double& x : data_) x = v;
    }

    bool all_finite() const {
        for (double x : data_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

private:
    static int check_extents(int rows, int cols) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Tensor: negative extent");
        return rows * cols;
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

}  // namespace monocost
