#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace kinn::ad {

// Dense row-major matrix of doubles. Vectors are 1xN rows, scalars 1x1.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
    Tensor(std::size_t r, std::size_t c, std::vector<double> data);

    static Tensor scalar(double x);
    static Tensor row(std::span<const double> data);
    static Tensor row(std::initializer_list<double> data);
    static Tensor filled(std::size_t r, std::size_t c, double x);

    std::size_t size() const { return rows * cols; }
    bool empty() const { return v.empty(); }

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;

    std::span<const double> row_span(std::size_t r) const {
        return std::span<const double>(v.data() + r * cols, cols);
    }
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transposed(const Tensor& a);

}  // namespace kinn::ad
