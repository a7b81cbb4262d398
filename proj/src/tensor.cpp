#include "kinn/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace kinn::ad {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> data)
    : rows(r), cols(c), v(std::move(data)) {
    if (v.size() != r * c) {
        throw std::invalid_argument("tensor: data length does not match shape");
    }
}

Tensor Tensor::scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
}

Tensor Tensor::row(std::span<const double> data) {
    Tensor t;
    t.rows = 1;
    t.cols = data.size();
    t.v.assign(data.begin(), data.end());
    return t;
}

Tensor Tensor::row(std::initializer_list<double> data) {
    return row(std::span<const double>(data.begin(), data.size()));
}

Tensor Tensor::filled(std::size_t r, std::size_t c, double x) {
    Tensor t(r, c);
    t.v.assign(r * c, x);
    return t;
}

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions differ");
    }
    Tensor out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.v.data() + i * a.cols;
        double* orow = out.v.data() + i * out.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.v.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Tensor transposed(const Tensor& a) {
    Tensor out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

}  // namespace kinn::ad
