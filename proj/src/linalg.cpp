#include "kinn/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace kinn {

using ad::Tensor;

namespace {

// Cholesky solve of (A^T A + lambda I) W = A^T B.
Tensor ridge_solve(const Tensor& a, const Tensor& b, double lambda) {
    const std::size_t m = a.cols;
    Tensor gram(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < a.rows; ++r) s += a.at(r, i) * a.at(r, j);
            gram.at(i, j) = s;
            gram.at(j, i) = s;
        }
        gram.at(i, i) += lambda;
    }
    Tensor rhs = ad::matmul(ad::transposed(a), b);

    // lower-triangular factor in place
    Tensor l(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = gram.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("ridge solve: matrix not positive definite");
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    Tensor w(m, b.cols);
    for (std::size_t c = 0; c < b.cols; ++c) {
        // forward substitution L y = rhs
        std::vector<double> y(m);
        for (std::size_t i = 0; i < m; ++i) {
            double s = rhs.at(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * y[k];
            y[i] = s / l.at(i, i);
        }
        // back substitution L^T w = y
        for (std::size_t i = m; i-- > 0;) {
            double s = y[i];
            for (std::size_t k = i + 1; k < m; ++k) s -= l.at(k, i) * w.at(k, c);
            w.at(i, c) = s / l.at(i, i);
        }
    }
    return w;
}

double gram_trace(const Tensor& a) {
    double t = 0.0;
    for (double x : a.v) t += x * x;
    return t;
}

}  // namespace

Tensor least_squares(const Tensor& a, const Tensor& b) {
    if (a.rows == 0 || a.cols == 0) throw std::invalid_argument("least squares: empty system");
    if (a.rows != b.rows) throw std::invalid_argument("least squares: row counts differ");

    const double lambda = 1e-8 * gram_trace(a) / static_cast<double>(a.cols);
    if (a.rows < a.cols) {
        return ridge_solve(a, b, lambda > 0.0 ? lambda : 1e-12);
    }

    // Householder QR on working copies.
    Tensor r = a;
    Tensor y = b;
    const std::size_t nrow = r.rows, ncol = r.cols;
    std::vector<double> hv(nrow);
    for (std::size_t k = 0; k < ncol; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < nrow; ++i) norm += r.at(i, k) * r.at(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // rank check below handles it
        const double alpha = r.at(k, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < nrow; ++i) {
            hv[i] = r.at(i, k) - (i == k ? alpha : 0.0);
            vnorm2 += hv[i] * hv[i];
        }
        if (vnorm2 == 0.0) continue;
        for (std::size_t j = k; j < ncol; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < nrow; ++i) dot += hv[i] * r.at(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < nrow; ++i) r.at(i, j) -= f * hv[i];
        }
        for (std::size_t j = 0; j < y.cols; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < nrow; ++i) dot += hv[i] * y.at(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < nrow; ++i) y.at(i, j) -= f * hv[i];
        }
    }

    double rmax = 0.0;
    for (std::size_t k = 0; k < ncol; ++k) rmax = std::max(rmax, std::abs(r.at(k, k)));
    for (std::size_t k = 0; k < ncol; ++k) {
        if (std::abs(r.at(k, k)) <= 1e-12 * rmax || r.at(k, k) == 0.0) {
            return ridge_solve(a, b, lambda > 0.0 ? lambda : 1e-12);
        }
    }

    Tensor w(ncol, b.cols);
    for (std::size_t c = 0; c < b.cols; ++c) {
        for (std::size_t i = ncol; i-- > 0;) {
            double s = y.at(i, c);
            for (std::size_t j = i + 1; j < ncol; ++j) s -= r.at(i, j) * w.at(j, c);
            w.at(i, c) = s / r.at(i, i);
        }
    }
    return w;
}

}  // namespace kinn
