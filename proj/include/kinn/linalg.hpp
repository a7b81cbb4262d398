#pragma once

#include "kinn/tensor.hpp"

namespace kinn {

// Minimizer W of ||A W - B||_F via Householder QR. Falls back to a ridge
// regularized normal-equation solve (lambda = 1e-8 * trace(A^T A) / cols)
// when A is rank deficient or underdetermined.
ad::Tensor least_squares(const ad::Tensor& a, const ad::Tensor& b);

}  // namespace kinn
