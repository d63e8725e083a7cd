#pragma once

// Batched dense-layer kernels.
//
// Weights are stored input-major: W has shape (inputs x outputs) and a layer
// computes Y = X W + b for a batch X of shape (batch x inputs).
//
// Two implementations share one signature set:
//   reference  plain loops, single-threaded, kept as the testing baseline.
//   openmp     blocked loops with OpenMP work-sharing and SIMD.
// The OpenMP kernels parallelize over independent output elements only; every
// output element is reduced by one thread in a fixed order, so results do not
// depend on the thread count.

#include <span>

#include "simp/matrix.hpp"

namespace simp::kernels {

enum class Backend { reference, openmp };

namespace reference {
/// y = x * w + bias (broadcast over rows). y is resized.
void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y);
/// dx = dy * w^T. dx is resized.
void input_grad(const Matrix& dy, const Matrix& w, Matrix& dx);
/// dw = x^T * dy, db = column sums of dy. Outputs are overwritten.
void weight_grad(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> db);
}  // namespace reference

namespace openmp {
void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y);
void input_grad(const Matrix& dy, const Matrix& w, Matrix& dx);
void weight_grad(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> db);
}  // namespace openmp

void affine(Backend backend, const Matrix& x, const Matrix& w, std::span<const double> bias,
            Matrix& y);
void input_grad(Backend backend, const Matrix& dy, const Matrix& w, Matrix& dx);
void weight_grad(Backend backend, const Matrix& x, const Matrix& dy, Matrix& dw,
                 std::span<double> db);

}  // namespace simp::kernels
