#include "simp/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <string>

#include "simp/error.hpp"

namespace simp::kernels {
namespace {

void check_affine(const Matrix& x, const Matrix& w, std::span<const double> bias) {
  if (x.cols != w.rows || bias.size() != w.cols) {
    throw StructuralError("affine: input width " + std::to_string(x.cols) + ", weights " +
                          std::to_string(w.rows) + "x" + std::to_string(w.cols) + ", bias " +
                          std::to_string(bias.size()));
  }
}

void check_input_grad(const Matrix& dy, const Matrix& w) {
  if (dy.cols != w.cols) {
    throw StructuralError("input_grad: gradient width " + std::to_string(dy.cols) +
                          " does not match weight outputs " + std::to_string(w.cols));
  }
}

void check_weight_grad(const Matrix& x, const Matrix& dy, const Matrix& dw,
                       std::span<double> db) {
  if (x.rows != dy.rows || dw.rows != x.cols || dw.cols != dy.cols || db.size() != dy.cols) {
    throw StructuralError("weight_grad: shape mismatch");
  }
}

constexpr std::size_t kBlock = 4;

}  // namespace

namespace reference {

void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
  check_affine(x, w, bias);
  y = Matrix(x.rows, w.cols);
  for (std::size_t b = 0; b < x.rows; ++b) {
    for (std::size_t o = 0; o < w.cols; ++o) {
      double sum = bias[o];
      for (std::size_t i = 0; i < w.rows; ++i) sum += x(b, i) * w(i, o);
      y(b, o) = sum;
    }
  }
}

void input_grad(const Matrix& dy, const Matrix& w, Matrix& dx) {
  check_input_grad(dy, w);
  dx = Matrix(dy.rows, w.rows);
  for (std::size_t b = 0; b < dy.rows; ++b) {
    for (std::size_t i = 0; i < w.rows; ++i) {
      double sum = 0.0;
      for (std::size_t o = 0; o < w.cols; ++o) sum += dy(b, o) * w(i, o);
      dx(b, i) = sum;
    }
  }
}

void weight_grad(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> db) {
  check_weight_grad(x, dy, dw, db);
  for (std::size_t i = 0; i < dw.rows; ++i) {
    for (std::size_t o = 0; o < dw.cols; ++o) {
      double sum = 0.0;
      for (std::size_t b = 0; b < x.rows; ++b) sum += x(b, i) * dy(b, o);
      dw(i, o) = sum;
    }
  }
  for (std::size_t o = 0; o < dy.cols; ++o) {
    double sum = 0.0;
    for (std::size_t b = 0; b < dy.rows; ++b) sum += dy(b, o);
    db[o] = sum;
  }
}

}  // namespace reference

namespace openmp {

void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
  check_affine(x, w, bias);
  y = Matrix(x.rows, w.cols);
  const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(x.rows);
  const std::size_t n_in = w.rows;
  const std::size_t n_out = w.cols;
  const std::ptrdiff_t blocks = (batch + kBlock - 1) / kBlock;
  const double* wp = w.values.data();
  const double* bp = bias.data();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t b0 = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t nb = std::min<std::size_t>(kBlock, x.rows - b0);
    if (nb == kBlock) {
      double* y0 = &y.values[b0 * n_out];
      double* y1 = y0 + n_out;
      double* y2 = y1 + n_out;
      double* y3 = y2 + n_out;
      for (std::size_t o = 0; o < n_out; ++o) y0[o] = y1[o] = y2[o] = y3[o] = bp[o];
      for (std::size_t i = 0; i < n_in; ++i) {
        const double a0 = x(b0, i);
        const double a1 = x(b0 + 1, i);
        const double a2 = x(b0 + 2, i);
        const double a3 = x(b0 + 3, i);
        const double* wr = wp + i * n_out;
#pragma omp simd
        for (std::size_t o = 0; o < n_out; ++o) {
          const double wv = wr[o];
          y0[o] += a0 * wv;
          y1[o] += a1 * wv;
          y2[o] += a2 * wv;
          y3[o] += a3 * wv;
        }
      }
    } else {
      for (std::size_t b = b0; b < b0 + nb; ++b) {
        double* yr = &y.values[b * n_out];
        for (std::size_t o = 0; o < n_out; ++o) yr[o] = bp[o];
        for (std::size_t i = 0; i < n_in; ++i) {
          const double a = x(b, i);
          const double* wr = wp + i * n_out;
#pragma omp simd
          for (std::size_t o = 0; o < n_out; ++o) yr[o] += a * wr[o];
        }
      }
    }
  }
}

void input_grad(const Matrix& dy, const Matrix& w, Matrix& dx) {
  check_input_grad(dy, w);
  dx = Matrix(dy.rows, w.rows);
  const std::size_t n_in = w.rows;
  const std::size_t n_out = w.cols;
  const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(dy.rows);
  const double* wp = w.values.data();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < batch; ++b) {
    const double* g = &dy.values[static_cast<std::size_t>(b) * n_out];
    double* out = &dx.values[static_cast<std::size_t>(b) * n_in];
    for (std::size_t i = 0; i < n_in; ++i) {
      const double* wr = wp + i * n_out;
      double sum = 0.0;
#pragma omp simd reduction(+ : sum)
      for (std::size_t o = 0; o < n_out; ++o) sum += g[o] * wr[o];
      out[i] = sum;
    }
  }
}

void weight_grad(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> db) {
  check_weight_grad(x, dy, dw, db);
  const std::size_t n_in = dw.rows;
  const std::size_t n_out = dw.cols;
  const std::size_t batch = x.rows;
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((n_in + kBlock - 1) / kBlock);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t ni = std::min<std::size_t>(kBlock, n_in - i0);
    double* rows[kBlock] = {};
    for (std::size_t k = 0; k < ni; ++k) {
      rows[k] = &dw.values[(i0 + k) * n_out];
      std::fill(rows[k], rows[k] + n_out, 0.0);
    }
    if (ni == kBlock) {
      double* r0 = rows[0];
      double* r1 = rows[1];
      double* r2 = rows[2];
      double* r3 = rows[3];
      for (std::size_t b = 0; b < batch; ++b) {
        const double a0 = x(b, i0);
        const double a1 = x(b, i0 + 1);
        const double a2 = x(b, i0 + 2);
        const double a3 = x(b, i0 + 3);
        const double* g = &dy.values[b * n_out];
#pragma omp simd
        for (std::size_t o = 0; o < n_out; ++o) {
          const double gv = g[o];
          r0[o] += a0 * gv;
          r1[o] += a1 * gv;
          r2[o] += a2 * gv;
          r3[o] += a3 * gv;
        }
      }
    } else {
      for (std::size_t k = 0; k < ni; ++k) {
        double* r = rows[k];
        for (std::size_t b = 0; b < batch; ++b) {
          const double a = x(b, i0 + k);
          const double* g = &dy.values[b * n_out];
#pragma omp simd
          for (std::size_t o = 0; o < n_out; ++o) r[o] += a * g[o];
        }
      }
    }
  }

  const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(n_out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < cols; ++o) {
    double sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) sum += dy.values[b * n_out + static_cast<std::size_t>(o)];
    db[static_cast<std::size_t>(o)] = sum;
  }
}

}  // namespace openmp

void affine(Backend backend, const Matrix& x, const Matrix& w, std::span<const double> bias,
            Matrix& y) {
  if (backend == Backend::reference) {
    reference::affine(x, w, bias, y);
  } else {
    openmp::affine(x, w, bias, y);
  }
}

void input_grad(Backend backend, const Matrix& dy, const Matrix& w, Matrix& dx) {
  if (backend == Backend::reference) {
    reference::input_grad(dy, w, dx);
  } else {
    openmp::input_grad(dy, w, dx);
  }
}

void weight_grad(Backend backend, const Matrix& x, const Matrix& dy, Matrix& dw,
                 std::span<double> db) {
  if (backend == Backend::reference) {
    reference::weight_grad(x, dy, dw, db);
  } else {
    openmp::weight_grad(x, dy, dw, db);
  }
}

}  // namespace simp::kernels
