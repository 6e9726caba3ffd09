// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace emofuse::ag {
namespace {

template <typename T>
void require_ndim(const Tensor<T>& x, std::size_t ndim, const char* op) {
  if (!x.defined()) throw ParameterError(std::string(op) + ": undefined tensor");
  if (x.ndim() != ndim) {
    throw DimensionError(std::string(op) + ": expected " + std::to_string(ndim) + "-D tensor, got " +
                         shape_str(x.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

// Size of the last axis; scalars count as a single slice of width 1.
template <typename T>
std::size_t last_extent(const Tensor<T>& x) {
  return x.ndim() == 0 ? 1 : x.shape().back();
}

template <typename T>
bool wants_grad(const std::shared_ptr<TensorImpl<T>>& t) {
  return !t->grad.empty();
}

}  // namespace

template <typename T>
Tensor<T> matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_ndim(a, 2, "matmul");
  require_ndim(b, 2, "matmul");
  const std::size_t m = a.dim(0), p = a.dim(1), q = b.dim(1);
  if (b.dim(0) != p) {
    throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) + " . " +
                         shape_str(b.shape()));
  }
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<T> out(m * q);
  std::vector<double> acc(q);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = ad[i * p + k];
      const T* brow = &bd[k * q];
      for (std::size_t j = 0; j < q; ++j) acc[j] += aik * brow[j];
    }
    for (std::size_t j = 0; j < q; ++j) out[i * q + j] = static_cast<T>(acc[j]);
  }
  return g.emit("matmul", {m, q}, std::move(out), {&a, &b},
                [ai = a.impl(), bi = b.impl(), m, p, q](const TensorImpl<T>& c) {
                  const auto& dc = c.grad;
                  if (wants_grad(ai)) {
                    // da = dc . b^T
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t k = 0; k < p; ++k) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < q; ++j) s += double(dc[i * q + j]) * bi->data[k * q + j];
                        ai->grad[i * p + k] += static_cast<T>(s);
                      }
                    }
                  }
                  if (wants_grad(bi)) {
                    // db = a^T . dc
                    std::vector<double> acc(p * q, 0.0);
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t k = 0; k < p; ++k) {
                        const double aik = ai->data[i * p + k];
                        for (std::size_t j = 0; j < q; ++j) acc[k * q + j] += aik * dc[i * q + j];
                      }
                    }
                    for (std::size_t idx = 0; idx < p * q; ++idx) bi->grad[idx] += static_cast<T>(acc[idx]);
                  }
                });
}

template <typename T>
Tensor<T> transpose(Graph<T>& g, const Tensor<T>& a) {
  require_ndim(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  const auto ad = a.data();
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  return g.emit("transpose", {n, m}, std::move(out), {&a}, [ai = a.impl(), m, n](const TensorImpl<T>& c) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ai->grad[i * n + j] += c.grad[j * m + i];
  });
}

template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<T> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return g.emit("add", a.shape(), std::move(out), {&a, &b},
                [ai = a.impl(), bi = b.impl()](const TensorImpl<T>& c) {
                  if (wants_grad(ai))
                    for (std::size_t i = 0; i < c.grad.size(); ++i) ai->grad[i] += c.grad[i];
                  if (wants_grad(bi))
                    for (std::size_t i = 0; i < c.grad.size(); ++i) bi->grad[i] += c.grad[i];
                });
}

template <typename T>
Tensor<T> add_row(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& bias) {
  require_ndim(x, 2, "add_row");
  require_ndim(bias, 1, "add_row");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (bias.dim(0) != n) {
    throw DimensionError("add_row: bias " + shape_str(bias.shape()) + " does not fit rows of " +
                         shape_str(x.shape()));
  }
  const auto xd = x.data();
  const auto bd = bias.data();
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xd[i * n + j] + bd[j];
  return g.emit("add_row", x.shape(), std::move(out), {&x, &bias},
                [xi = x.impl(), bi = bias.impl(), m, n](const TensorImpl<T>& c) {
                  if (wants_grad(xi))
                    for (std::size_t i = 0; i < m * n; ++i) xi->grad[i] += c.grad[i];
                  if (wants_grad(bi)) {
                    for (std::size_t j = 0; j < n; ++j) {
                      double s = 0.0;
                      for (std::size_t i = 0; i < m; ++i) s += c.grad[i * n + j];
                      bi->grad[j] += static_cast<T>(s);
                    }
                  }
                });
}

template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<T> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return g.emit("mul", a.shape(), std::move(out), {&a, &b},
                [ai = a.impl(), bi = b.impl()](const TensorImpl<T>& c) {
                  if (wants_grad(ai))
                    for (std::size_t i = 0; i < c.grad.size(); ++i) ai->grad[i] += c.grad[i] * bi->data[i];
                  if (wants_grad(bi))
                    for (std::size_t i = 0; i < c.grad.size(); ++i) bi->grad[i] += c.grad[i] * ai->data[i];
                });
}

template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& x, T factor) {
  const auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * factor;
  return g.emit("scale", x.shape(), std::move(out), {&x}, [xi = x.impl(), factor](const TensorImpl<T>& c) {
    for (std::size_t i = 0; i < c.grad.size(); ++i) xi->grad[i] += c.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& x) {
  double s = 0.0;
  for (auto v : x.data()) s += v;
  return g.emit("sum", {}, {static_cast<T>(s)}, {&x}, [xi = x.impl()](const TensorImpl<T>& c) {
    for (auto& gi : xi->grad) gi += c.grad[0];
  });
}

namespace {

// Shared backward of softmax-like maps: dx = y * (dy - <dy, y>) per slice.
template <typename T>
void softmax_backward(const TensorImpl<T>& y, TensorImpl<T>& x, std::size_t width) {
  const std::size_t rows = y.data.size() / width;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* yr = &y.data[r * width];
    const T* dy = &y.grad[r * width];
    double dot = 0.0;
    for (std::size_t j = 0; j < width; ++j) dot += double(dy[j]) * yr[j];
    for (std::size_t j = 0; j < width; ++j) x.grad[r * width + j] += static_cast<T>(yr[j] * (dy[j] - dot));
  }
}

}  // namespace

template <typename T>
Tensor<T> softmax(Graph<T>& g, const Tensor<T>& x) {
  const std::size_t width = last_extent(x);
  const std::size_t rows = x.size() / width;
  const auto xd = x.data();
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = &xd[r * width];
    const T mx = *std::max_element(xr, xr + width);
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) z += std::exp(double(xr[j] - mx));
    for (std::size_t j = 0; j < width; ++j) out[r * width + j] = static_cast<T>(std::exp(double(xr[j] - mx)) / z);
  }
  return g.emit("softmax", x.shape(), std::move(out), {&x}, [xi = x.impl(), width](const TensorImpl<T>& y) {
    softmax_backward(y, *xi, width);
  });
}

template <typename T>
Tensor<T> masked_softmax(Graph<T>& g, const Tensor<T>& x, const Mask& column_mask) {
  require_ndim(x, 2, "masked_softmax");
  const std::size_t rows = x.dim(0), width = x.dim(1);
  if (column_mask.size() != width) {
    throw DimensionError("masked_softmax: mask of length " + std::to_string(column_mask.size()) +
                         " for " + shape_str(x.shape()));
  }
  if (std::none_of(column_mask.begin(), column_mask.end(), [](auto m) { return m != 0; })) {
    throw DegenerateInputError("masked_softmax: every column is masked");
  }
  const auto xd = x.data();
  std::vector<T> out(x.size(), T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = &xd[r * width];
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < width; ++j)
      if (column_mask[j]) mx = std::max(mx, xr[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j)
      if (column_mask[j]) z += std::exp(double(xr[j] - mx));
    for (std::size_t j = 0; j < width; ++j)
      if (column_mask[j]) out[r * width + j] = static_cast<T>(std::exp(double(xr[j] - mx)) / z);
  }
  return g.emit("masked_softmax", x.shape(), std::move(out), {&x},
                [xi = x.impl(), width](const TensorImpl<T>& y) { softmax_backward(y, *xi, width); });
}

template <typename T>
Tensor<T> layer_norm(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps) {
  require_ndim(gamma, 1, "layer_norm");
  require_ndim(beta, 1, "layer_norm");
  const std::size_t width = last_extent(x);
  if (gamma.dim(0) != width || beta.dim(0) != width) {
    throw DimensionError("layer_norm: affine params " + shape_str(gamma.shape()) + "/" +
                         shape_str(beta.shape()) + " do not match " + shape_str(x.shape()));
  }
  const std::size_t rows = x.size() / width;
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  std::vector<double> xhat(x.size());
  std::vector<double> rstd(rows);
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = &xd[r * width];
    double mean = 0.0;
    for (std::size_t j = 0; j < width; ++j) mean += xr[j];
    mean /= double(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= double(width);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < width; ++j) {
      const double h = (xr[j] - mean) * rstd[r];
      xhat[r * width + j] = h;
      out[r * width + j] = static_cast<T>(gd[j] * h + bd[j]);
    }
  }
  return g.emit(
      "layer_norm", x.shape(), std::move(out), {&x, &gamma, &beta},
      [xi = x.impl(), gi = gamma.impl(), bi = beta.impl(), xhat = std::move(xhat), rstd = std::move(rstd),
       width, rows](const TensorImpl<T>& y) {
        const auto& dy = y.grad;
        if (wants_grad(gi) || wants_grad(bi)) {
          for (std::size_t j = 0; j < width; ++j) {
            double dg = 0.0, db = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
              dg += dy[r * width + j] * xhat[r * width + j];
              db += dy[r * width + j];
            }
            if (wants_grad(gi)) gi->grad[j] += static_cast<T>(dg);
            if (wants_grad(bi)) bi->grad[j] += static_cast<T>(db);
          }
        }
        if (wants_grad(xi)) {
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_d = 0.0, mean_dh = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
              const double d = double(dy[r * width + j]) * gi->data[j];
              mean_d += d;
              mean_dh += d * xhat[r * width + j];
            }
            mean_d /= double(width);
            mean_dh /= double(width);
            for (std::size_t j = 0; j < width; ++j) {
              const double d = double(dy[r * width + j]) * gi->data[j];
              xi->grad[r * width + j] += static_cast<T>(rstd[r] * (d - mean_d - xhat[r * width + j] * mean_dh));
            }
          }
        }
      });
}

template <typename T>
Tensor<T> dropout(Graph<T>& g, const Tensor<T>& x, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout: probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!g.training() || p == 0.0) return x;
  auto& rng = g.rng();
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  const auto xd = x.data();
  std::vector<T> factor(x.size());
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    factor[i] = rng.uniform() < p ? T(0) : keep_scale;
    out[i] = xd[i] * factor[i];
  }
  return g.emit("dropout", x.shape(), std::move(out), {&x},
                [xi = x.impl(), factor = std::move(factor)](const TensorImpl<T>& y) {
                  for (std::size_t i = 0; i < y.grad.size(); ++i) xi->grad[i] += y.grad[i] * factor[i];
                });
}

template <typename T>
Tensor<T> mean_pool(Graph<T>& g, const Tensor<T>& x) {
  require_ndim(x, 2, "mean_pool");
  return mean_pool(g, x, Mask(x.dim(0), 1));
}

template <typename T>
Tensor<T> mean_pool(Graph<T>& g, const Tensor<T>& x, const Mask& row_mask) {
  require_ndim(x, 2, "mean_pool");
  const std::size_t t = x.dim(0), c = x.dim(1);
  if (row_mask.size() != t) {
    throw DimensionError("mean_pool: mask of length " + std::to_string(row_mask.size()) + " for " +
                         shape_str(x.shape()));
  }
  const auto count = static_cast<std::size_t>(std::count_if(row_mask.begin(), row_mask.end(),
                                                            [](auto m) { return m != 0; }));
  if (count == 0) throw DegenerateInputError("mean_pool: every row is masked");
  const auto xd = x.data();
  std::vector<double> acc(c, 0.0);
  for (std::size_t r = 0; r < t; ++r) {
    if (!row_mask[r]) continue;
    for (std::size_t j = 0; j < c; ++j) acc[j] += xd[r * c + j];
  }
  std::vector<T> out(c);
  for (std::size_t j = 0; j < c; ++j) out[j] = static_cast<T>(acc[j] / double(count));
  return g.emit("mean_pool", {c}, std::move(out), {&x},
                [xi = x.impl(), row_mask, t, c, count](const TensorImpl<T>& y) {
                  const double inv = 1.0 / double(count);
                  for (std::size_t r = 0; r < t; ++r) {
                    if (!row_mask[r]) continue;
                    for (std::size_t j = 0; j < c; ++j) xi->grad[r * c + j] += static_cast<T>(y.grad[j] * inv);
                  }
                });
}

template <typename T>
Tensor<T> concat(Graph<T>& g, std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw ParameterError("concat: empty input list");
  std::vector<T> out;
  std::vector<std::size_t> offsets;
  for (const auto& x : xs) {
    require_ndim(x, 1, "concat");
    offsets.push_back(out.size());
    out.insert(out.end(), x.data().begin(), x.data().end());
  }
  std::vector<std::shared_ptr<TensorImpl<T>>> impls;
  for (const auto& x : xs) impls.push_back(x.impl());
  const std::size_t total = out.size();
  return g.emit("concat", {total}, std::move(out), xs,
                [impls = std::move(impls), offsets = std::move(offsets)](const TensorImpl<T>& y) {
                  for (std::size_t k = 0; k < impls.size(); ++k) {
                    if (!wants_grad(impls[k])) continue;
                    auto& gx = impls[k]->grad;
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += y.grad[offsets[k] + i];
                  }
                });
}

template <typename T>
Tensor<T> concat_cols(Graph<T>& g, std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw ParameterError("concat_cols: empty input list");
  const std::size_t rows = xs.front().ndim() == 2 ? xs.front().dim(0) : 0;
  std::vector<std::size_t> widths, offsets;
  std::size_t total = 0;
  for (const auto& x : xs) {
    require_ndim(x, 2, "concat_cols");
    if (x.dim(0) != rows) {
      throw DimensionError("concat_cols: row counts differ, " + shape_str(xs.front().shape()) + " vs " +
                           shape_str(x.shape()));
    }
    offsets.push_back(total);
    widths.push_back(x.dim(1));
    total += x.dim(1);
  }
  std::vector<T> out(rows * total);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto xd = xs[k].data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(&xd[r * widths[k]], widths[k], &out[r * total + offsets[k]]);
  }
  std::vector<std::shared_ptr<TensorImpl<T>>> impls;
  for (const auto& x : xs) impls.push_back(x.impl());
  return g.emit("concat_cols", {rows, total}, std::move(out), xs,
                [impls = std::move(impls), widths = std::move(widths), offsets = std::move(offsets), rows,
                 total](const TensorImpl<T>& y) {
                  for (std::size_t k = 0; k < impls.size(); ++k) {
                    if (!wants_grad(impls[k])) continue;
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t j = 0; j < widths[k]; ++j)
                        impls[k]->grad[r * widths[k] + j] += y.grad[r * total + offsets[k] + j];
                  }
                });
}

template <typename T>
Tensor<T> slice_cols(Graph<T>& g, const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_ndim(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0), width = x.dim(1);
  if (begin >= end || end > width) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for " + shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  const auto xd = x.data();
  std::vector<T> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(&xd[r * width + begin], w, &out[r * w]);
  return g.emit("slice_cols", {rows, w}, std::move(out), {&x},
                [xi = x.impl(), rows, width, begin, w](const TensorImpl<T>& y) {
                  for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < w; ++j) xi->grad[r * width + begin + j] += y.grad[r * w + j];
                });
}

template <typename T>
Tensor<T> stack_rows(Graph<T>& g, std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw ParameterError("stack_rows: empty input list");
  require_ndim(xs.front(), 1, "stack_rows");
  const std::size_t width = xs.front().dim(0);
  std::vector<T> out;
  out.reserve(xs.size() * width);
  for (const auto& x : xs) {
    require_ndim(x, 1, "stack_rows");
    if (x.dim(0) != width) {
      throw DimensionError("stack_rows: lengths differ, " + shape_str(xs.front().shape()) + " vs " +
                           shape_str(x.shape()));
    }
    out.insert(out.end(), x.data().begin(), x.data().end());
  }
  std::vector<std::shared_ptr<TensorImpl<T>>> impls;
  for (const auto& x : xs) impls.push_back(x.impl());
  return g.emit("stack_rows", {xs.size(), width}, std::move(out), xs,
                [impls = std::move(impls), width](const TensorImpl<T>& y) {
                  for (std::size_t k = 0; k < impls.size(); ++k) {
                    if (!wants_grad(impls[k])) continue;
                    for (std::size_t j = 0; j < width; ++j) impls[k]->grad[j] += y.grad[k * width + j];
                  }
                });
}

template <typename T>
Tensor<T> reshape(Graph<T>& g, const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return g.emit("reshape", std::move(shape), std::move(out), {&x}, [xi = x.impl()](const TensorImpl<T>& y) {
    for (std::size_t i = 0; i < y.grad.size(); ++i) xi->grad[i] += y.grad[i];
  });
}

#define EMOFUSE_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> transpose(Graph<T>&, const Tensor<T>&);                                    \
  template Tensor<T> add(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> add_row(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> mul(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> scale(Graph<T>&, const Tensor<T>&, T);                                     \
  template Tensor<T> sum(Graph<T>&, const Tensor<T>&);                                          \
  template Tensor<T> softmax(Graph<T>&, const Tensor<T>&);                                      \
  template Tensor<T> masked_softmax(Graph<T>&, const Tensor<T>&, const Mask&);                  \
  template Tensor<T> layer_norm(Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                double);                                                        \
  template Tensor<T> dropout(Graph<T>&, const Tensor<T>&, double);                              \
  template Tensor<T> mean_pool(Graph<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mean_pool(Graph<T>&, const Tensor<T>&, const Mask&);                       \
  template Tensor<T> concat(Graph<T>&, std::span<const Tensor<T>>);                             \
  template Tensor<T> concat_cols(Graph<T>&, std::span<const Tensor<T>>);                        \
  template Tensor<T> slice_cols(Graph<T>&, const Tensor<T>&, std::size_t, std::size_t);         \
  template Tensor<T> stack_rows(Graph<T>&, std::span<const Tensor<T>>);                         \
  template Tensor<T> reshape(Graph<T>&, const Tensor<T>&, Shape);

EMOFUSE_INSTANTIATE_OPS(float)
EMOFUSE_INSTANTIATE_OPS(double)

#undef EMOFUSE_INSTANTIATE_OPS

}  // namespace emofuse::ag
