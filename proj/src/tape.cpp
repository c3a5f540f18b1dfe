//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "cpiformer/errors.hpp"

namespace cpiformer {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EMat> cmap(const Tensor &t) {
  return {t.data.data(), t.rows, t.cols};
}

Eigen::Map<EMat> mmap(Tensor &t) { return {t.data.data(), t.rows, t.cols}; }

void check_finite(const Tensor &t, const char *op) {
  for (double v : t.data)
    if (!std::isfinite(v))
      throw NumericError(std::string(op) + " produced a non-finite value");
}

void require_same_shape(const Tensor &a, const Tensor &b, const char *op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) +
                     " and " + shape_string(b));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int Tape::check(Value v) const {
  if (v.index < 0 || v.index >= static_cast<int>(nodes_.size()))
    throw NumericError("stale or invalid tape handle");
  return v.index;
}

Value Tape::push(Tensor data, bool requires_grad) {
  Node n;
  n.grad = Tensor(data.rows, data.cols);
  n.data = std::move(data);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::leaf(Parameter &p) {
  Value v = push(p.value, true);
  nodes_.back().param = &p;
  return v;
}

Value Tape::constant(Tensor t) {
  check_finite(t, "constant");
  t.requires_grad = false;
  return push(std::move(t), false);
}

Value Tape::matmul(Value a, Value b) {
  const Tensor &A = data_at(check(a));
  const Tensor &B = data_at(check(b));
  if (A.cols != B.rows)
    throw ShapeError("matmul: incompatible shapes " + shape_string(A) + " and " +
                     shape_string(B));
  Tensor out(A.rows, B.cols);
  mmap(out) = cmap(A) * cmap(B);
  check_finite(out, "matmul");
  const bool ga = needs_grad(a), gb = needs_grad(b);
  Value v = push(std::move(out), ga || gb);
  if (ga || gb) {
    const int ai = a.index, bi = b.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      if (ga) mmap(t.grad_at(ai)) += cmap(g) * cmap(t.data_at(bi)).transpose();
      if (gb) mmap(t.grad_at(bi)) += cmap(t.data_at(ai)).transpose() * cmap(g);
    };
  }
  return v;
}

Value Tape::transpose(Value a) {
  const Tensor &A = data_at(check(a));
  Tensor out(A.cols, A.rows);
  mmap(out) = cmap(A).transpose();
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      mmap(t.grad_at(ai)) += cmap(t.grad_at(self)).transpose();
    };
  }
  return v;
}

Value Tape::add(Value a, Value b) {
  const Tensor &A = data_at(check(a));
  const Tensor &B = data_at(check(b));
  require_same_shape(A, B, "add");
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = A.data[k] + B.data[k];
  check_finite(out, "add");
  const bool ga = needs_grad(a), gb = needs_grad(b);
  Value v = push(std::move(out), ga || gb);
  if (ga || gb) {
    const int ai = a.index, bi = b.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      if (ga)
        for (std::size_t k = 0; k < g.data.size(); ++k) t.grad_at(ai).data[k] += g.data[k];
      if (gb)
        for (std::size_t k = 0; k < g.data.size(); ++k) t.grad_at(bi).data[k] += g.data[k];
    };
  }
  return v;
}

Value Tape::sub(Value a, Value b) {
  const Tensor &A = data_at(check(a));
  const Tensor &B = data_at(check(b));
  require_same_shape(A, B, "sub");
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = A.data[k] - B.data[k];
  check_finite(out, "sub");
  const bool ga = needs_grad(a), gb = needs_grad(b);
  Value v = push(std::move(out), ga || gb);
  if (ga || gb) {
    const int ai = a.index, bi = b.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      if (ga)
        for (std::size_t k = 0; k < g.data.size(); ++k) t.grad_at(ai).data[k] += g.data[k];
      if (gb)
        for (std::size_t k = 0; k < g.data.size(); ++k) t.grad_at(bi).data[k] -= g.data[k];
    };
  }
  return v;
}

Value Tape::mul(Value a, Value b) {
  const Tensor &A = data_at(check(a));
  const Tensor &B = data_at(check(b));
  require_same_shape(A, B, "mul");
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = A.data[k] * B.data[k];
  check_finite(out, "mul");
  const bool ga = needs_grad(a), gb = needs_grad(b);
  Value v = push(std::move(out), ga || gb);
  if (ga || gb) {
    const int ai = a.index, bi = b.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      if (ga)
        for (std::size_t k = 0; k < g.data.size(); ++k)
          t.grad_at(ai).data[k] += g.data[k] * t.data_at(bi).data[k];
      if (gb)
        for (std::size_t k = 0; k < g.data.size(); ++k)
          t.grad_at(bi).data[k] += g.data[k] * t.data_at(ai).data[k];
    };
  }
  return v;
}

Value Tape::div(Value a, Value b) {
  const Tensor &A = data_at(check(a));
  const Tensor &B = data_at(check(b));
  require_same_shape(A, B, "div");
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = A.data[k] / B.data[k];
  check_finite(out, "div");
  const bool ga = needs_grad(a), gb = needs_grad(b);
  Value v = push(std::move(out), ga || gb);
  if (ga || gb) {
    const int ai = a.index, bi = b.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      const Tensor &bd = t.data_at(bi);
      if (ga)
        for (std::size_t k = 0; k < g.data.size(); ++k)
          t.grad_at(ai).data[k] += g.data[k] / bd.data[k];
      if (gb)
        for (std::size_t k = 0; k < g.data.size(); ++k)
          t.grad_at(bi).data[k] -=
              g.data[k] * t.data_at(ai).data[k] / (bd.data[k] * bd.data[k]);
    };
  }
  return v;
}

Value Tape::scale(Value a, double c) {
  const Tensor &A = data_at(check(a));
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = c * A.data[k];
  check_finite(out, "scale");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      for (std::size_t k = 0; k < g.data.size(); ++k)
        t.grad_at(ai).data[k] += c * g.data[k];
    };
  }
  return v;
}

Value Tape::exp(Value a) {
  const Tensor &A = data_at(check(a));
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = std::exp(A.data[k]);
  check_finite(out, "exp");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      const Tensor &y = t.data_at(self);
      for (std::size_t k = 0; k < g.data.size(); ++k)
        t.grad_at(ai).data[k] += g.data[k] * y.data[k];
    };
  }
  return v;
}

Value Tape::relu(Value a) {
  const Tensor &A = data_at(check(a));
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k)
    out.data[k] = A.data[k] > 0.0 ? A.data[k] : 0.0;
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      const Tensor &x = t.data_at(ai);
      for (std::size_t k = 0; k < g.data.size(); ++k)
        if (x.data[k] > 0.0) t.grad_at(ai).data[k] += g.data[k];
    };
  }
  return v;
}

Value Tape::softplus(Value a) {
  const Tensor &A = data_at(check(a));
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    const double x = A.data[k];
    out.data[k] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  check_finite(out, "softplus");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      const Tensor &x = t.data_at(ai);
      for (std::size_t k = 0; k < g.data.size(); ++k)
        t.grad_at(ai).data[k] += g.data[k] * stable_sigmoid(x.data[k]);
    };
  }
  return v;
}

Value Tape::square(Value a) {
  const Tensor &A = data_at(check(a));
  Tensor out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] = A.data[k] * A.data[k];
  check_finite(out, "square");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      const Tensor &x = t.data_at(ai);
      for (std::size_t k = 0; k < g.data.size(); ++k)
        t.grad_at(ai).data[k] += 2.0 * x.data[k] * g.data[k];
    };
  }
  return v;
}

Value Tape::softmax_rows(Value a) {
  const Tensor &A = data_at(check(a));
  if (A.cols < 1) throw ShapeError("softmax_rows: empty rows in " + shape_string(A));
  Tensor out(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r) {
    double mx = A.at(r, 0);
    for (int c = 1; c < A.cols; ++c) mx = std::max(mx, A.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < A.cols; ++c) {
      out.at(r, c) = std::exp(A.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (int c = 0; c < A.cols; ++c) out.at(r, c) /= sum;
  }
  check_finite(out, "softmax_rows");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      const Tensor &y = t.data_at(self);
      for (int r = 0; r < g.rows; ++r) {
        double dot = 0.0;
        for (int c = 0; c < g.cols; ++c) dot += g.at(r, c) * y.at(r, c);
        for (int c = 0; c < g.cols; ++c)
          t.grad_at(ai).at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
    };
  }
  return v;
}

Value Tape::layer_norm_rows(Value a) {
  constexpr double kEps = 1e-5;
  const Tensor &A = data_at(check(a));
  if (A.cols < 1) throw ShapeError("layer_norm_rows: empty rows in " + shape_string(A));
  Tensor out(A.rows, A.cols);
  const double n = static_cast<double>(A.cols);
  for (int r = 0; r < A.rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < A.cols; ++c) mean += A.at(r, c);
    mean /= n;
    double var = 0.0;
    for (int c = 0; c < A.cols; ++c) {
      const double d = A.at(r, c) - mean;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kEps);
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = (A.at(r, c) - mean) * inv;
  }
  check_finite(out, "layer_norm_rows");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      const Tensor &y = t.data_at(self);
      const Tensor &x = t.data_at(ai);
      const double nn = static_cast<double>(g.cols);
      for (int r = 0; r < g.rows; ++r) {
        double mean = 0.0;
        for (int c = 0; c < g.cols; ++c) mean += x.at(r, c);
        mean /= nn;
        double var = 0.0;
        for (int c = 0; c < g.cols; ++c) {
          const double d = x.at(r, c) - mean;
          var += d * d;
        }
        var /= nn;
        const double inv = 1.0 / std::sqrt(var + kEps);
        double g_mean = 0.0, gy_mean = 0.0;
        for (int c = 0; c < g.cols; ++c) {
          g_mean += g.at(r, c);
          gy_mean += g.at(r, c) * y.at(r, c);
        }
        g_mean /= nn;
        gy_mean /= nn;
        for (int c = 0; c < g.cols; ++c)
          t.grad_at(ai).at(r, c) += inv * (g.at(r, c) - g_mean - y.at(r, c) * gy_mean);
      }
    };
  }
  return v;
}

Value Tape::sum_all(Value a) {
  const Tensor &A = data_at(check(a));
  double s = 0.0;
  for (double x : A.data) s += x;
  Tensor out = Tensor::scalar(s);
  check_finite(out, "sum_all");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const double g = t.grad_at(self).data[0];
      for (double &d : t.grad_at(ai).data) d += g;
    };
  }
  return v;
}

Value Tape::mean_all(Value a) {
  const Tensor &A = data_at(check(a));
  if (A.size() == 0) throw ShapeError("mean_all: empty tensor");
  double s = 0.0;
  for (double x : A.data) s += x;
  const double n = static_cast<double>(A.size());
  Tensor out = Tensor::scalar(s / n);
  check_finite(out, "mean_all");
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const double g = t.grad_at(self).data[0] / n;
      for (double &d : t.grad_at(ai).data) d += g;
    };
  }
  return v;
}

Value Tape::concat_rows(Value a, Value b) {
  const Tensor &A = data_at(check(a));
  const Tensor &B = data_at(check(b));
  if (A.cols != B.cols)
    throw ShapeError("concat_rows: incompatible shapes " + shape_string(A) + " and " +
                     shape_string(B));
  Tensor out(A.rows + B.rows, A.cols);
  std::copy(A.data.begin(), A.data.end(), out.data.begin());
  std::copy(B.data.begin(), B.data.end(), out.data.begin() + A.data.size());
  const bool ga = needs_grad(a), gb = needs_grad(b);
  const std::size_t split = A.data.size();
  Value v = push(std::move(out), ga || gb);
  if (ga || gb) {
    const int ai = a.index, bi = b.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      if (ga)
        for (std::size_t k = 0; k < split; ++k) t.grad_at(ai).data[k] += g.data[k];
      if (gb)
        for (std::size_t k = split; k < g.data.size(); ++k)
          t.grad_at(bi).data[k - split] += g.data[k];
    };
  }
  return v;
}

Value Tape::concat_cols(Value a, Value b) {
  const Tensor &A = data_at(check(a));
  const Tensor &B = data_at(check(b));
  if (A.rows != B.rows)
    throw ShapeError("concat_cols: incompatible shapes " + shape_string(A) + " and " +
                     shape_string(B));
  Tensor out(A.rows, A.cols + B.cols);
  for (int r = 0; r < A.rows; ++r) {
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c);
    for (int c = 0; c < B.cols; ++c) out.at(r, A.cols + c) = B.at(r, c);
  }
  const bool ga = needs_grad(a), gb = needs_grad(b);
  const int a_cols = A.cols, b_cols = B.cols;
  Value v = push(std::move(out), ga || gb);
  if (ga || gb) {
    const int ai = a.index, bi = b.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      for (int r = 0; r < g.rows; ++r) {
        if (ga)
          for (int c = 0; c < a_cols; ++c) t.grad_at(ai).at(r, c) += g.at(r, c);
        if (gb)
          for (int c = 0; c < b_cols; ++c) t.grad_at(bi).at(r, c) += g.at(r, a_cols + c);
      }
    };
  }
  return v;
}

Value Tape::slice_rows(Value a, int begin, int count) {
  const Tensor &A = data_at(check(a));
  if (begin < 0 || count < 0 || begin + count > A.rows)
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " + shape_string(A));
  Tensor out(count, A.cols);
  for (int r = 0; r < count; ++r)
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(begin + r, c);
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) t.grad_at(ai).at(begin + r, c) += g.at(r, c);
    };
  }
  return v;
}

Value Tape::slice_cols(Value a, int begin, int count) {
  const Tensor &A = data_at(check(a));
  if (begin < 0 || count < 0 || begin + count > A.cols)
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " + shape_string(A));
  Tensor out(A.rows, count);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < count; ++c) out.at(r, c) = A.at(r, begin + c);
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) t.grad_at(ai).at(r, begin + c) += g.at(r, c);
    };
  }
  return v;
}

Value Tape::gather_rows(Value a, std::vector<int> indices) {
  const Tensor &A = data_at(check(a));
  for (int i : indices)
    if (i < 0 || i >= A.rows)
      throw ShapeError("gather_rows: row " + std::to_string(i) + " outside " +
                       shape_string(A));
  Tensor out(static_cast<int>(indices.size()), A.cols);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < A.cols; ++c)
      out.at(r, c) = A.at(indices[static_cast<std::size_t>(r)], c);
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=, idx = std::move(indices)](Tape &t) {
      const Tensor &g = t.grad_at(self);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c)
          t.grad_at(ai).at(idx[static_cast<std::size_t>(r)], c) += g.at(r, c);
    };
  }
  return v;
}

Value Tape::add_rows(Value a, Value row) {
  const Tensor &A = data_at(check(a));
  const Tensor &R = data_at(check(row));
  if (R.rows != 1 || R.cols != A.cols)
    throw ShapeError("add_rows: incompatible shapes " + shape_string(A) + " and " +
                     shape_string(R));
  Tensor out(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c) + R.at(0, c);
  check_finite(out, "add_rows");
  const bool ga = needs_grad(a), gr = needs_grad(row);
  Value v = push(std::move(out), ga || gr);
  if (ga || gr) {
    const int ai = a.index, ri = row.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
          if (ga) t.grad_at(ai).at(r, c) += g.at(r, c);
          if (gr) t.grad_at(ri).at(0, c) += g.at(r, c);
        }
    };
  }
  return v;
}

Value Tape::mul_rows(Value a, Value row) {
  const Tensor &A = data_at(check(a));
  const Tensor &R = data_at(check(row));
  if (R.rows != 1 || R.cols != A.cols)
    throw ShapeError("mul_rows: incompatible shapes " + shape_string(A) + " and " +
                     shape_string(R));
  Tensor out(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c) * R.at(0, c);
  check_finite(out, "mul_rows");
  const bool ga = needs_grad(a), gr = needs_grad(row);
  Value v = push(std::move(out), ga || gr);
  if (ga || gr) {
    const int ai = a.index, ri = row.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
          if (ga) t.grad_at(ai).at(r, c) += g.at(r, c) * t.data_at(ri).at(0, c);
          if (gr) t.grad_at(ri).at(0, c) += g.at(r, c) * t.data_at(ai).at(r, c);
        }
    };
  }
  return v;
}

Value Tape::reshape(Value a, int rows, int cols) {
  const Tensor &A = data_at(check(a));
  if (rows <= 0 || cols <= 0 ||
      static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != A.data.size())
    throw ShapeError("reshape: cannot view " + shape_string(A) + " as " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  Tensor out(rows, cols);
  out.data = A.data;
  const bool ga = needs_grad(a);
  Value v = push(std::move(out), ga);
  if (ga) {
    const int ai = a.index, self = v.index;
    nodes_.back().back = [=](Tape &t) {
      const Tensor &g = t.grad_at(self);
      Tensor &ag = t.grad_at(ai);
      for (std::size_t k = 0; k < g.data.size(); ++k) ag.data[k] += g.data[k];
    };
  }
  return v;
}

void Tape::backward(Value loss) {
  const int li = check(loss);
  const Tensor &l = data_at(li);
  if (l.rows != 1 || l.cols != 1)
    throw NumericError("backward requires a 1x1 loss, got " + shape_string(l));
  nodes_[static_cast<std::size_t>(li)].grad.data[0] = 1.0;
  for (int i = li; i >= 0; --i) {
    Node &n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad) continue;
    if (n.back) n.back(*this);
    if (n.param != nullptr)
      for (std::size_t k = 0; k < n.grad.data.size(); ++k)
        n.param->grad.data[k] += n.grad.data[k];
  }
  clear();
}

void Tape::clear() { nodes_.clear(); }

}  // namespace cpiformer
