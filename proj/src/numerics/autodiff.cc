/*
 * Copyright 2026 The UxSID Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uxsid/numerics/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uxsid/numerics/kernels.h"

namespace uxsid::numerics {

template <typename T>
void GradientBuffer<T>::clear() {
  for (auto& m : dense_) m = BasicMatrix<T>();
  for (auto& s : sparse_) s.clear();
}

template <typename T>
BasicMatrix<T>& GradientBuffer<T>::dense(size_t param, size_t rows, size_t cols) {
  BasicMatrix<T>& m = dense_.at(param);
  if (m.empty()) m = BasicMatrix<T>(rows, cols);
  return m;
}

template <typename T>
std::span<T> GradientBuffer<T>::sparse_row(size_t param, int32_t row, size_t cols) {
  auto& rows = sparse_.at(param);
  auto it = rows.find(row);
  if (it == rows.end()) it = rows.emplace(row, std::vector<T>(cols, T{0})).first;
  return it->second;
}

template <typename T>
void GradientBuffer<T>::add_to(std::span<BasicParam<T>> params) const {
  for (size_t p = 0; p < dense_.size() && p < params.size(); ++p) {
    auto& g = params[p].grad;
    if (!dense_[p].empty()) {
      if (!dense_[p].same_shape(g)) throw DimensionError("gradient shape mismatch for " + params[p].name);
      for (size_t i = 0; i < g.size(); ++i) g.values()[i] += dense_[p].values()[i];
    }
    for (const auto& [row, values] : sparse_[p]) {
      auto dst = g.row(static_cast<size_t>(row));
      for (size_t j = 0; j < values.size(); ++j) dst[j] += values[j];
    }
  }
}

template <typename T>
bool GradientBuffer<T>::all_finite() const {
  for (const auto& m : dense_)
    if (!numerics::all_finite(m)) return false;
  for (const auto& s : sparse_)
    for (const auto& [row, values] : s)
      for (T v : values)
        if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
Var Tape<T>::constant(Mat value) {
  return push(std::move(value), nullptr);
}

template <typename T>
Var Tape<T>::param(const BasicParam<T>& param, size_t index) {
  Node n;
  n.alias = &param.value;
  n.param_index = static_cast<int64_t>(index);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

template <typename T>
typename Tape<T>::Mat& Tape<T>::grad(Var v) {
  Node& n = nodes_[static_cast<size_t>(v.id)];
  if (n.grad.empty()) {
    const Mat& val = n.alias ? *n.alias : n.value;
    n.grad = Mat(val.rows(), val.cols());
  }
  return n.grad;
}

template <typename T>
Var Tape<T>::push(Mat value, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

template <typename T>
void Tape<T>::backward(Var root) {
  if (!record_) throw StateError("backward on a tape that is not recording");
  if (sink_ == nullptr) throw StateError("backward requires a gradient sink");
  const Mat& rv = value(root);
  if (rv.rows() != 1 || rv.cols() != 1) throw DimensionError("backward root must be 1x1");
  grad(root)(0, 0) += T{1};
  for (int64_t i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this);
  }
  for (auto& n : nodes_) {
    if (n.param_index < 0 || n.grad.empty()) continue;
    Mat& dst = sink_->dense(static_cast<size_t>(n.param_index), n.grad.rows(), n.grad.cols());
    for (size_t k = 0; k < dst.size(); ++k) dst.values()[k] += n.grad.values()[k];
  }
}

namespace ad {
namespace {

std::string dims(const char* op, size_t r1, size_t c1, size_t r2, size_t c2) {
  return std::string(op) + ": " + std::to_string(r1) + "x" + std::to_string(c1) +
         " vs " + std::to_string(r2) + "x" + std::to_string(c2);
}

template <typename T>
void require_same(const char* op, const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (!a.same_shape(b)) throw DimensionError(dims(op, a.rows(), a.cols(), b.rows(), b.cols()));
}

template <typename T>
void add_into(BasicMatrix<T>& dst, const BasicMatrix<T>& src) {
  for (size_t i = 0; i < dst.size(); ++i) dst.values()[i] += src.values()[i];
}

}  // namespace

template <typename T>
Var matmul(Tape<T>& t, Var a, Var b) {
  auto out = numerics::matmul(t.value(a), t.value(b));
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, b, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    gemm_bt(g, t.value(b), t.grad(a), true);
    gemm_at(t.value(a), g, t.grad(b), true);
  });
}

template <typename T>
Var matmul_bt(Tape<T>& t, Var a, Var b) {
  auto out = numerics::matmul_bt(t.value(a), t.value(b));
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, b, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    gemm(g, t.value(b), t.grad(a), true);
    gemm_at(g, t.value(a), t.grad(b), true);
  });
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  require_same("add", t.value(a), t.value(b));
  auto out = t.value(a);
  add_into(out, t.value(b));
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, b, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    add_into(t.grad(a), g);
    add_into(t.grad(b), g);
  });
}

template <typename T>
Var sub(Tape<T>& t, Var a, Var b) {
  require_same("sub", t.value(a), t.value(b));
  auto out = t.value(a);
  const auto& bv = t.value(b);
  for (size_t i = 0; i < out.size(); ++i) out.values()[i] -= bv.values()[i];
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, b, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    add_into(t.grad(a), g);
    auto& gb = t.grad(b);
    for (size_t i = 0; i < gb.size(); ++i) gb.values()[i] -= g.values()[i];
  });
}

template <typename T>
Var add_row(Tape<T>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw DimensionError(dims("add_row", av.rows(), av.cols(), bv.rows(), bv.cols()));
  auto out = av;
  for (size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (size_t j = 0; j < r.size(); ++j) r[j] += bv(0, j);
  }
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, b, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    add_into(t.grad(a), g);
    auto& gb = t.grad(b);
    for (size_t i = 0; i < g.rows(); ++i)
      for (size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
  });
}

template <typename T>
Var hadamard(Tape<T>& t, Var a, Var b) {
  require_same("hadamard", t.value(a), t.value(b));
  auto out = t.value(a);
  const auto& bv = t.value(b);
  for (size_t i = 0; i < out.size(); ++i) out.values()[i] *= bv.values()[i];
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, b, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) ga.values()[i] += g.values()[i] * bv.values()[i];
    auto& gb = t.grad(b);
    for (size_t i = 0; i < g.size(); ++i) gb.values()[i] += g.values()[i] * av.values()[i];
  });
}

template <typename T>
Var scale(Tape<T>& t, Var a, T s) {
  auto out = t.value(a);
  for (T& v : out.values()) v *= s;
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o, s](Tape<T>& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) ga.values()[i] += s * g.values()[i];
  });
}

template <typename T>
Var sigmoid(Tape<T>& t, Var a) {
  auto out = numerics::sigmoid(t.value(a));
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& y = t.value(o);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) {
      const T yi = y.values()[i];
      ga.values()[i] += g.values()[i] * yi * (T{1} - yi);
    }
  });
}

template <typename T>
Var relu(Tape<T>& t, Var a) {
  auto out = t.value(a);
  for (T& v : out.values()) v = v > T{0} ? v : T{0};
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& x = t.value(a);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i)
      if (x.values()[i] > T{0}) ga.values()[i] += g.values()[i];
  });
}

template <typename T>
Var softmax_rows(Tape<T>& t, Var a) {
  auto out = numerics::softmax_rows(t.value(a));
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& y = t.value(o);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < y.rows(); ++i) {
      auto yr = y.row(i);
      auto gr = g.row(i);
      T s{0};
      for (size_t j = 0; j < yr.size(); ++j) s += gr[j] * yr[j];
      auto dr = ga.row(i);
      for (size_t j = 0; j < yr.size(); ++j) dr[j] += yr[j] * (gr[j] - s);
    }
  });
}

template <typename T>
Var layer_norm_rows(Tape<T>& t, Var x, Var gain, Var bias, T eps) {
  const auto& xv = t.value(x);
  const auto& gv = t.value(gain);
  const auto& bv = t.value(bias);
  const bool shared = gv.rows() == 1;
  if (gv.cols() != xv.cols() || !gv.same_shape(bv) || (!shared && gv.rows() != xv.rows()))
    throw DimensionError(dims("layer_norm_rows", xv.rows(), xv.cols(), gv.rows(), gv.cols()));
  BasicMatrix<T> out(xv.rows(), xv.cols());
  for (size_t i = 0; i < xv.rows(); ++i) {
    const size_t gi = shared ? 0 : i;
    auto y = layer_norm<T>(xv.row(i), gv.row(gi), bv.row(gi), eps);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [x, gain, bias, o, eps, shared](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& xv = t.value(x);
    const auto& gv = t.value(gain);
    auto& gx = t.grad(x);
    auto& gg = t.grad(gain);
    auto& gb = t.grad(bias);
    const size_t d = xv.cols();
    std::vector<T> xhat(d), dxhat(d);
    for (size_t i = 0; i < xv.rows(); ++i) {
      const size_t gi = shared ? 0 : i;
      auto xr = xv.row(i);
      T mean{0};
      for (T v : xr) mean += v;
      mean /= static_cast<T>(d);
      T var{0};
      for (T v : xr) var += (v - mean) * (v - mean);
      var /= static_cast<T>(d);
      const T inv_std = T{1} / std::sqrt(var + eps);
      T m1{0}, m2{0};
      for (size_t j = 0; j < d; ++j) {
        xhat[j] = (xr[j] - mean) * inv_std;
        dxhat[j] = g(i, j) * gv(gi, j);
        m1 += dxhat[j];
        m2 += dxhat[j] * xhat[j];
        gg(gi, j) += g(i, j) * xhat[j];
        gb(gi, j) += g(i, j);
      }
      m1 /= static_cast<T>(d);
      m2 /= static_cast<T>(d);
      for (size_t j = 0; j < d; ++j) gx(i, j) += inv_std * (dxhat[j] - m1 - xhat[j] * m2);
    }
  });
}

template <typename T>
Var blockwise_matmul(Tape<T>& t, Var x, Var w) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  const size_t k = xv.rows(), a = xv.cols();
  if (wv.rows() != k * a)
    throw DimensionError(dims("blockwise_matmul", xv.rows(), xv.cols(), wv.rows(), wv.cols()));
  const size_t b = wv.cols();
  BasicMatrix<T> out(k, b);
  for (size_t r = 0; r < k; ++r)
    for (size_t i = 0; i < a; ++i) {
      const T xi = xv(r, i);
      const T* wrow = wv.data() + (r * a + i) * b;
      T* orow = out.data() + r * b;
      for (size_t j = 0; j < b; ++j) orow[j] += xi * wrow[j];
    }
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [x, w, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& xv = t.value(x);
    const auto& wv = t.value(w);
    auto& gx = t.grad(x);
    auto& gw = t.grad(w);
    const size_t k = xv.rows(), a = xv.cols(), b = wv.cols();
    for (size_t r = 0; r < k; ++r)
      for (size_t i = 0; i < a; ++i) {
        const T* wrow = wv.data() + (r * a + i) * b;
        T* gwrow = gw.data() + (r * a + i) * b;
        const T xi = xv(r, i);
        T s{0};
        for (size_t j = 0; j < b; ++j) {
          s += g(r, j) * wrow[j];
          gwrow[j] += xi * g(r, j);
        }
        gx(r, i) += s;
      }
  });
}

template <typename T>
Var concat_cols(Tape<T>& t, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const size_t n = t.value(parts[0]).rows();
  size_t total = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != n) throw DimensionError("concat_cols: row count mismatch");
    total += t.value(p).cols();
  }
  BasicMatrix<T> out(n, total);
  size_t off = 0;
  for (Var p : parts) {
    const auto& pv = t.value(p);
    for (size_t i = 0; i < n; ++i)
      std::copy(pv.row(i).begin(), pv.row(i).end(), out.row(i).begin() + static_cast<ptrdiff_t>(off));
    off += pv.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [ps, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    size_t off = 0;
    for (Var p : ps) {
      auto& gp = t.grad(p);
      for (size_t i = 0; i < gp.rows(); ++i)
        for (size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off + j);
      off += gp.cols();
    }
  });
}

template <typename T>
Var concat_rows(Tape<T>& t, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const size_t c = t.value(parts[0]).cols();
  size_t total = 0;
  for (Var p : parts) {
    if (t.value(p).cols() != c) throw DimensionError("concat_rows: column count mismatch");
    total += t.value(p).rows();
  }
  BasicMatrix<T> out(total, c);
  size_t off = 0;
  for (Var p : parts) {
    const auto& pv = t.value(p);
    std::copy(pv.values().begin(), pv.values().end(),
              out.values().begin() + static_cast<ptrdiff_t>(off * c));
    off += pv.rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [ps, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    size_t off = 0;
    for (Var p : ps) {
      auto& gp = t.grad(p);
      auto src = g.values().subspan(off * g.cols(), gp.size());
      for (size_t i = 0; i < gp.size(); ++i) gp.values()[i] += src[i];
      off += gp.rows();
    }
  });
}

template <typename T>
Var broadcast_rows(Tape<T>& t, Var a, size_t n) {
  const auto& av = t.value(a);
  if (av.rows() != 1) throw DimensionError("broadcast_rows: input must be a single row");
  BasicMatrix<T> out(n, av.cols());
  for (size_t i = 0; i < n; ++i) std::copy(av.row(0).begin(), av.row(0).end(), out.row(i).begin());
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < g.rows(); ++i)
      for (size_t j = 0; j < g.cols(); ++j) ga(0, j) += g(i, j);
  });
}

template <typename T>
Var mean_rows(Tape<T>& t, Var a, size_t begin, size_t end) {
  const auto& av = t.value(a);
  if (begin >= end || end > av.rows()) throw DimensionError("mean_rows: bad row range");
  BasicMatrix<T> out(1, av.cols());
  for (size_t i = begin; i < end; ++i)
    for (size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
  const T inv = T{1} / static_cast<T>(end - begin);
  for (T& v : out.values()) v *= inv;
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o, begin, end, inv](Tape<T>& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad(a);
    for (size_t i = begin; i < end; ++i)
      for (size_t j = 0; j < g.cols(); ++j) ga(i, j) += inv * g(0, j);
  });
}

template <typename T>
Var slice_rows(Tape<T>& t, Var a, size_t begin, size_t end) {
  const auto& av = t.value(a);
  if (begin > end || end > av.rows()) throw DimensionError("slice_rows: bad row range");
  BasicMatrix<T> out(end - begin, av.cols());
  std::copy(av.data() + begin * av.cols(), av.data() + end * av.cols(), out.data());
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o, begin](Tape<T>& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad(a);
    for (size_t k = 0; k < g.size(); ++k) ga.values()[begin * g.cols() + k] += g.values()[k];
  });
}

template <typename T>
Var gather_var_rows(Tape<T>& t, Var a, std::span<const int32_t> rows) {
  const auto& av = t.value(a);
  BasicMatrix<T> out(rows.size(), av.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<size_t>(rows[i]) >= av.rows())
      throw DimensionError("gather_var_rows: row index out of range");
    auto src = av.row(static_cast<size_t>(rows[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<int32_t> idx(rows.begin(), rows.end());
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o, idx = std::move(idx)](Tape<T>& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < idx.size(); ++i) {
      auto dst = ga.row(static_cast<size_t>(idx[i]));
      auto src = g.row(i);
      for (size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var gather_rows(Tape<T>& t, const BasicParam<T>& table, size_t index,
                std::span<const int32_t> rows) {
  const auto& tv = table.value;
  BasicMatrix<T> out(rows.size(), tv.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<size_t>(rows[i]) >= tv.rows())
      throw DimensionError("gather_rows: index " + std::to_string(rows[i]) + " outside " +
                           table.name);
    auto src = tv.row(static_cast<size_t>(rows[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<int32_t> idx(rows.begin(), rows.end());
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [o, index, idx = std::move(idx)](Tape<T>& t) {
    const auto& g = t.grad(o);
    for (size_t i = 0; i < idx.size(); ++i) {
      auto dst = t.sink()->sparse_row(index, idx[i], g.cols());
      auto src = g.row(i);
      for (size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var row_dot(Tape<T>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require_same("row_dot", av, bv);
  BasicMatrix<T> out(av.rows(), 1);
  for (size_t i = 0; i < av.rows(); ++i) out(i, 0) = dot<T>(av.row(i), bv.row(i));
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, b, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    auto& ga = t.grad(a);
    auto& gb = t.grad(b);
    for (size_t i = 0; i < av.rows(); ++i)
      for (size_t j = 0; j < av.cols(); ++j) {
        ga(i, j) += g(i, 0) * bv(i, j);
        gb(i, j) += g(i, 0) * av(i, j);
      }
  });
}

template <typename T>
Var scale_rows(Tape<T>& t, Var a, Var w) {
  const auto& av = t.value(a);
  const auto& wv = t.value(w);
  if (wv.cols() != 1 || wv.rows() != av.rows())
    throw DimensionError(dims("scale_rows", av.rows(), av.cols(), wv.rows(), wv.cols()));
  auto out = av;
  for (size_t i = 0; i < out.rows(); ++i)
    for (T& v : out.row(i)) v *= wv(i, 0);
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, w, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& av = t.value(a);
    const auto& wv = t.value(w);
    auto& ga = t.grad(a);
    auto& gw = t.grad(w);
    for (size_t i = 0; i < av.rows(); ++i)
      for (size_t j = 0; j < av.cols(); ++j) {
        ga(i, j) += g(i, j) * wv(i, 0);
        gw(i, 0) += g(i, j) * av(i, j);
      }
  });
}

template <typename T>
Var select_col(Tape<T>& t, Var a, size_t col) {
  const auto& av = t.value(a);
  if (col >= av.cols()) throw DimensionError("select_col: column out of range");
  BasicMatrix<T> out(av.rows(), 1);
  for (size_t i = 0; i < av.rows(); ++i) out(i, 0) = av(i, col);
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o, col](Tape<T>& t) {
    const auto& g = t.grad(o);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < g.rows(); ++i) ga(i, col) += g(i, 0);
  });
}

template <typename T>
Var sum_squares(Tape<T>& t, Var a) {
  T s{0};
  for (T v : t.value(a).values()) s += v * v;
  Var o{static_cast<int32_t>(t.size())};
  return t.push(BasicMatrix<T>(1, 1, s), [a, o](Tape<T>& t) {
    const T g = t.grad(o)(0, 0);
    const auto& av = t.value(a);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < av.size(); ++i) ga.values()[i] += T{2} * g * av.values()[i];
  });
}

template <typename T>
Var div_scalar(Tape<T>& t, Var a, Var s) {
  const auto& sv = t.value(s);
  if (sv.size() != 1) throw DimensionError("div_scalar: divisor must be 1x1");
  const T d = sv(0, 0);
  auto out = t.value(a);
  for (T& v : out.values()) v /= d;
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, s, o](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& av = t.value(a);
    const T d = t.value(s)(0, 0);
    auto& ga = t.grad(a);
    T acc{0};
    for (size_t i = 0; i < g.size(); ++i) {
      ga.values()[i] += g.values()[i] / d;
      acc += g.values()[i] * av.values()[i];
    }
    t.grad(s)(0, 0) -= acc / (d * d);
  });
}

template <typename T>
Var add_identity(Tape<T>& t, Var a, T alpha) {
  auto out = t.value(a);
  if (out.rows() != out.cols()) throw DimensionError("add_identity: matrix must be square");
  for (size_t i = 0; i < out.rows(); ++i) out(i, i) += alpha;
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o](Tape<T>& t) { add_into(t.grad(a), t.grad(o)); });
}

template <typename T>
Var frobenius(Tape<T>& t, Var a) {
  const T n = frobenius_norm(t.value(a));
  Var o{static_cast<int32_t>(t.size())};
  return t.push(BasicMatrix<T>(1, 1, n), [a, o](Tape<T>& t) {
    const T n = t.value(o)(0, 0);
    if (n == T{0}) return;
    const T g = t.grad(o)(0, 0) / n;
    const auto& av = t.value(a);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < av.size(); ++i) ga.values()[i] += g * av.values()[i];
  });
}

template <typename T>
Var row_normalize(Tape<T>& t, Var a) {
  const auto& av = t.value(a);
  BasicMatrix<T> out(av.rows(), av.cols());
  std::vector<T> norms(av.rows());
  for (size_t i = 0; i < av.rows(); ++i) {
    norms[i] = std::max(std::sqrt(dot<T>(av.row(i), av.row(i))), T(1e-12));
    for (size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) / norms[i];
  }
  Var o{static_cast<int32_t>(t.size())};
  return t.push(std::move(out), [a, o, norms = std::move(norms)](Tape<T>& t) {
    const auto& g = t.grad(o);
    const auto& y = t.value(o);
    auto& ga = t.grad(a);
    for (size_t i = 0; i < y.rows(); ++i) {
      const T yg = dot<T>(y.row(i), g.row(i));
      for (size_t j = 0; j < y.cols(); ++j) ga(i, j) += (g(i, j) - y(i, j) * yg) / norms[i];
    }
  });
}

template <typename T>
Var bce_logit_pair_sum(Tape<T>& t, Var logits, std::span<const float> labels) {
  const auto& lv = t.value(logits);
  if (lv.cols() != 2 || lv.rows() != labels.size())
    throw DimensionError("bce_logit_pair_sum: expected n x 2 logits and n labels");
  const T lo = static_cast<T>(kProbabilityClamp);
  const T hi = T{1} - lo;
  T loss{0};
  std::vector<T> dz(lv.rows(), T{0});
  for (size_t i = 0; i < lv.rows(); ++i) {
    const T p = numerics::sigmoid<T>(lv(i, 1) - lv(i, 0));
    const T y = static_cast<T>(labels[i]);
    const T pc = std::clamp(p, lo, hi);
    loss -= y * std::log(pc) + (T{1} - y) * std::log(T{1} - pc);
    if (p > lo && p < hi) dz[i] = p - y;
  }
  Var o{static_cast<int32_t>(t.size())};
  return t.push(BasicMatrix<T>(1, 1, loss), [logits, o, dz = std::move(dz)](Tape<T>& t) {
    const T g = t.grad(o)(0, 0);
    auto& gl = t.grad(logits);
    for (size_t i = 0; i < dz.size(); ++i) {
      gl(i, 1) += g * dz[i];
      gl(i, 0) -= g * dz[i];
    }
  });
}

#define UXSID_INSTANTIATE_AD(T)                                                         \
  template Var matmul(Tape<T>&, Var, Var);                                              \
  template Var matmul_bt(Tape<T>&, Var, Var);                                           \
  template Var add(Tape<T>&, Var, Var);                                                 \
  template Var sub(Tape<T>&, Var, Var);                                                 \
  template Var add_row(Tape<T>&, Var, Var);                                             \
  template Var hadamard(Tape<T>&, Var, Var);                                            \
  template Var scale(Tape<T>&, Var, T);                                                 \
  template Var sigmoid(Tape<T>&, Var);                                                  \
  template Var relu(Tape<T>&, Var);                                                     \
  template Var softmax_rows(Tape<T>&, Var);                                             \
  template Var layer_norm_rows(Tape<T>&, Var, Var, Var, T);                             \
  template Var blockwise_matmul(Tape<T>&, Var, Var);                                    \
  template Var concat_cols(Tape<T>&, std::span<const Var>);                             \
  template Var concat_rows(Tape<T>&, std::span<const Var>);                             \
  template Var broadcast_rows(Tape<T>&, Var, size_t);                                   \
  template Var mean_rows(Tape<T>&, Var, size_t, size_t);                                \
  template Var slice_rows(Tape<T>&, Var, size_t, size_t);                               \
  template Var gather_var_rows(Tape<T>&, Var, std::span<const int32_t>);                \
  template Var gather_rows(Tape<T>&, const BasicParam<T>&, size_t,                      \
                           std::span<const int32_t>);                                   \
  template Var row_dot(Tape<T>&, Var, Var);                                             \
  template Var scale_rows(Tape<T>&, Var, Var);                                          \
  template Var select_col(Tape<T>&, Var, size_t);                                       \
  template Var sum_squares(Tape<T>&, Var);                                              \
  template Var div_scalar(Tape<T>&, Var, Var);                                          \
  template Var add_identity(Tape<T>&, Var, T);                                          \
  template Var frobenius(Tape<T>&, Var);                                                \
  template Var row_normalize(Tape<T>&, Var);                                            \
  template Var bce_logit_pair_sum(Tape<T>&, Var, std::span<const float>);

UXSID_INSTANTIATE_AD(float)
UXSID_INSTANTIATE_AD(double)

#undef UXSID_INSTANTIATE_AD

}  // namespace ad

template class GradientBuffer<float>;
template class GradientBuffer<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace uxsid::numerics
