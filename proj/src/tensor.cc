// lattice/tensor.cc
//
// Copyright 2026 The lattice-lid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lattice/tensor.h"

#include <algorithm>
#include <atomic>
#include <cblas.h>
#include <cmath>
#include <unordered_set>

namespace lattice {

namespace detail {

uint64_t next_node_id() {
  static std::atomic<uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace detail

using detail::Node;

namespace {

std::shared_ptr<Node> new_node(std::vector<int> shape,
                               std::vector<double> data) {
  auto n = std::make_shared<Node>();
  n->id = detail::next_node_id();
  n->shape = std::move(shape);
  n->data = std::move(data);
  return n;
}

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// rows/cols of a 2-D tensor
int rows_of(const Tensor& t) { return t.shape()[0]; }
int cols_of(const Tensor& t) { return t.shape()[1]; }

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto n = new_node(shape, std::vector<double>(shape_size(shape), 0.0));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  auto n = new_node(shape, std::vector<double>(shape_size(shape), value));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
  require(shape_size(shape) == static_cast<int64_t>(data.size()),
          "tensor: shape/data size mismatch");
  auto n = new_node(std::move(shape), std::move(data));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

double Tensor::item() const {
  require(size() == 1, "tensor: item() on non-scalar");
  return node_->data[0];
}

void Tensor::backward() const {
  require(size() == 1, "tensor: backward() from non-scalar");
  // Collect the reachable subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second)
        stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](Node* a, Node* b) { return a->id > b->id; });
  // Interior grads are scratch space per call; only leaves accumulate.
  for (Node* n : order) {
    if (n->backward)
      n->grad.assign(n->size(), 0.0);
    else
      n->ensure_grad();
  }
  node_->grad[0] += 1.0;
  for (Node* n : order) {
    if (n->backward) n->backward(*n);
  }
}

Tensor make_op(std::vector<int> shape, std::vector<double> data,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward) {
  auto n = new_node(std::move(shape), std::move(data));
  bool any_grad = false;
  for (auto& p : parents) {
    any_grad = any_grad || p.requires_grad();
    n->parents.push_back(p.node());
  }
  if (any_grad) {
    n->requires_grad = true;
    n->backward = std::move(backward);
  }
  return Tensor(n);
}

namespace {

// Accumulation helper respecting per-parent requires_grad.
void acc(Node& out, size_t parent_idx,
         const std::function<void(std::vector<double>&)>& fn) {
  auto& p = *out.parents[parent_idx];
  if (!p.requires_grad) return;
  p.ensure_grad();
  fn(p.grad);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shape mismatch");
  std::vector<double> out(a.data());
  const auto& bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](Node& n) {
    for (size_t pi = 0; pi < 2; ++pi)
      acc(n, pi, [&](std::vector<double>& g) {
        for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
      });
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "sub: shape mismatch");
  std::vector<double> out(a.data());
  const auto& bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
    acc(n, 1, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    });
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch");
  std::vector<double> out(a.data());
  const auto& bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](Node& n) {
    const auto& ad = n.parents[0]->data;
    const auto& bd2 = n.parents[1]->data;
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * bd2[i];
    });
    acc(n, 1, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * ad[i];
    });
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data());
  for (auto& v : out) v *= s;
  return make_op(a.shape(), std::move(out), {a}, [s](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * s;
    });
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.data());
  for (auto& v : out) v += s;
  return make_op(a.shape(), std::move(out), {a}, [](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_op(a.shape(), std::move(out), {a}, [](Node& n) {
    const auto& ad = n.parents[0]->data;
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i)
        if (ad[i] > 0.0) g[i] += n.grad[i];
    });
  });
}

Tensor exp_op(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = std::exp(v);
  return make_op(a.shape(), std::move(out), {a}, [](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * n.data[i];
    });
  });
}

Tensor log_op(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = std::log(v);
  return make_op(a.shape(), std::move(out), {a}, [](Node& n) {
    const auto& ad = n.parents[0]->data;
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] / ad[i];
    });
  });
}

Tensor clamp_min(const Tensor& a, double lo) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = std::max(v, lo);
  return make_op(a.shape(), std::move(out), {a}, [lo](Node& n) {
    const auto& ad = n.parents[0]->data;
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i)
        if (ad[i] > lo) g[i] += n.grad[i];
    });
  });
}

Tensor detach(const Tensor& a) {
  auto n = new_node(a.shape(), a.data());
  return Tensor(n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "matmul: 2-D operands required");
  require(cols_of(a) == rows_of(b), "matmul: inner dimension mismatch");
  const int m = rows_of(a), k = cols_of(a), n2 = cols_of(b);
  std::vector<double> out(static_cast<size_t>(m) * n2, 0.0);
  if (m && k && n2)
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n2, k, 1.0,
                a.data().data(), k, b.data().data(), n2, 0.0, out.data(), n2);
  return make_op({m, n2}, std::move(out), {a, b}, [m, k, n2](Node& n) {
    const auto& ad = n.parents[0]->data;
    const auto& bd = n.parents[1]->data;
    acc(n, 0, [&](std::vector<double>& g) {
      // dA = dC * B^T
      if (m && k && n2)
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, n2, 1.0,
                    n.grad.data(), n2, bd.data(), n2, 1.0, g.data(), k);
    });
    acc(n, 1, [&](std::vector<double>& g) {
      // dB = A^T * dC
      if (m && k && n2)
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n2, m, 1.0,
                    ad.data(), k, n.grad.data(), n2, 1.0, g.data(), n2);
    });
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "matmul_nt: 2-D operands required");
  require(cols_of(a) == cols_of(b), "matmul_nt: inner dimension mismatch");
  const int m = rows_of(a), k = cols_of(a), n2 = rows_of(b);
  std::vector<double> out(static_cast<size_t>(m) * n2, 0.0);
  if (m && k && n2)
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, n2, k, 1.0,
                a.data().data(), k, b.data().data(), k, 0.0, out.data(), n2);
  return make_op({m, n2}, std::move(out), {a, b}, [m, k, n2](Node& n) {
    const auto& ad = n.parents[0]->data;
    const auto& bd = n.parents[1]->data;
    acc(n, 0, [&](std::vector<double>& g) {
      // dA = dC * B
      if (m && k && n2)
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, k, n2, 1.0,
                    n.grad.data(), n2, bd.data(), k, 1.0, g.data(), k);
    });
    acc(n, 1, [&](std::vector<double>& g) {
      // dB = dC^T * A
      if (m && k && n2)
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, n2, k, m, 1.0,
                    n.grad.data(), n2, ad.data(), k, 1.0, g.data(), k);
    });
  });
}

namespace {
const std::vector<double>& rowvec_data(const Tensor& row, int expect) {
  bool ok = (row.ndim() == 1 && row.shape()[0] == expect) ||
            (row.ndim() == 2 && row.shape()[0] == 1 && row.shape()[1] == expect);
  require(ok, "rowvec: length mismatch");
  return row.data();
}
}  // namespace

Tensor add_rowvec(const Tensor& x, const Tensor& row) {
  const int r = rows_of(x), c = cols_of(x);
  const auto& rv = rowvec_data(row, c);
  std::vector<double> out(x.data());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(i) * c + j] += rv[j];
  return make_op(x.shape(), std::move(out), {x, row}, [r, c](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
    acc(n, 1, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) g[j] += n.grad[static_cast<size_t>(i) * c + j];
    });
  });
}

Tensor sub_rowvec(const Tensor& x, const Tensor& row) {
  const int r = rows_of(x), c = cols_of(x);
  const auto& rv = rowvec_data(row, c);
  std::vector<double> out(x.data());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(i) * c + j] -= rv[j];
  return make_op(x.shape(), std::move(out), {x, row}, [r, c](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
    acc(n, 1, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) g[j] -= n.grad[static_cast<size_t>(i) * c + j];
    });
  });
}

Tensor mul_colvec(const Tensor& x, const Tensor& col) {
  const int r = rows_of(x), c = cols_of(x);
  bool ok = (col.ndim() == 1 && col.shape()[0] == r) ||
            (col.ndim() == 2 && col.shape()[0] == r && col.shape()[1] == 1);
  require(ok, "mul_colvec: length mismatch");
  const auto& cv = col.data();
  std::vector<double> out(x.data());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(i) * c + j] *= cv[i];
  return make_op(x.shape(), std::move(out), {x, col}, [r, c](Node& n) {
    const auto& xd = n.parents[0]->data;
    const auto& cd = n.parents[1]->data;
    acc(n, 0, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          g[static_cast<size_t>(i) * c + j] += n.grad[static_cast<size_t>(i) * c + j] * cd[i];
    });
    acc(n, 1, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j)
          s += n.grad[static_cast<size_t>(i) * c + j] * xd[static_cast<size_t>(i) * c + j];
        g[i] += s;
      }
    });
  });
}

Tensor take_rows(const Tensor& x, int nrows) {
  const int r = rows_of(x), c = cols_of(x);
  require(nrows >= 0 && nrows <= r, "take_rows: row count out of range");
  std::vector<double> out(x.data().begin(),
                          x.data().begin() + static_cast<size_t>(nrows) * c);
  return make_op({nrows, c}, std::move(out), {x}, [nrows, c](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (size_t i = 0; i < static_cast<size_t>(nrows) * c; ++i) g[i] += n.grad[i];
    });
  });
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  const int r = rows_of(x), c = cols_of(x);
  require(start >= 0 && len >= 0 && start + len <= c, "slice_cols: range");
  std::vector<double> out(static_cast<size_t>(r) * len);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < len; ++j)
      out[static_cast<size_t>(i) * len + j] = x.data()[static_cast<size_t>(i) * c + start + j];
  return make_op({r, len}, std::move(out), {x}, [r, c, start, len](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < len; ++j)
          g[static_cast<size_t>(i) * c + start + j] += n.grad[static_cast<size_t>(i) * len + j];
    });
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: empty input");
  const int r = rows_of(parts[0]);
  int total = 0;
  for (const auto& p : parts) {
    require(rows_of(p) == r, "concat_cols: row mismatch");
    total += cols_of(p);
  }
  std::vector<double> out(static_cast<size_t>(r) * total);
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    const int c = cols_of(p);
    offsets.push_back(off);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        out[static_cast<size_t>(i) * total + off + j] = p.data()[static_cast<size_t>(i) * c + j];
    off += c;
  }
  return make_op({r, total}, std::move(out), parts,
                 [r, total, offsets](Node& n) {
                   for (size_t pi = 0; pi < n.parents.size(); ++pi) {
                     const int c = n.parents[pi]->shape[1];
                     const int o = offsets[pi];
                     acc(n, pi, [&](std::vector<double>& g) {
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < c; ++j)
                           g[static_cast<size_t>(i) * c + j] +=
                               n.grad[static_cast<size_t>(i) * total + o + j];
                     });
                   }
                 });
}

Tensor col_mean(const Tensor& x) {
  const int r = rows_of(x), c = cols_of(x);
  require(r >= 1, "col_mean: empty input");
  std::vector<double> out(c, 0.0);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[j] += x.data()[static_cast<size_t>(i) * c + j];
  for (auto& v : out) v /= r;
  return make_op({1, c}, std::move(out), {x}, [r, c](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          g[static_cast<size_t>(i) * c + j] += n.grad[j] / r;
    });
  });
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_op({1}, {s}, {x}, [](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (auto& v : g) v += n.grad[0];
    });
  });
}

Tensor mean_all(const Tensor& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor softmax_rows(const Tensor& x) {
  const int r = rows_of(x), c = cols_of(x);
  std::vector<double> out(x.data());
  for (int i = 0; i < r; ++i) {
    double* row = out.data() + static_cast<size_t>(i) * c;
    double mx = *std::max_element(row, row + c);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < c; ++j) row[j] /= sum;
  }
  return make_op(x.shape(), std::move(out), {x}, [r, c](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i) {
        const double* y = n.data.data() + static_cast<size_t>(i) * c;
        const double* dy = n.grad.data() + static_cast<size_t>(i) * c;
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += dy[j] * y[j];
        double* gx = g.data() + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) gx[j] += (dy[j] - dot) * y[j];
      }
    });
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  const int r = rows_of(x), c = cols_of(x);
  std::vector<double> out(x.data());
  for (int i = 0; i < r; ++i) {
    double* row = out.data() + static_cast<size_t>(i) * c;
    double mx = *std::max_element(row, row + c);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
    const double lse = mx + std::log(sum);
    for (int j = 0; j < c; ++j) row[j] -= lse;
  }
  return make_op(x.shape(), std::move(out), {x}, [r, c](Node& n) {
    acc(n, 0, [&](std::vector<double>& g) {
      for (int i = 0; i < r; ++i) {
        const double* y = n.data.data() + static_cast<size_t>(i) * c;
        const double* dy = n.grad.data() + static_cast<size_t>(i) * c;
        double s = 0.0;
        for (int j = 0; j < c; ++j) s += dy[j];
        double* gx = g.data() + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) gx[j] += dy[j] - std::exp(y[j]) * s;
      }
    });
  });
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps) {
  const int r = rows_of(x), c = cols_of(x);
  require(c >= 1, "layernorm: empty rows");
  rowvec_data(gamma, c);
  rowvec_data(beta, c);
  std::vector<double> out(static_cast<size_t>(r) * c);
  std::vector<double> xhat(static_cast<size_t>(r) * c);
  std::vector<double> inv_std(r);
  const auto& xd = x.data();
  const auto& gd = gamma.data();
  const auto& bd = beta.data();
  for (int i = 0; i < r; ++i) {
    const double* row = xd.data() + static_cast<size_t>(i) * c;
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += row[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= c;
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[i] = istd;
    for (int j = 0; j < c; ++j) {
      const double h = (row[j] - mean) * istd;
      xhat[static_cast<size_t>(i) * c + j] = h;
      out[static_cast<size_t>(i) * c + j] = h * gd[j] + bd[j];
    }
  }
  return make_op(
      x.shape(), std::move(out), {x, gamma, beta},
      [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& n) {
        const auto& gd2 = n.parents[1]->data;
        acc(n, 0, [&](std::vector<double>& g) {
          for (int i = 0; i < r; ++i) {
            const double* dy = n.grad.data() + static_cast<size_t>(i) * c;
            const double* xh = xhat.data() + static_cast<size_t>(i) * c;
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < c; ++j) {
              const double t = dy[j] * gd2[j];
              m1 += t;
              m2 += t * xh[j];
            }
            m1 /= c;
            m2 /= c;
            double* gx = g.data() + static_cast<size_t>(i) * c;
            for (int j = 0; j < c; ++j)
              gx[j] += (dy[j] * gd2[j] - m1 - xh[j] * m2) * inv_std[i];
          }
        });
        acc(n, 1, [&](std::vector<double>& g) {
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
              g[j] += n.grad[static_cast<size_t>(i) * c + j] *
                      xhat[static_cast<size_t>(i) * c + j];
        });
        acc(n, 2, [&](std::vector<double>& g) {
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
              g[j] += n.grad[static_cast<size_t>(i) * c + j];
        });
      });
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& mask_row) {
  const int dk = cols_of(q);
  require(cols_of(k) == dk && rows_of(k) == rows_of(v),
          "attention: key/value shape mismatch");
  bool any_open = false;
  for (double m : mask_row.data())
    if (m > -1e20) any_open = true;
  require(any_open, "attention: every key is masked");
  Tensor scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(dk)));
  Tensor masked = add_rowvec(scores, mask_row);
  Tensor weights = softmax_rows(masked);
  return matmul(weights, v);
}

std::vector<double> finite_difference_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double eps) {
  std::vector<double> g(x.size());
  std::vector<double> xp = x;
  for (size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + eps;
    const double fp = f(xp);
    xp[i] = x[i] - eps;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

void check_finite(const Tensor& t, const std::string& what) {
  for (double v : t.data())
    if (!std::isfinite(v))
      throw std::runtime_error("non-finite value in " + what);
}

}  // namespace lattice
