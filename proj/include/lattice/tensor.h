// lattice/tensor.h
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

#ifndef LATTICE_TENSOR_H_
#define LATTICE_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lattice {

// Dense double-precision tensor with reverse-mode autodiff.
//
// Every operation creates a new node whose id is strictly greater than the
// ids of its parents, so iterating reachable nodes by descending id is a
// valid reverse topological order. Tensors are value handles onto shared
// nodes; data is immutable after the op that produced it (parameters mutate
// between steps through mutable_data, never mid-graph).

class Tensor;

namespace detail {

struct Node {
  uint64_t id = 0;
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated on demand during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates into parents' grad buffers given this node's grad.
  std::function<void(Node&)> backward;

  int64_t size() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != static_cast<size_t>(size())) grad.assign(size(), 0.0);
  }
};

uint64_t next_node_id();

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value,
                     bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int64_t size() const { return node_->size(); }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& data() const { return node_->data; }
  // For parameter updates between optimizer steps only.
  std::vector<double>& mutable_data() { return node_->data; }
  const std::vector<double>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.assign(node_->size(), 0.0); }

  double item() const;
  double at(int r, int c) const { return node_->data[static_cast<size_t>(r) * node_->shape[1] + c]; }

  std::shared_ptr<detail::Node> node() const { return node_; }

  // Runs reverse-mode accumulation from this scalar. Leaf gradients
  // accumulate across calls until zero_grad.
  void backward() const;

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Generic op constructor for modules that register custom gradients.
Tensor make_op(std::vector<int> shape, std::vector<double> data,
               std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backward);

// ---- elementwise / structural ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
// max(x, lo); gradient is passed through where x > lo and dropped otherwise.
Tensor clamp_min(const Tensor& a, double lo);
Tensor detach(const Tensor& a);

// ---- matrix ops (2-D, row-major) ----
Tensor matmul(const Tensor& a, const Tensor& b);
// a (m x k) times b^T where b is (n x k); result m x n.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& x, const Tensor& row);   // row: 1 x C or C
Tensor sub_rowvec(const Tensor& x, const Tensor& row);
Tensor mul_colvec(const Tensor& x, const Tensor& col);   // col: R x 1
Tensor take_rows(const Tensor& x, int n);                // first n rows
Tensor slice_cols(const Tensor& x, int start, int len);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor col_mean(const Tensor& x);                        // 1 x C mean over rows
Tensor sum_all(const Tensor& x);                         // scalar
Tensor mean_all(const Tensor& x);                        // scalar

// ---- rowwise nonlinearities ----
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
// Per-row standardization followed by affine; gamma/beta are length-C.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);

// Scaled dot-product attention for one head. mask_row holds 0 for usable
// keys and a large negative value for padded ones; it is broadcast over
// query rows. Throws if every key is masked.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& mask_row);

// Central finite differences of a scalar function, the gradient oracle used
// throughout the tests.
std::vector<double> finite_difference_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double eps = 1e-5);

void check_finite(const Tensor& t, const std::string& what);

}  // namespace lattice

#endif  // LATTICE_TENSOR_H_
