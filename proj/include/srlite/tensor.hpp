#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srlite/common.hpp"

namespace srlite {

namespace detail {

// One node of the recorded computation graph. Interior nodes carry a
// backprop closure and shared handles to their parents; the tape for a
// forward pass is exactly the set of interior nodes reachable from its root,
// and is freed (closures and parent edges dropped) when backward runs.
template <class S>
struct NodeT {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool leaf = true;
  bool backward_done = false;
  std::vector<std::shared_ptr<NodeT>> parents;
  std::function<void(NodeT&)> backprop;

  std::size_t numel() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), S(0));
  }
};

}  // namespace detail

// Dense row-major tensor with reverse-mode automatic differentiation.
// TensorT is a cheap handle (shared_ptr to the node); copies alias the same
// storage. Values are immutable once an op has consumed them, except for
// leaf updates between training steps and gradient accumulation during a
// single backward pass. The scalar type selects the precision mode: float
// for training and inference, double for gradient checking.
template <class S>
class TensorT {
 public:
  using Scalar = S;

  TensorT() = default;
  explicit TensorT(std::shared_ptr<detail::NodeT<S>> n) : node_(std::move(n)) {}

  static TensorT zeros(Shape shape, bool requires_grad = false);
  static TensorT full(Shape shape, S value, bool requires_grad = false);
  static TensorT from_vector(Shape shape, std::vector<S> values,
                             bool requires_grad = false);
  static TensorT scalar(S value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }

  std::span<const S> data() const { return node_->value; }
  // Leaf storage for initialization and optimizer updates. Mutating a tensor
  // that a recorded graph has already consumed invalidates that graph.
  std::span<S> mutable_data();

  bool requires_grad() const { return node_->requires_grad; }
  TensorT& set_requires_grad(bool v);
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const S> grad() const { return node_->grad; }
  std::span<S> mutable_grad() { return node_->grad; }
  void zero_grad();

  // Value of a one-element tensor.
  S item() const;
  // Element by multi-index, for tests and small inspections.
  S at(std::initializer_list<std::size_t> idx) const;

  // Copies the value into a fresh constant leaf, cutting the graph.
  TensorT detach() const;
  // Deep copy as an independent leaf with the same requires_grad flag.
  TensorT clone() const;

  const std::shared_ptr<detail::NodeT<S>>& node() const { return node_; }

 private:
  std::shared_ptr<detail::NodeT<S>> node_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Tape recording switch (per thread). While disabled, ops neither link
// parents nor keep backward closures, so intermediates are freed as soon as
// their handles go out of scope; values are unchanged. Use for inference on
// inputs too large to hold a full tape.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// ---- elementwise ----
template <class S> TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b);
template <class S> TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b);
template <class S> TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b);
template <class S> TensorT<S> neg(const TensorT<S>& a);
template <class S> TensorT<S> scale(const TensorT<S>& a, S factor);
template <class S> TensorT<S> add_scalar(const TensorT<S>& a, S value);
// b's shape must be a suffix of a's shape; b is repeated over the leading
// axes (bias-style broadcast).
template <class S> TensorT<S> add_broadcast(const TensorT<S>& a, const TensorT<S>& b);

// ---- shape ----
template <class S> TensorT<S> reshape(const TensorT<S>& a, Shape shape);
template <class S> TensorT<S> permute(const TensorT<S>& a, const std::vector<std::size_t>& axes);
template <class S> TensorT<S> slice(const TensorT<S>& a, const std::vector<std::size_t>& start,
                                    const std::vector<std::size_t>& extent);
template <class S> TensorT<S> pad(const TensorT<S>& a, const std::vector<std::size_t>& lo,
                                  const std::vector<std::size_t>& hi);
template <class S> TensorT<S> concat(const std::vector<TensorT<S>>& parts, std::size_t axis);
// out[i] = a.flat[src_index[i]]; the workhorse behind the layout ops.
template <class S> TensorT<S> gather(const TensorT<S>& a, Shape out_shape,
                                     std::vector<std::size_t> src_index);

// ---- reductions ----
template <class S> TensorT<S> sum_all(const TensorT<S>& a);
template <class S> TensorT<S> mean_all(const TensorT<S>& a);
template <class S> TensorT<S> mean_axis(const TensorT<S>& a, std::size_t axis);
// Biased variance along one axis.
template <class S> TensorT<S> variance_axis(const TensorT<S>& a, std::size_t axis);

// ---- linear algebra ----
// Batched matrix product a[..,m,k] * b[..,k,n]; batch extents broadcast
// (equal or 1, shorter batch ranks align right).
template <class S> TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b);
// Stable softmax along the given axis; outputs sum to 1 along it.
template <class S> TensorT<S> softmax(const TensorT<S>& a, std::size_t axis);

// ---- autodiff ----
// Reverse pass from a scalar root. Populates grads of every requires_grad
// leaf reachable from the root, then frees the tape. A graph can be walked
// once; a second backward through any of its nodes is an error.
template <class S> void backward(const TensorT<S>& root);

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
};

// Compares the analytic gradient of a scalar-valued function against central
// finite differences, coordinate by coordinate. Relative error uses
// max(|analytic|, |numeric|, 1e-8) as denominator.
template <class S>
GradCheckReport grad_check(const std::function<TensorT<S>(const TensorT<S>&)>& f,
                           const TensorT<S>& x, double tol, double step = 1e-5);

// Named, ordered collection of learnable tensors. Registration order is the
// checkpoint serialization order.
template <class S>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    TensorT<S> tensor;
  };

  void add(std::string name, const TensorT<S>& t);
  TensorT<S>* find(std::string_view name);
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t total_params() const;
  void zero_grads();

 private:
  std::vector<Entry> entries_;
};

// Gradient check over every tensor in a parameter store: one analytic
// backward of f(), then central differences per coordinate. coord_stride > 1
// checks every coord_stride-th coordinate of each tensor.
template <class S>
GradCheckReport grad_check_params(const std::function<TensorT<S>()>& f,
                                  ParamStore<S>& params, double tol,
                                  double step = 1e-5, std::size_t coord_stride = 1);

namespace detail {

// Builds an op node: output requires grad iff any input does; constant
// results are pruned from the tape.
template <class S>
TensorT<S> make_op(Shape shape, std::vector<S> value,
                   const std::vector<TensorT<S>>& inputs,
                   std::function<void(NodeT<S>&)> backprop);

// dst_shape must be right-aligned broadcast-compatible with src_shape
// (missing or size-1 axes in dst are summed out). Accumulates into dst.
template <class S>
void sum_to_shape(const S* src, const Shape& src_shape, S* dst,
                  const Shape& dst_shape);

}  // namespace detail

}  // namespace srlite
