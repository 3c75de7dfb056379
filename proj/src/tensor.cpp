#include "srlite/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "srlite/kernels.hpp"
#include "srlite/parallel.hpp"
#include "srlite/profile.hpp"

namespace srlite {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

namespace detail {

template <class S>
TensorT<S> make_op(Shape shape, std::vector<S> value,
                   const std::vector<TensorT<S>>& inputs,
                   std::function<void(NodeT<S>&)> backprop) {
  auto n = std::make_shared<NodeT<S>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool rg = g_grad_enabled;
  if (rg) {
    rg = false;
    for (const auto& t : inputs) rg = rg || t.requires_grad();
  }
  n->requires_grad = rg;
  if (rg) {
    n->leaf = false;
    n->backprop = std::move(backprop);
    n->parents.reserve(inputs.size());
    for (const auto& t : inputs) n->parents.push_back(t.node());
  }
  return TensorT<S>(std::move(n));
}

template <class S>
void sum_to_shape(const S* src, const Shape& src_shape, S* dst,
                  const Shape& dst_shape) {
  const std::size_t n = shape_numel(src_shape);
  const std::size_t dst_n = shape_numel(dst_shape);
  if (src_shape == dst_shape) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
    return;
  }
  // Fast path: dst is an exact trailing block of src.
  const std::size_t drop = src_shape.size() - dst_shape.size();
  bool suffix = src_shape.size() >= dst_shape.size();
  if (suffix) {
    for (std::size_t i = 0; i < dst_shape.size(); ++i) {
      if (src_shape[drop + i] != dst_shape[i]) {
        suffix = false;
        break;
      }
    }
  }
  if (suffix) {
    const std::size_t outer = n / dst_n;
    for (std::size_t o = 0; o < outer; ++o) {
      const S* row = src + o * dst_n;
      for (std::size_t j = 0; j < dst_n; ++j) dst[j] += row[j];
    }
    return;
  }
  // General case: per-element index mapping with size-1 axes pinned to 0.
  const std::size_t rank = src_shape.size();
  std::vector<std::size_t> dst_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = dst_shape.size(); i-- > 0;) {
    const std::size_t si = drop + i;
    dst_stride[si] = (dst_shape[i] == 1) ? 0 : stride;
    stride *= dst_shape[i];
  }
  std::vector<std::size_t> coord(rank, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t di = 0;
    for (std::size_t a = 0; a < rank; ++a) di += coord[a] * dst_stride[a];
    dst[di] += src[flat];
    for (std::size_t a = rank; a-- > 0;) {
      if (++coord[a] < src_shape[a]) break;
      coord[a] = 0;
    }
  }
}

template <class S>
void accumulate(NodeT<S>& parent, const S* contribution, std::size_t n) {
  parent.ensure_grad();
  S* g = parent.grad.data();
  for (std::size_t i = 0; i < n; ++i) g[i] += contribution[i];
}

}  // namespace detail

using detail::make_op;
using detail::NodeT;

// ---------------------------------------------------------------------------
// TensorT
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> TensorT<S>::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<NodeT<S>>();
  n->value.assign(shape_numel(shape), S(0));
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return TensorT<S>(std::move(n));
}

template <class S>
TensorT<S> TensorT<S>::full(Shape shape, S value, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  std::fill(t.node_->value.begin(), t.node_->value.end(), value);
  return t;
}

template <class S>
TensorT<S> TensorT<S>::from_vector(Shape shape, std::vector<S> values,
                                   bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("from_vector: shape " + shape_str(shape) + " expects " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto n = std::make_shared<NodeT<S>>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return TensorT<S>(std::move(n));
}

template <class S>
TensorT<S> TensorT<S>::scalar(S value) {
  return from_vector({1}, {value});
}

template <class S>
std::span<S> TensorT<S>::mutable_data() {
  if (!node_->leaf) {
    throw ValueError("mutable_data: only leaf tensors may be mutated");
  }
  return node_->value;
}

template <class S>
TensorT<S>& TensorT<S>::set_requires_grad(bool v) {
  if (!node_->leaf) {
    throw ValueError("set_requires_grad: only valid on leaf tensors");
  }
  node_->requires_grad = v;
  return *this;
}

template <class S>
void TensorT<S>::zero_grad() {
  if (node_->grad.size() == node_->value.size()) {
    std::fill(node_->grad.begin(), node_->grad.end(), S(0));
  }
}

template <class S>
S TensorT<S>::item() const {
  if (size() != 1) {
    throw ShapeError("item: tensor has shape " + shape_str(shape()));
  }
  return node_->value[0];
}

template <class S>
S TensorT<S>::at(std::initializer_list<std::size_t> idx) const {
  const Shape& sh = shape();
  if (idx.size() != sh.size()) {
    throw ShapeError("at: rank mismatch for shape " + shape_str(sh));
  }
  std::size_t flat = 0, a = 0;
  for (std::size_t i : idx) {
    if (i >= sh[a]) throw ShapeError("at: index out of range");
    flat = flat * sh[a] + i;
    ++a;
  }
  return node_->value[flat];
}

template <class S>
TensorT<S> TensorT<S>::detach() const {
  auto n = std::make_shared<NodeT<S>>();
  n->shape = node_->shape;
  n->value = node_->value;
  return TensorT<S>(std::move(n));
}

template <class S>
TensorT<S> TensorT<S>::clone() const {
  auto n = std::make_shared<NodeT<S>>();
  n->shape = node_->shape;
  n->value = node_->value;
  n->requires_grad = node_->requires_grad;
  return TensorT<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

namespace {

template <class S>
void check_same_shape(const TensorT<S>& a, const TensorT<S>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

}  // namespace

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
  check_same_shape(a, b, "add");
  const std::size_t n = a.size();
  std::vector<S> out(n);
  const S* pa = a.data().data();
  const S* pb = b.data().data();
  parallel_for(n, [&](std::size_t i) { out[i] = pa[i] + pb[i]; });
  return make_op<S>(a.shape(), std::move(out), {a, b},
                    [an = a.node(), bn = b.node(), n](NodeT<S>& o) {
                      if (an->requires_grad) detail::accumulate(*an, o.grad.data(), n);
                      if (bn->requires_grad) detail::accumulate(*bn, o.grad.data(), n);
                    });
}

template <class S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
  check_same_shape(a, b, "sub");
  const std::size_t n = a.size();
  std::vector<S> out(n);
  const S* pa = a.data().data();
  const S* pb = b.data().data();
  parallel_for(n, [&](std::size_t i) { out[i] = pa[i] - pb[i]; });
  return make_op<S>(a.shape(), std::move(out), {a, b},
                    [an = a.node(), bn = b.node(), n](NodeT<S>& o) {
                      if (an->requires_grad) detail::accumulate(*an, o.grad.data(), n);
                      if (bn->requires_grad) {
                        bn->ensure_grad();
                        for (std::size_t i = 0; i < n; ++i) bn->grad[i] -= o.grad[i];
                      }
                    });
}

template <class S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
  check_same_shape(a, b, "mul");
  const std::size_t n = a.size();
  std::vector<S> out(n);
  const S* pa = a.data().data();
  const S* pb = b.data().data();
  parallel_for(n, [&](std::size_t i) { out[i] = pa[i] * pb[i]; });
  return make_op<S>(a.shape(), std::move(out), {a, b},
                    [an = a.node(), bn = b.node(), n](NodeT<S>& o) {
                      if (an->requires_grad) {
                        an->ensure_grad();
                        for (std::size_t i = 0; i < n; ++i)
                          an->grad[i] += o.grad[i] * bn->value[i];
                      }
                      if (bn->requires_grad) {
                        bn->ensure_grad();
                        for (std::size_t i = 0; i < n; ++i)
                          bn->grad[i] += o.grad[i] * an->value[i];
                      }
                    });
}

template <class S>
TensorT<S> neg(const TensorT<S>& a) {
  return scale(a, S(-1));
}

template <class S>
TensorT<S> scale(const TensorT<S>& a, S factor) {
  const std::size_t n = a.size();
  std::vector<S> out(n);
  const S* pa = a.data().data();
  parallel_for(n, [&](std::size_t i) { out[i] = pa[i] * factor; });
  return make_op<S>(a.shape(), std::move(out), {a},
                    [an = a.node(), factor, n](NodeT<S>& o) {
                      an->ensure_grad();
                      for (std::size_t i = 0; i < n; ++i)
                        an->grad[i] += o.grad[i] * factor;
                    });
}

template <class S>
TensorT<S> add_scalar(const TensorT<S>& a, S value) {
  const std::size_t n = a.size();
  std::vector<S> out(n);
  const S* pa = a.data().data();
  parallel_for(n, [&](std::size_t i) { out[i] = pa[i] + value; });
  return make_op<S>(a.shape(), std::move(out), {a},
                    [an = a.node(), n](NodeT<S>& o) {
                      detail::accumulate(*an, o.grad.data(), n);
                    });
}

template <class S>
TensorT<S> add_broadcast(const TensorT<S>& a, const TensorT<S>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (bs.size() > as.size() ||
      !std::equal(bs.begin(), bs.end(), as.end() - bs.size())) {
    throw ShapeError("add_broadcast: " + shape_str(bs) +
                     " is not a suffix of " + shape_str(as));
  }
  const std::size_t n = a.size();
  const std::size_t inner = b.size();
  std::vector<S> out(n);
  const S* pa = a.data().data();
  const S* pb = b.data().data();
  parallel_for(n, [&](std::size_t i) { out[i] = pa[i] + pb[i % inner]; });
  return make_op<S>(as, std::move(out), {a, b},
                    [an = a.node(), bn = b.node(), n, inner](NodeT<S>& o) {
                      if (an->requires_grad) detail::accumulate(*an, o.grad.data(), n);
                      if (bn->requires_grad) {
                        bn->ensure_grad();
                        const std::size_t outer = n / inner;
                        for (std::size_t r = 0; r < outer; ++r) {
                          const S* g = o.grad.data() + r * inner;
                          for (std::size_t j = 0; j < inner; ++j) bn->grad[j] += g[j];
                        }
                      }
                    });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> reshape(const TensorT<S>& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  }
  std::vector<S> out(a.data().begin(), a.data().end());
  const std::size_t n = a.size();
  return make_op<S>(std::move(shape), std::move(out), {a},
                    [an = a.node(), n](NodeT<S>& o) {
                      detail::accumulate(*an, o.grad.data(), n);
                    });
}

template <class S>
TensorT<S> gather(const TensorT<S>& a, Shape out_shape,
                  std::vector<std::size_t> src_index) {
  const std::size_t n = shape_numel(out_shape);
  if (src_index.size() != n) {
    throw ShapeError("gather: index count does not match output shape");
  }
  std::vector<S> out(n);
  kernels::gather(a.data().data(), src_index.data(), out.data(), n);
  return make_op<S>(std::move(out_shape), std::move(out), {a},
                    [an = a.node(), idx = std::move(src_index)](NodeT<S>& o) {
                      an->ensure_grad();
                      kernels::scatter_add(o.grad.data(), idx.data(),
                                           an->grad.data(), idx.size());
                    });
}

template <class S>
TensorT<S> permute(const TensorT<S>& a, const std::vector<std::size_t>& axes) {
  const Shape& sh = a.shape();
  const std::size_t rank = sh.size();
  if (axes.size() != rank) throw ShapeError("permute: axes rank mismatch");
  std::vector<bool> seen(rank, false);
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (axes[i] >= rank || seen[axes[i]]) throw ShapeError("permute: invalid axes");
    seen[axes[i]] = true;
    out_shape[i] = sh[axes[i]];
  }
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * sh[i + 1];
  const std::size_t n = a.size();
  std::vector<std::size_t> idx(n);
  std::vector<std::size_t> coord(rank, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += coord[i] * in_stride[axes[i]];
    idx[flat] = src;
    for (std::size_t i = rank; i-- > 0;) {
      if (++coord[i] < out_shape[i]) break;
      coord[i] = 0;
    }
  }
  return gather(a, std::move(out_shape), std::move(idx));
}

template <class S>
TensorT<S> slice(const TensorT<S>& a, const std::vector<std::size_t>& start,
                 const std::vector<std::size_t>& extent) {
  const Shape& sh = a.shape();
  const std::size_t rank = sh.size();
  if (start.size() != rank || extent.size() != rank) {
    throw ShapeError("slice: start/extent rank mismatch");
  }
  for (std::size_t i = 0; i < rank; ++i) {
    if (extent[i] == 0 || start[i] + extent[i] > sh[i]) {
      throw ShapeError("slice: region out of range for shape " + shape_str(sh));
    }
  }
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * sh[i + 1];
  Shape out_shape(extent);
  const std::size_t n = shape_numel(out_shape);
  std::vector<std::size_t> idx(n);
  std::vector<std::size_t> coord(rank, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += (start[i] + coord[i]) * in_stride[i];
    idx[flat] = src;
    for (std::size_t i = rank; i-- > 0;) {
      if (++coord[i] < out_shape[i]) break;
      coord[i] = 0;
    }
  }
  return gather(a, std::move(out_shape), std::move(idx));
}

template <class S>
TensorT<S> pad(const TensorT<S>& a, const std::vector<std::size_t>& lo,
               const std::vector<std::size_t>& hi) {
  const Shape& sh = a.shape();
  const std::size_t rank = sh.size();
  if (lo.size() != rank || hi.size() != rank) {
    throw ShapeError("pad: lo/hi rank mismatch");
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = sh[i] + lo[i] + hi[i];
  std::vector<std::size_t> out_stride(rank, 1);
  for (std::size_t i = rank - 1; i-- > 0;)
    out_stride[i] = out_stride[i + 1] * out_shape[i + 1];
  // dst flat index for every source element
  const std::size_t n = a.size();
  std::vector<std::size_t> dst_idx(n);
  std::vector<std::size_t> coord(rank, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t dst = 0;
    for (std::size_t i = 0; i < rank; ++i) dst += (lo[i] + coord[i]) * out_stride[i];
    dst_idx[flat] = dst;
    for (std::size_t i = rank; i-- > 0;) {
      if (++coord[i] < sh[i]) break;
      coord[i] = 0;
    }
  }
  std::vector<S> out(shape_numel(out_shape), S(0));
  const S* pa = a.data().data();
  for (std::size_t i = 0; i < n; ++i) out[dst_idx[i]] = pa[i];
  return make_op<S>(std::move(out_shape), std::move(out), {a},
                    [an = a.node(), idx = std::move(dst_idx)](NodeT<S>& o) {
                      an->ensure_grad();
                      for (std::size_t i = 0; i < idx.size(); ++i)
                        an->grad[i] += o.grad[idx[i]];
                    });
}

template <class S>
TensorT<S> concat(const std::vector<TensorT<S>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  const std::size_t rank = first.size();
  if (axis >= rank) throw ShapeError("concat: axis out of range");
  std::size_t axis_total = 0;
  for (const auto& p : parts) {
    const Shape& sh = p.shape();
    if (sh.size() != rank) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < rank; ++i) {
      if (i != axis && sh[i] != first[i]) {
        throw ShapeError("concat: shape mismatch " + shape_str(first) + " vs " +
                         shape_str(sh));
      }
    }
    axis_total += sh[axis];
  }
  Shape out_shape(first);
  out_shape[axis] = axis_total;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < rank; ++i) inner *= first[i];
  std::vector<S> out(shape_numel(out_shape));
  const std::size_t out_row = axis_total * inner;
  std::size_t offset = 0;
  std::vector<std::size_t> part_offset(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    part_offset[p] = offset;
    const std::size_t blk = parts[p].shape()[axis] * inner;
    const S* src = parts[p].data().data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(src + o * blk, src + (o + 1) * blk,
                out.data() + o * out_row + offset);
    }
    offset += blk;
  }
  std::vector<std::shared_ptr<NodeT<S>>> nodes;
  std::vector<std::size_t> blks;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    blks.push_back(p.shape()[axis] * inner);
  }
  return make_op<S>(std::move(out_shape), std::move(out), parts,
                    [nodes = std::move(nodes), blks = std::move(blks),
                     part_offset = std::move(part_offset), outer,
                     out_row](NodeT<S>& o) {
                      for (std::size_t p = 0; p < nodes.size(); ++p) {
                        if (!nodes[p]->requires_grad) continue;
                        nodes[p]->ensure_grad();
                        S* g = nodes[p]->grad.data();
                        for (std::size_t r = 0; r < outer; ++r) {
                          const S* src = o.grad.data() + r * out_row + part_offset[p];
                          S* dst = g + r * blks[p];
                          for (std::size_t j = 0; j < blks[p]; ++j) dst[j] += src[j];
                        }
                      }
                    });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> sum_all(const TensorT<S>& a) {
  S acc = S(0);
  for (S v : a.data()) acc += v;
  const std::size_t n = a.size();
  return make_op<S>({1}, {acc}, {a}, [an = a.node(), n](NodeT<S>& o) {
    an->ensure_grad();
    const S g = o.grad[0];
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += g;
  });
}

template <class S>
TensorT<S> mean_all(const TensorT<S>& a) {
  S acc = S(0);
  for (S v : a.data()) acc += v;
  const std::size_t n = a.size();
  acc /= static_cast<S>(n);
  return make_op<S>({1}, {acc}, {a}, [an = a.node(), n](NodeT<S>& o) {
    an->ensure_grad();
    const S g = o.grad[0] / static_cast<S>(n);
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += g;
  });
}

namespace {

// Moves `axis` to the last position; identity when already last.
template <class S>
TensorT<S> move_axis_last(const TensorT<S>& a, std::size_t axis,
                          std::vector<std::size_t>* inverse) {
  const std::size_t rank = a.ndim();
  if (axis >= rank) throw ShapeError("axis out of range for " + shape_str(a.shape()));
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < rank; ++i)
    if (i != axis) order.push_back(i);
  order.push_back(axis);
  if (inverse) {
    inverse->assign(rank, 0);
    for (std::size_t i = 0; i < rank; ++i) (*inverse)[order[i]] = i;
  }
  if (axis == rank - 1) return a;
  return permute(a, order);
}

template <class S>
TensorT<S> mean_last(const TensorT<S>& a) {
  const Shape& sh = a.shape();
  const std::size_t cols = sh.back();
  const std::size_t rows = a.size() / cols;
  Shape out_shape(sh.begin(), sh.end() - 1);
  if (out_shape.empty()) out_shape = {1};
  std::vector<S> out(rows);
  const S* p = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    S acc = S(0);
    for (std::size_t j = 0; j < cols; ++j) acc += p[r * cols + j];
    out[r] = acc / static_cast<S>(cols);
  }
  return make_op<S>(std::move(out_shape), std::move(out), {a},
                    [an = a.node(), rows, cols](NodeT<S>& o) {
                      an->ensure_grad();
                      for (std::size_t r = 0; r < rows; ++r) {
                        const S g = o.grad[r] / static_cast<S>(cols);
                        for (std::size_t j = 0; j < cols; ++j)
                          an->grad[r * cols + j] += g;
                      }
                    });
}

template <class S>
TensorT<S> variance_last(const TensorT<S>& a) {
  const Shape& sh = a.shape();
  const std::size_t cols = sh.back();
  const std::size_t rows = a.size() / cols;
  Shape out_shape(sh.begin(), sh.end() - 1);
  if (out_shape.empty()) out_shape = {1};
  std::vector<S> out(rows);
  std::vector<S> means(rows);
  const S* p = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    S acc = S(0);
    for (std::size_t j = 0; j < cols; ++j) acc += p[r * cols + j];
    const S mu = acc / static_cast<S>(cols);
    means[r] = mu;
    S var = S(0);
    for (std::size_t j = 0; j < cols; ++j) {
      const S d = p[r * cols + j] - mu;
      var += d * d;
    }
    out[r] = var / static_cast<S>(cols);
  }
  return make_op<S>(std::move(out_shape), std::move(out), {a},
                    [an = a.node(), means = std::move(means), rows, cols](NodeT<S>& o) {
                      an->ensure_grad();
                      for (std::size_t r = 0; r < rows; ++r) {
                        const S g = o.grad[r] * S(2) / static_cast<S>(cols);
                        for (std::size_t j = 0; j < cols; ++j) {
                          an->grad[r * cols + j] +=
                              g * (an->value[r * cols + j] - means[r]);
                        }
                      }
                    });
}

}  // namespace

template <class S>
TensorT<S> mean_axis(const TensorT<S>& a, std::size_t axis) {
  return mean_last(move_axis_last(a, axis, nullptr));
}

template <class S>
TensorT<S> variance_axis(const TensorT<S>& a, std::size_t axis) {
  return variance_last(move_axis_last(a, axis, nullptr));
}

// ---------------------------------------------------------------------------
// matmul and softmax
// ---------------------------------------------------------------------------

namespace {

struct BatchPlan {
  Shape out_batch;
  std::size_t batch = 1;
  std::vector<std::size_t> a_off;
  std::vector<std::size_t> b_off;
};

// Right-aligned broadcast of the batch extents plus per-slice offsets.
inline BatchPlan plan_batches(const Shape& as, const Shape& bs, std::size_t m,
                              std::size_t k, std::size_t n) {
  BatchPlan plan;
  const std::size_t ra = as.size() - 2, rb = bs.size() - 2;
  const std::size_t rank = std::max(ra, rb);
  plan.out_batch.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = i + ra >= rank ? as[i + ra - rank] : 1;
    const std::size_t eb = i + rb >= rank ? bs[i + rb - rank] : 1;
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeError("matmul: batch extents not broadcastable " +
                       shape_str(as) + " vs " + shape_str(bs));
    }
    plan.out_batch[i] = std::max(ea, eb);
  }
  plan.batch = shape_numel(plan.out_batch);
  std::vector<std::size_t> sa(rank, 0), sb(rank, 0);
  std::size_t stride = m * k;
  for (std::size_t i = rank; i-- > 0;) {
    const std::size_t ea = i + ra >= rank ? as[i + ra - rank] : 1;
    sa[i] = (ea == 1) ? 0 : stride;
    if (i + ra >= rank) stride *= ea;
  }
  stride = k * n;
  for (std::size_t i = rank; i-- > 0;) {
    const std::size_t eb = i + rb >= rank ? bs[i + rb - rank] : 1;
    sb[i] = (eb == 1) ? 0 : stride;
    if (i + rb >= rank) stride *= eb;
  }
  plan.a_off.resize(plan.batch);
  plan.b_off.resize(plan.batch);
  std::vector<std::size_t> coord(rank, 0);
  for (std::size_t flat = 0; flat < plan.batch; ++flat) {
    std::size_t oa = 0, ob = 0;
    for (std::size_t i = 0; i < rank; ++i) {
      oa += coord[i] * sa[i];
      ob += coord[i] * sb[i];
    }
    plan.a_off[flat] = oa;
    plan.b_off[flat] = ob;
    for (std::size_t i = rank; i-- > 0;) {
      if (++coord[i] < plan.out_batch[i]) break;
      coord[i] = 0;
    }
  }
  return plan;
}

inline std::vector<std::size_t> contiguous_offsets(std::size_t batch,
                                                   std::size_t slice) {
  std::vector<std::size_t> off(batch);
  for (std::size_t i = 0; i < batch; ++i) off[i] = i * slice;
  return off;
}

}  // namespace

template <class S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() < 2 || bs.size() < 2) {
    throw ShapeError("matmul: operands must have rank >= 2, got " +
                     shape_str(as) + " and " + shape_str(bs));
  }
  const std::size_t m = as[as.size() - 2], k = as[as.size() - 1];
  const std::size_t kb = bs[bs.size() - 2], n = bs[bs.size() - 1];
  if (k != kb) {
    throw ShapeError("matmul: inner extents disagree, " + shape_str(as) +
                     " x " + shape_str(bs));
  }
  BatchPlan plan = plan_batches(as, bs, m, k, n);
  Shape out_shape = plan.out_batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<S> out(plan.batch * m * n);
  kernels::matmul(a.data().data(), b.data().data(), out.data(),
                  plan.a_off.data(), plan.b_off.data(), plan.batch, m, k, n,
                  false, false, false);
  profile::count_multiadds(static_cast<std::uint64_t>(plan.batch) * m * k * n);

  Shape a_full = plan.out_batch;
  a_full.push_back(m);
  a_full.push_back(k);
  Shape b_full = plan.out_batch;
  b_full.push_back(k);
  b_full.push_back(n);
  return make_op<S>(
      std::move(out_shape), std::move(out), {a, b},
      [an = a.node(), bn = b.node(), plan = std::move(plan), m, k, n,
       a_full = std::move(a_full), b_full = std::move(b_full)](NodeT<S>& o) {
        const auto dy_off = contiguous_offsets(plan.batch, m * n);
        if (an->requires_grad) {
          // dA = dY * B^T per slice, then reduce over broadcast batch axes.
          std::vector<S> da(plan.batch * m * k);
          kernels::matmul(o.grad.data(), bn->value.data(), da.data(),
                          dy_off.data(), plan.b_off.data(), plan.batch, m, n, k,
                          false, true, false);
          an->ensure_grad();
          detail::sum_to_shape(da.data(), a_full, an->grad.data(), an->shape);
        }
        if (bn->requires_grad) {
          // dB = A^T * dY per slice.
          std::vector<S> db(plan.batch * k * n);
          kernels::matmul(an->value.data(), o.grad.data(), db.data(),
                          plan.a_off.data(), dy_off.data(), plan.batch, k, m, n,
                          true, false, false);
          bn->ensure_grad();
          detail::sum_to_shape(db.data(), b_full, bn->grad.data(), bn->shape);
        }
      });
}

namespace {

template <class S>
TensorT<S> softmax_last(const TensorT<S>& a) {
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.size() / cols;
  std::vector<S> out(a.size());
  kernels::softmax_rows(a.data().data(), out.data(), rows, cols);
  return make_op<S>(a.shape(), std::move(out), {a},
                    [an = a.node(), rows, cols](NodeT<S>& o) {
                      an->ensure_grad();
                      for (std::size_t r = 0; r < rows; ++r) {
                        const S* y = o.value.data() + r * cols;
                        const S* g = o.grad.data() + r * cols;
                        S dot = S(0);
                        for (std::size_t j = 0; j < cols; ++j) dot += g[j] * y[j];
                        S* ga = an->grad.data() + r * cols;
                        for (std::size_t j = 0; j < cols; ++j)
                          ga[j] += y[j] * (g[j] - dot);
                      }
                    });
}

}  // namespace

template <class S>
TensorT<S> softmax(const TensorT<S>& a, std::size_t axis) {
  const std::size_t rank = a.ndim();
  if (axis >= rank) {
    throw ShapeError("softmax: axis out of range for " + shape_str(a.shape()));
  }
  if (axis == rank - 1) return softmax_last(a);
  std::vector<std::size_t> inverse;
  TensorT<S> moved = move_axis_last(a, axis, &inverse);
  return permute(softmax_last(moved), inverse);
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

template <class S>
void backward(const TensorT<S>& root) {
  if (!root.defined()) throw ValueError("backward: undefined tensor");
  auto r = root.node();
  if (r->numel() != 1) {
    throw ShapeError("backward: root must be scalar, got " + shape_str(r->shape));
  }
  if (r->backward_done) {
    throw ValueError("backward: graph already consumed by a previous backward pass");
  }
  if (!r->requires_grad) {
    r->backward_done = true;
    return;
  }
  // Post-order DFS; parents precede children in `order`.
  std::vector<NodeT<S>*> order;
  std::unordered_set<NodeT<S>*> visited;
  std::vector<std::pair<NodeT<S>*, std::size_t>> stack;
  stack.emplace_back(r.get(), 0);
  visited.insert(r.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeT<S>* p = node->parents[next].get();
      ++next;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  r->ensure_grad();
  r->grad[0] = S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT<S>* node = *it;
    if (node->backprop) node->backprop(*node);
  }
  // Free the tape; leaves keep their grads, interior nodes are consumed.
  for (NodeT<S>* node : order) {
    if (!node->leaf) {
      node->backward_done = true;
      node->backprop = nullptr;
      node->parents.clear();
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
  r->backward_done = true;
}

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

namespace {

inline double rel_err(double a, double n) {
  const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
  return std::abs(a - n) / denom;
}

}  // namespace

template <class S>
GradCheckReport grad_check(const std::function<TensorT<S>(const TensorT<S>&)>& f,
                           const TensorT<S>& x, double tol, double step) {
  TensorT<S> tracked = x.clone();
  tracked.set_requires_grad(true);
  TensorT<S> y = f(tracked);
  if (y.size() != 1) throw ShapeError("grad_check: f must be scalar-valued");
  if (!std::isfinite(static_cast<double>(y.item()))) {
    throw ValueError("grad_check: non-finite f(x)");
  }
  backward(y);
  std::vector<double> analytic(x.size(), 0.0);
  if (tracked.has_grad()) {
    auto g = tracked.grad();
    for (std::size_t i = 0; i < g.size(); ++i) analytic[i] = g[i];
  }

  TensorT<S> probe = x.clone();
  probe.set_requires_grad(false);
  auto buf = probe.mutable_data();
  GradCheckReport report;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const S orig = buf[i];
    buf[i] = orig + static_cast<S>(step);
    const double fp = f(probe).item();
    buf[i] = orig - static_cast<S>(step);
    const double fm = f(probe).item();
    buf[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw ValueError("grad_check: non-finite f(x) during perturbation");
    }
    const double numeric = (fp - fm) / (2.0 * step);
    report.max_rel_err = std::max(report.max_rel_err, rel_err(analytic[i], numeric));
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

template <class S>
GradCheckReport grad_check_params(const std::function<TensorT<S>()>& f,
                                  ParamStore<S>& params, double tol, double step,
                                  std::size_t coord_stride) {
  if (coord_stride == 0) coord_stride = 1;
  params.zero_grads();
  TensorT<S> y = f();
  if (y.size() != 1) throw ShapeError("grad_check_params: f must be scalar-valued");
  if (!std::isfinite(static_cast<double>(y.item()))) {
    throw ValueError("grad_check_params: non-finite f()");
  }
  backward(y);
  GradCheckReport report;
  for (auto& entry : params.entries()) {
    TensorT<S> t = entry.tensor;
    std::vector<double> analytic(t.size(), 0.0);
    if (t.has_grad()) {
      auto g = t.grad();
      for (std::size_t i = 0; i < g.size(); ++i) analytic[i] = g[i];
    }
    auto buf = t.mutable_data();
    for (std::size_t i = 0; i < buf.size(); i += coord_stride) {
      const S orig = buf[i];
      buf[i] = orig + static_cast<S>(step);
      const double fp = f().item();
      buf[i] = orig - static_cast<S>(step);
      const double fm = f().item();
      buf[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw ValueError("grad_check_params: non-finite f() during perturbation");
      }
      const double numeric = (fp - fm) / (2.0 * step);
      report.max_rel_err =
          std::max(report.max_rel_err, rel_err(analytic[i], numeric));
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

// ---------------------------------------------------------------------------
// ParamStore
// ---------------------------------------------------------------------------

template <class S>
void ParamStore<S>::add(std::string name, const TensorT<S>& t) {
  if (!t.defined() || !t.requires_grad()) {
    throw ValueError("ParamStore: '" + name + "' must be a tracked leaf tensor");
  }
  for (const auto& e : entries_) {
    if (e.name == name) throw ValueError("ParamStore: duplicate name '" + name + "'");
  }
  entries_.push_back({std::move(name), t});
}

template <class S>
TensorT<S>* ParamStore<S>::find(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

template <class S>
std::size_t ParamStore<S>::total_params() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

template <class S>
void ParamStore<S>::zero_grads() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define SRLITE_INSTANTIATE_TENSOR(S)                                               \
  template class TensorT<S>;                                                       \
  template class ParamStore<S>;                                                    \
  template TensorT<S> detail::make_op<S>(Shape, std::vector<S>,                    \
                                         const std::vector<TensorT<S>>&,           \
                                         std::function<void(detail::NodeT<S>&)>);  \
  template void detail::sum_to_shape<S>(const S*, const Shape&, S*, const Shape&); \
  template TensorT<S> add<S>(const TensorT<S>&, const TensorT<S>&);                \
  template TensorT<S> sub<S>(const TensorT<S>&, const TensorT<S>&);                \
  template TensorT<S> mul<S>(const TensorT<S>&, const TensorT<S>&);                \
  template TensorT<S> neg<S>(const TensorT<S>&);                                   \
  template TensorT<S> scale<S>(const TensorT<S>&, S);                              \
  template TensorT<S> add_scalar<S>(const TensorT<S>&, S);                         \
  template TensorT<S> add_broadcast<S>(const TensorT<S>&, const TensorT<S>&);      \
  template TensorT<S> reshape<S>(const TensorT<S>&, Shape);                        \
  template TensorT<S> gather<S>(const TensorT<S>&, Shape, std::vector<std::size_t>); \
  template TensorT<S> permute<S>(const TensorT<S>&, const std::vector<std::size_t>&); \
  template TensorT<S> slice<S>(const TensorT<S>&, const std::vector<std::size_t>&, \
                               const std::vector<std::size_t>&);                   \
  template TensorT<S> pad<S>(const TensorT<S>&, const std::vector<std::size_t>&,   \
                             const std::vector<std::size_t>&);                     \
  template TensorT<S> concat<S>(const std::vector<TensorT<S>>&, std::size_t);      \
  template TensorT<S> sum_all<S>(const TensorT<S>&);                               \
  template TensorT<S> mean_all<S>(const TensorT<S>&);                              \
  template TensorT<S> mean_axis<S>(const TensorT<S>&, std::size_t);                \
  template TensorT<S> variance_axis<S>(const TensorT<S>&, std::size_t);            \
  template TensorT<S> matmul<S>(const TensorT<S>&, const TensorT<S>&);             \
  template TensorT<S> softmax<S>(const TensorT<S>&, std::size_t);                  \
  template void backward<S>(const TensorT<S>&);                                    \
  template GradCheckReport grad_check<S>(                                          \
      const std::function<TensorT<S>(const TensorT<S>&)>&, const TensorT<S>&,      \
      double, double);                                                             \
  template GradCheckReport grad_check_params<S>(                                   \
      const std::function<TensorT<S>()>&, ParamStore<S>&, double, double,          \
      std::size_t);

SRLITE_INSTANTIATE_TENSOR(float)
SRLITE_INSTANTIATE_TENSOR(double)

#undef SRLITE_INSTANTIATE_TENSOR

}  // namespace srlite
