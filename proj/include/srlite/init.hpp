#pragma once

#include "srlite/rng.hpp"
#include "srlite/tensor.hpp"

namespace srlite {

// Truncated-normal weight init (resampled beyond two standard deviations),
// tracked for gradients.
template <class S>
TensorT<S> trunc_normal_param(Shape shape, Rng& rng, double stddev = 0.02);

// Constant-filled tracked parameter (zero biases, layer-norm gamma/beta).
template <class S>
TensorT<S> const_param(Shape shape, S value);

}  // namespace srlite
