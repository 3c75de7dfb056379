#include "srlite/init.hpp"

namespace srlite {

template <class S>
TensorT<S> trunc_normal_param(Shape shape, Rng& rng, double stddev) {
  std::vector<S> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<S>(rng.trunc_normal(stddev));
  return TensorT<S>::from_vector(std::move(shape), std::move(v), true);
}

template <class S>
TensorT<S> const_param(Shape shape, S value) {
  return TensorT<S>::full(std::move(shape), value, true);
}

template TensorT<float> trunc_normal_param<float>(Shape, Rng&, double);
template TensorT<double> trunc_normal_param<double>(Shape, Rng&, double);
template TensorT<float> const_param<float>(Shape, float);
template TensorT<double> const_param<double>(Shape, double);

}  // namespace srlite
