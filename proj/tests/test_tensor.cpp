#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "srlite/rng.hpp"
#include "srlite/tensor.hpp"

using srlite::backward;
using srlite::Shape;
using srlite::Tensor;
using srlite::TensorD;

namespace {

TensorD randn(Shape shape, srlite::Rng& rng, double sigma = 1.0) {
  std::vector<double> v(srlite::shape_numel(shape));
  for (auto& x : v) x = rng.normal() * sigma;
  return TensorD::from_vector(std::move(shape), std::move(v));
}

// Independent batched matmul: direct index arithmetic, no shared code with
// the library kernel.
std::vector<double> matmul_oracle(const std::vector<double>& a, const Shape& as,
                                  const std::vector<double>& b, const Shape& bs) {
  const std::size_t m = as[as.size() - 2], k = as[as.size() - 1];
  const std::size_t n = bs[bs.size() - 1];
  const std::size_t ra = as.size() - 2, rb = bs.size() - 2;
  const std::size_t rank = std::max(ra, rb);
  std::vector<std::size_t> batch(rank, 1), ea(rank, 1), eb(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    if (i + ra >= rank) ea[i] = as[i + ra - rank];
    if (i + rb >= rank) eb[i] = bs[i + rb - rank];
    batch[i] = std::max(ea[i], eb[i]);
  }
  std::size_t nb = 1;
  for (auto e : batch) nb *= e;
  std::vector<double> c(nb * m * n, 0.0);
  std::vector<std::size_t> coord(rank, 0);
  for (std::size_t sl = 0; sl < nb; ++sl) {
    std::size_t oa = 0, ob = 0;
    for (std::size_t i = 0; i < rank; ++i) {
      oa = oa * ea[i] + (ea[i] == 1 ? 0 : coord[i]);
      ob = ob * eb[i] + (eb[i] == 1 ? 0 : coord[i]);
    }
    oa *= m * k;
    ob *= k * n;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c2 = 0; c2 < n; ++c2) {
        double acc = 0.0;
        for (std::size_t kk = 0; kk < k; ++kk)
          acc += a[oa + r * k + kk] * b[ob + kk * n + c2];
        c[sl * m * n + r * n + c2] = acc;
      }
    for (std::size_t i = rank; i-- > 0;) {
      if (++coord[i] < batch[i]) break;
      coord[i] = 0;
    }
  }
  return c;
}

void expect_grad_ok(const std::function<TensorD(const TensorD&)>& f,
                    const TensorD& x, double tol = 1e-6) {
  auto rep = srlite::grad_check<double>(f, x, tol);
  INFO("max_rel_err = " << rep.max_rel_err);
  CHECK(rep.pass);
}

}  // namespace

TEST_CASE("factories and element access") {
  auto z = Tensor::zeros({2, 3});
  CHECK(z.size() == 6);
  CHECK(z.at({1, 2}) == 0.0f);
  auto f = Tensor::full({2, 2}, 3.5f);
  CHECK(f.at({0, 1}) == 3.5f);
  auto v = Tensor::from_vector({2, 2}, {1, 2, 3, 4});
  CHECK(v.at({1, 0}) == 3.0f);
  CHECK(Tensor::scalar(7.0f).item() == 7.0f);
  CHECK_THROWS_AS(Tensor::from_vector({2, 2}, {1, 2, 3}), srlite::ShapeError);
  CHECK_THROWS_AS(v.item(), srlite::ShapeError);
  CHECK_THROWS_AS(v.at({0}), srlite::ShapeError);
}

TEST_CASE("matmul matches hand-worked values") {
  auto a = TensorD::from_vector({2, 2}, {1, 2, 3, 4});
  auto b = TensorD::from_vector({2, 2}, {5, 6, 7, 8});
  auto c = srlite::matmul(a, b);
  CHECK(c.at({0, 0}) == doctest::Approx(19).epsilon(1e-12));
  CHECK(c.at({0, 1}) == doctest::Approx(22).epsilon(1e-12));
  CHECK(c.at({1, 0}) == doctest::Approx(43).epsilon(1e-12));
  CHECK(c.at({1, 1}) == doctest::Approx(50).epsilon(1e-12));

  auto eye = TensorD::from_vector({2, 2}, {1, 0, 0, 1});
  auto ai = srlite::matmul(a, eye);
  for (std::size_t i = 0; i < 4; ++i) CHECK(ai.data()[i] == a.data()[i]);
}

TEST_CASE("matmul agrees with index oracle across broadcast shapes") {
  struct Case {
    Shape as, bs;
  };
  const Case cases[] = {
      {{3, 4}, {4, 5}},
      {{2, 3, 4}, {4, 5}},
      {{3, 4}, {2, 4, 5}},
      {{2, 1, 3, 4}, {3, 4, 5}},
      {{5, 1, 2, 3}, {1, 4, 3, 2}},
  };
  srlite::Rng rng(99);
  for (const auto& cs : cases) {
    auto a = randn(cs.as, rng);
    auto b = randn(cs.bs, rng);
    auto got = srlite::matmul(a, b);
    auto want = matmul_oracle(std::vector<double>(a.data().begin(), a.data().end()),
                              cs.as,
                              std::vector<double>(b.data().begin(), b.data().end()),
                              cs.bs);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(got.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(srlite::matmul(TensorD::zeros({2, 3}), TensorD::zeros({2, 3})),
                  srlite::ShapeError);
  CHECK_THROWS_AS(srlite::matmul(TensorD::zeros({2, 2, 3}), TensorD::zeros({3, 3, 2})),
                  srlite::ShapeError);
}

TEST_CASE("softmax hand values and large-offset stability") {
  auto x = TensorD::from_vector({2}, {0.0, std::log(3.0)});
  auto y = srlite::softmax(x, 0);
  CHECK(y.at({0}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(y.at({1}) == doctest::Approx(0.75).epsilon(1e-12));

  auto xs = TensorD::from_vector({2}, {1000.0, 1000.0 + std::log(3.0)});
  auto ys = srlite::softmax(xs, 0);
  CHECK(std::isfinite(ys.at({0})));
  CHECK(ys.at({0}) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(ys.at({1}) == doctest::Approx(0.75).epsilon(1e-9));

  // softmax over a middle axis sums to one along that axis
  srlite::Rng rng(5);
  auto t = randn({2, 3, 4}, rng);
  auto s = srlite::softmax(t, 1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < 3; ++a) acc += s.at({i, a, j});
      CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("backward through sum of squares") {
  auto x = Tensor::from_vector({3}, {1, 2, 3}, /*requires_grad=*/true);
  auto y = srlite::sum_all(srlite::mul(x, x));
  backward(y);
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == doctest::Approx(2.0f));
  CHECK(x.grad()[1] == doctest::Approx(4.0f));
  CHECK(x.grad()[2] == doctest::Approx(6.0f));
}

TEST_CASE("a tape can be walked exactly once") {
  auto x = Tensor::from_vector({2}, {1, 2}, true);
  auto y = srlite::sum_all(srlite::mul(x, x));
  backward(y);
  CHECK_THROWS_AS(backward(y), srlite::ValueError);

  // leaves stay reusable: a fresh graph over the same leaf works
  auto y2 = srlite::sum_all(x);
  backward(y2);
  CHECK(x.grad()[0] == doctest::Approx(3.0f));  // 2*1 + 1 accumulated

  auto c = Tensor::scalar(4.0f);
  backward(c);  // constant root: no-op success
  CHECK_THROWS_AS(backward(c), srlite::ValueError);
}

TEST_CASE("backward requires a scalar root") {
  auto x = Tensor::from_vector({2}, {1, 2}, true);
  auto y = srlite::mul(x, x);
  CHECK_THROWS_AS(backward(y), srlite::ShapeError);
}

TEST_CASE("detach cuts the graph") {
  auto x = Tensor::from_vector({2}, {3, 4}, true);
  auto y = srlite::sum_all(srlite::mul(x.detach(), x));
  backward(y);
  CHECK(x.grad()[0] == doctest::Approx(3.0f));  // only the tracked factor
  CHECK(x.grad()[1] == doctest::Approx(4.0f));
  CHECK_FALSE(x.detach().requires_grad());
}

TEST_CASE("mutable_data is restricted to leaves") {
  auto x = Tensor::from_vector({2}, {1, 2}, true);
  auto y = srlite::mul(x, x);
  CHECK_THROWS_AS(y.mutable_data(), srlite::ValueError);
  CHECK_THROWS_AS(y.set_requires_grad(false), srlite::ValueError);
  CHECK_NOTHROW(x.mutable_data());
}

TEST_CASE("shape ops roundtrip bit-exactly") {
  srlite::Rng rng(11);
  auto x = randn({2, 3, 4, 5}, rng);

  auto p = srlite::permute(x, {2, 0, 3, 1});
  auto back = srlite::permute(p, {1, 3, 0, 2});
  REQUIRE(back.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.data()[i] == x.data()[i]);

  auto r = srlite::reshape(srlite::reshape(x, {6, 20}), {2, 3, 4, 5});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(r.data()[i] == x.data()[i]);

  auto padded = srlite::pad(x, {0, 1, 2, 0}, {0, 0, 1, 3});
  REQUIRE(padded.shape() == Shape{2, 4, 7, 8});
  auto sliced = srlite::slice(padded, {0, 1, 2, 0}, {2, 3, 4, 5});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(sliced.data()[i] == x.data()[i]);
}

TEST_CASE("concat layouts") {
  auto a = TensorD::from_vector({2, 2}, {1, 2, 3, 4});
  auto b = TensorD::from_vector({2, 3}, {5, 6, 7, 8, 9, 10});
  auto c = srlite::concat<double>({a, b}, 1);
  REQUIRE(c.shape() == Shape{2, 5});
  const double want[] = {1, 2, 5, 6, 7, 3, 4, 8, 9, 10};
  for (std::size_t i = 0; i < 10; ++i) CHECK(c.data()[i] == want[i]);

  auto d = srlite::concat<double>({a, a}, 0);
  REQUIRE(d.shape() == Shape{4, 2});
  CHECK(d.at({2, 0}) == 1.0);
  CHECK_THROWS_AS(srlite::concat<double>({a, b}, 0), srlite::ShapeError);
}

TEST_CASE("reductions") {
  auto x = TensorD::from_vector({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(srlite::sum_all(x).item() == doctest::Approx(21.0));
  CHECK(srlite::mean_all(x).item() == doctest::Approx(3.5));
  auto m0 = srlite::mean_axis(x, 0);
  REQUIRE(m0.shape() == Shape{3});
  CHECK(m0.at({0}) == doctest::Approx(2.5));
  auto m1 = srlite::mean_axis(x, 1);
  REQUIRE(m1.shape() == Shape{2});
  CHECK(m1.at({1}) == doctest::Approx(5.0));
  auto v1 = srlite::variance_axis(x, 1);  // biased: mean of squared deviations
  CHECK(v1.at({0}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("gradients of every op match finite differences (double, 5 seeds)") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    srlite::Rng rng(seed);
    auto x = randn({2, 3, 4}, rng);
    auto w = randn({2, 3, 4}, rng);  // fixed co-operand

    expect_grad_ok([&](const TensorD& t) { return srlite::sum_all(srlite::add(t, w)); }, x);
    expect_grad_ok([&](const TensorD& t) { return srlite::sum_all(srlite::sub(w, t)); }, x);
    expect_grad_ok(
        [&](const TensorD& t) { return srlite::sum_all(srlite::mul(t, srlite::mul(t, w))); },
        x);
    expect_grad_ok([&](const TensorD& t) { return srlite::mean_all(srlite::neg(t)); }, x);
    expect_grad_ok(
        [&](const TensorD& t) { return srlite::sum_all(srlite::scale(t, 2.5)); }, x);
    expect_grad_ok(
        [&](const TensorD& t) { return srlite::sum_all(srlite::add_scalar(t, -1.5)); }, x);

    auto bias = randn({4}, rng);
    expect_grad_ok(
        [&](const TensorD& t) {
          return srlite::sum_all(srlite::mul(srlite::add_broadcast(t, bias),
                                             srlite::add_broadcast(t, bias)));
        },
        x);
    // and through the broadcast operand itself
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::add_broadcast(x, t);
          return srlite::sum_all(srlite::mul(y, y));
        },
        bias);

    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::reshape(t, {6, 4});
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::permute(t, {2, 0, 1});
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::slice(t, {0, 1, 1}, {2, 2, 3});
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::pad(t, {1, 0, 2}, {0, 1, 0});
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::concat<double>({t, srlite::mul(t, t)}, 1);
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);
    expect_grad_ok(
        [&](const TensorD& t) {
          // gather with repeated indices exercises scatter-add accumulation
          auto y = srlite::gather(t, {5}, {0, 0, 3, 7, 3});
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);

    expect_grad_ok([&](const TensorD& t) { return srlite::mean_all(srlite::mul(t, t)); }, x);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::mean_axis(t, 1);
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::variance_axis(t, 2);
          return srlite::sum_all(srlite::mul(y, y));
        },
        x);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::variance_axis(t, 0);
          return srlite::sum_all(y);
        },
        x);

    auto a = randn({2, 3, 4}, rng);
    auto b = randn({4, 5}, rng);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::matmul(t, b);
          return srlite::sum_all(srlite::mul(y, y));
        },
        a);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::matmul(a, t);
          return srlite::sum_all(srlite::mul(y, y));
        },
        b);
    // broadcast on both sides
    auto a2 = randn({2, 1, 3, 4}, rng);
    auto b2 = randn({3, 4, 5}, rng);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::matmul(t, b2);
          return srlite::sum_all(srlite::mul(y, y));
        },
        a2);
    expect_grad_ok(
        [&](const TensorD& t) {
          auto y = srlite::matmul(a2, t);
          return srlite::sum_all(srlite::mul(y, y));
        },
        b2);

    for (std::size_t axis : {0u, 1u, 2u}) {
      expect_grad_ok(
          [&, axis](const TensorD& t) {
            auto y = srlite::softmax(t, axis);
            return srlite::sum_all(srlite::mul(y, y));
          },
          x);
    }
  }
}

namespace {

template <class S>
std::vector<S> widen(const std::vector<float>& v) {
  return std::vector<S>(v.begin(), v.end());
}

std::vector<float> randf(std::size_t n, srlite::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

// Float backward against a double-precision finite-difference reference at
// the same (exactly representable) points. Avoids the cancellation noise of
// single-precision differencing while still exercising the float tape.
template <class Builder>
void check_float_grad(Builder&& build, const Shape& shape, srlite::Rng& rng,
                      double tol = 1e-3) {
  auto vals = randf(srlite::shape_numel(shape), rng);
  auto xf = Tensor::from_vector(shape, std::vector<float>(vals), true);
  auto yf = build(xf);
  backward(yf);
  REQUIRE(xf.has_grad());

  std::vector<double> vd(vals.begin(), vals.end());
  const double h = 1e-5;
  double max_err = 0.0;
  for (std::size_t i = 0; i < vd.size(); ++i) {
    const double orig = vd[i];
    vd[i] = orig + h;
    const double fp = build(TensorD::from_vector(shape, vd)).item();
    vd[i] = orig - h;
    const double fm = build(TensorD::from_vector(shape, vd)).item();
    vd[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = xf.grad()[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    max_err = std::max(max_err, std::abs(analytic - numeric) / denom);
  }
  INFO("max_rel_err = " << max_err);
  CHECK(max_err <= tol);
}

}  // namespace

TEST_CASE("float gradients of every op within 1e-3 of a double reference") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    srlite::Rng rng(seed);
    const Shape sh{2, 3, 4};
    auto wf = randf(24, rng);
    auto biasf = randf(4, rng);
    auto bf = randf(4 * 5, rng);

    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          auto w = srlite::TensorT<S>::from_vector({2, 3, 4}, widen<S>(wf));
          return srlite::sum_all(srlite::add(srlite::mul(t, srlite::mul(t, w)),
                                             srlite::sub(w, t)));
        },
        sh, rng);
    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          return srlite::mean_all(srlite::scale(srlite::neg(t), S(1.7)));
        },
        sh, rng);
    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          auto bias = srlite::TensorT<S>::from_vector({4}, widen<S>(biasf));
          auto y = srlite::add_broadcast(srlite::add_scalar(t, S(0.3)), bias);
          return srlite::sum_all(srlite::mul(y, y));
        },
        sh, rng);
    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          auto y = srlite::permute(srlite::reshape(t, {6, 4}), {1, 0});
          auto s = srlite::slice(y, {1, 2}, {3, 4});
          auto p = srlite::pad(s, {0, 1}, {1, 0});
          auto cat = srlite::concat<S>({p, p}, 1);
          return srlite::sum_all(srlite::mul(cat, cat));
        },
        sh, rng);
    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          auto y = srlite::gather(t, {5}, {0, 0, 3, 7, 3});
          return srlite::sum_all(srlite::mul(y, y));
        },
        sh, rng);
    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          auto m = srlite::mean_axis(t, 1);
          auto v = srlite::variance_axis(t, 2);
          return srlite::add(srlite::sum_all(srlite::mul(m, m)),
                             srlite::sum_all(v));
        },
        sh, rng);
    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          auto b = srlite::TensorT<S>::from_vector({4, 5}, widen<S>(bf));
          auto y = srlite::matmul(t, b);
          return srlite::mean_all(srlite::mul(y, y));
        },
        sh, rng);
    check_float_grad(
        [&]<class S>(const srlite::TensorT<S>& t) {
          auto y = srlite::softmax(t, 2);
          auto w = srlite::TensorT<S>::from_vector({2, 3, 4}, widen<S>(wf));
          return srlite::sum_all(srlite::mul(y, w));
        },
        sh, rng);
  }
}

TEST_CASE("grad accumulates across backward passes until cleared") {
  auto x = Tensor::from_vector({2}, {1, 2}, true);
  auto run = [&] {
    auto y = srlite::sum_all(srlite::mul(x, x));
    backward(y);
  };
  run();
  run();
  CHECK(x.grad()[0] == doctest::Approx(4.0f));  // 2 + 2
  x.zero_grad();
  run();
  CHECK(x.grad()[0] == doctest::Approx(2.0f));
}

TEST_CASE("param store registration and grad check over parameters") {
  srlite::ParamStore<double> params;
  auto w = TensorD::from_vector({2, 2}, {0.5, -0.3, 0.8, 0.1}, true);
  auto b = TensorD::from_vector({2}, {0.05, -0.02}, true);
  params.add("w", w);
  params.add("b", b);
  CHECK(params.total_params() == 6);
  CHECK(params.find("w") != nullptr);
  CHECK(params.find("nope") == nullptr);
  CHECK_THROWS_AS(params.add("w", b), srlite::ValueError);
  CHECK_THROWS_AS(params.add("c", TensorD::zeros({1})), srlite::ValueError);

  auto xin = TensorD::from_vector({3, 2}, {1, 2, 3, 4, 5, 6});
  auto f = [&] {
    auto y = srlite::add_broadcast(srlite::matmul(xin, w), b);
    return srlite::mean_all(srlite::mul(y, y));
  };
  auto rep = srlite::grad_check_params<double>(f, params, 1e-6);
  INFO("max_rel_err = " << rep.max_rel_err);
  CHECK(rep.pass);
}
