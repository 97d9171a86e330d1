#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "structnet/network.hpp"
#include "test_util.hpp"

using namespace structnet;
using testutil::random_matrix;

namespace {

Network chain(const std::vector<Index>& dims, Activation last_act,
              const std::string& prefix = "w") {
  Network net;
  for (std::size_t i = 1; i < dims.size(); ++i) {
    LayerSpec l;
    l.in_dim = dims[i - 1];
    l.out_dim = dims[i];
    l.activation =
        (i + 1 == dims.size()) ? last_act : Activation::Sigmoid;
    l.param_id = prefix + std::to_string(i);
    net.layers.push_back(l);
  }
  net.validate();
  return net;
}

}  // namespace

TEST_CASE("forward with zero parameters") {
  Network net = chain({3, 4, 2}, Activation::Sigmoid);
  ParamStore store;
  net.register_params(store);

  Rng rng(1);
  const Matrix x = random_matrix(3, 5, rng, -1.0, 1.0);

  const Matrix out = forward(net, store, x).output();
  CHECK((out.array() == 0.5).all());

  Network tanh_net = chain({3, 4, 2}, Activation::Tanh);
  ParamStore store2;
  tanh_net.register_params(store2);
  const Matrix out2 = forward(tanh_net, store2, x).output();
  CHECK((out2.array() == 0.0).all());
}

TEST_CASE("forward single unit") {
  Network net = chain({1, 1}, Activation::Sigmoid);
  ParamStore store;
  net.register_params(store);
  store.at("w1").W(0, 0) = 1.0;

  Matrix x(1, 1);
  x << 0.0;
  CHECK(forward(net, store, x).output()(0, 0) == 0.5);
}

TEST_CASE("forward rejects wrong input dim") {
  Network net = chain({3, 2}, Activation::Sigmoid);
  ParamStore store;
  net.register_params(store);
  Matrix x = Matrix::Zero(4, 1);
  CHECK_THROWS_AS(forward(net, store, x), ConfigError);
}

TEST_CASE("forward is pure") {
  Network net = chain({4, 3, 2}, Activation::Tanh);
  ParamStore store;
  net.register_params(store);
  Rng rng(2);
  init_params(store, rng);
  const Matrix x = random_matrix(4, 7, rng, 0.0, 1.0);
  const Matrix a = forward(net, store, x).output();
  const Matrix b = forward(net, store, x).output();
  CHECK(a == b);
}

TEST_CASE("backward of zero loss gradient is zero") {
  Network net = chain({3, 4, 2}, Activation::Sigmoid);
  ParamStore store;
  net.register_params(store);
  Rng rng(3);
  init_params(store, rng);

  const Matrix x = random_matrix(3, 5, rng, 0.0, 1.0);
  const ForwardCache cache = forward(net, store, x);
  const GradMap grads = backward(net, store, cache, Matrix::Zero(2, 5));
  for (const auto& [id, g] : grads) {
    CHECK(g.dW.isZero(0.0));
    CHECK(g.db.isZero(0.0));
  }
}

TEST_CASE("backward matches finite differences") {
  Network net = chain({4, 5, 3, 2}, Activation::Tanh);
  ParamStore store;
  net.register_params(store);
  Rng rng(4);
  init_params(store, rng);

  const Matrix x = random_matrix(4, 6, rng, 0.0, 1.0);
  const Matrix y = random_matrix(2, 6, rng, -1.0, 1.0);

  const ForwardCache cache = forward(net, store, x);
  const GradMap analytic =
      backward(net, store, cache, mse_grad(cache.output(), y));

  auto loss = [&]() { return mse(forward(net, store, x).output(), y); };
  const Scalar err = grad_check(store, store.ids(), loss, analytic);
  CHECK(err < 1e-5);
}

TEST_CASE("grad_check flags a corrupted gradient") {
  Network net = chain({3, 4, 2}, Activation::Sigmoid);
  ParamStore store;
  net.register_params(store);
  Rng rng(5);
  init_params(store, rng);

  const Matrix x = random_matrix(3, 4, rng, 0.0, 1.0);
  const Matrix y = random_matrix(2, 4, rng, 0.0, 1.0);

  const ForwardCache cache = forward(net, store, x);
  GradMap corrupted =
      backward(net, store, cache, mse_grad(cache.output(), y));
  for (auto& [id, g] : corrupted) {
    g.dW *= 1.01;
    g.db *= 1.01;
  }
  auto loss = [&]() { return mse(forward(net, store, x).output(), y); };
  CHECK(grad_check(store, store.ids(), loss, corrupted) > 1e-3);
}

TEST_CASE("grad_check is near exact on a quadratic loss") {
  // Central differences are exact for quadratics up to rounding.
  ParamStore store;
  store.add_block("q", 3, 2);
  Rng rng(6);
  testutil::fill_uniform(store.at("q").W, rng, -1.0, 1.0);

  GradMap analytic;
  analytic["q"].dW = 2.0 * store.at("q").W;
  analytic["q"].db = 2.0 * store.at("q").b;

  auto loss = [&]() {
    return store.at("q").W.squaredNorm() + store.at("q").b.squaredNorm();
  };
  CHECK(grad_check(store, {"q"}, loss, analytic) < 1e-9);
}

TEST_CASE("near-linear chain gradient is the product of weights") {
  // 1x1 tanh layers with a tiny input behave linearly, so dOut/dW1 is the
  // product of the downstream weights times the input.
  Network net;
  for (int i = 1; i <= 3; ++i) {
    LayerSpec l;
    l.in_dim = 1;
    l.out_dim = 1;
    l.activation = Activation::Tanh;
    l.param_id = "w" + std::to_string(i);
    net.layers.push_back(l);
  }
  net.validate();
  ParamStore store;
  net.register_params(store);
  store.at("w1").W(0, 0) = 0.4;
  store.at("w2").W(0, 0) = 0.5;
  store.at("w3").W(0, 0) = 0.6;

  Matrix x(1, 1);
  x << 1e-6;
  const ForwardCache cache = forward(net, store, x);
  Matrix one(1, 1);
  one << 1.0;
  const GradMap grads = backward(net, store, cache, one);
  CHECK(grads.at("w1").dW(0, 0) ==
        doctest::Approx(0.5 * 0.6 * 1e-6).epsilon(1e-6));
  CHECK(grads.at("w3").db(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("shared block accumulates gradients from both layers") {
  // The same 3->3 block used twice in one chain.
  Network net;
  for (int i = 0; i < 2; ++i) {
    LayerSpec l;
    l.in_dim = 3;
    l.out_dim = 3;
    l.activation = Activation::Sigmoid;
    l.param_id = "shared";
    net.layers.push_back(l);
  }
  net.validate();
  ParamStore store;
  net.register_params(store);
  Rng rng(7);
  init_params(store, rng);

  const Matrix x = random_matrix(3, 4, rng, 0.0, 1.0);
  const Matrix y = random_matrix(3, 4, rng, 0.0, 1.0);
  const ForwardCache cache = forward(net, store, x);
  const GradMap analytic =
      backward(net, store, cache, mse_grad(cache.output(), y));
  CHECK(analytic.size() == 1);

  auto loss = [&]() { return mse(forward(net, store, x).output(), y); };
  CHECK(grad_check(store, {"shared"}, loss, analytic) < 1e-5);
}

TEST_CASE("tying is aliasing through the store") {
  Network a = chain({3, 2}, Activation::Sigmoid, "tied");
  Network b = chain({3, 2}, Activation::Tanh, "tied");
  ParamStore store;
  a.register_params(store);
  b.register_params(store);  // same block, no duplicate
  CHECK(store.ids().size() == 1);
  CHECK(&store.at(a.layers[0].param_id) == &store.at(b.layers[0].param_id));

  // A write through either route is visible to both networks.
  store.at("tied1").W.setConstant(2.0);
  Matrix x = Matrix::Ones(3, 1);
  const Matrix out_a = forward(a, store, x).output();
  CHECK(out_a(0, 0) == sigmoid(Matrix::Constant(1, 1, 6.0))(0, 0));
}

TEST_CASE("register_params rejects conflicting shapes") {
  Network a = chain({3, 2}, Activation::Sigmoid, "t");
  Network b = chain({4, 2}, Activation::Sigmoid, "t");
  ParamStore store;
  a.register_params(store);
  CHECK_THROWS_AS(b.register_params(store), ConfigError);
}

TEST_CASE("corrupt level 0 and 1") {
  Rng rng(8);
  Matrix x = random_matrix(10, 10, rng, 0.1, 1.0);

  Corruptor none(0.0, Rng(1));
  CHECK(none.corrupt(x) == x);

  Corruptor all(1.0, Rng(1));
  CHECK(all.corrupt(x).isZero(0.0));

  CHECK_THROWS_AS(Corruptor(1.5, Rng(1)), ConfigError);
}

TEST_CASE("corrupt zeroes the expected fraction and keeps survivors") {
  Rng rng(9);
  Matrix x = random_matrix(100, 1000, rng, 0.5, 1.0);  // no exact zeros
  Corruptor c(0.2, Rng(77));
  const Matrix corrupted = c.corrupt(x);

  Index zeros = 0;
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index col = 0; col < x.cols(); ++col) {
      if (corrupted(r, col) == 0.0) {
        ++zeros;
      } else {
        CHECK(corrupted(r, col) == x(r, col));  // survivors bit-exact
      }
    }
  }
  const Scalar frac =
      static_cast<Scalar>(zeros) / static_cast<Scalar>(x.size());
  CHECK(frac > 0.19);
  CHECK(frac < 0.21);

  // Fresh noise every call.
  CHECK(c.corrupt(x) != corrupted);
}

TEST_CASE("init_params is deterministic and bounded") {
  auto build = [](ParamStore& store) {
    store.add_block("a", 4, 3);
    store.add_block("b", 2, 4);
  };
  ParamStore s1, s2;
  build(s1);
  build(s2);
  Rng r1(123), r2(123);
  init_params(s1, r1);
  init_params(s2, r2);
  CHECK(s1.at("a").W == s2.at("a").W);
  CHECK(s1.at("b").W == s2.at("b").W);
  CHECK(s1.at("a").b.isZero(0.0));

  // Paper-scale block: every entry within the fan-based bound.
  ParamStore big;
  big.add_block("w", 1025, 2500);
  Rng r3(5);
  init_params(big, r3);
  const Scalar bound = std::sqrt(6.0 / (1025.0 + 2500.0));
  CHECK(big.at("w").W.maxCoeff() <= bound);
  CHECK(big.at("w").W.minCoeff() >= -bound);
  CHECK(big.at("w").W.cwiseAbs().maxCoeff() > 0.9 * bound);
}

TEST_CASE("param store rejects duplicates and unknown ids") {
  ParamStore store;
  store.add_block("x", 2, 2);
  CHECK_THROWS_AS(store.add_block("x", 2, 2), ConfigError);
  CHECK_THROWS_AS(store.at("nope"), ConfigError);
  CHECK_THROWS_AS(store.velocity("nope"), ConfigError);
}
