#include <doctest.h>

#include <cstdio>

#include "tga/gradcheck.hpp"
#include "tga/tape.hpp"

using namespace tga;

TEST_CASE("matmul against identity and shape errors") {
  Tape<double> t;
  Mat<double> I(3, 3);
  for (int i = 0; i < 3; ++i) I(i, i) = 1.0;
  Mat<double> X(3, 2);
  for (int i = 0; i < 6; ++i) X.a[i] = i + 1;
  auto xi = t.input(X);
  auto out = t.matmul(t.input(I), xi);
  for (int i = 0; i < 6; ++i) CHECK(t.val(out).a[i] == X.a[i]);

  Tape<double> t2;
  auto a = t2.input(Mat<double>(2, 3));
  auto b = t2.input(Mat<double>(2, 3));
  CHECK_THROWS_WITH_AS(t2.matmul(a, b), doctest::Contains("[2x3]"), ShapeError);
}

TEST_CASE("row_softmax of a constant row is uniform and sums to one") {
  Tape<double> t;
  auto out = t.row_softmax(t.input(Mat<double>(1, 3)));
  for (int j = 0; j < 3; ++j) CHECK(t.val(out)(0, j) == doctest::Approx(1.0 / 3));

  Rng rng(5);
  Mat<double> X(40, 7);
  for (auto& v : X.a) v = rng.uniform(-30, 30);
  Tape<double> t3;
  auto sm = t3.row_softmax(t3.input(X));
  for (int i = 0; i < 40; ++i) {
    double sum = 0;
    for (int j = 0; j < 7; ++j) {
      CHECK(t3.val(sm)(i, j) >= 0.0);
      sum += t3.val(sm)(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("layer_norm pre-affine rows have mean 0 and variance 1; constant rows survive") {
  Rng rng(6);
  Mat<double> X(20, 16);
  for (auto& v : X.a) v = rng.uniform(-5, 5);
  for (int j = 0; j < 16; ++j) X(7, j) = 3.25;  // constant row, epsilon path
  Tape<double> t;
  Mat<double> ones(1, 16);
  ones.fill(1.0);
  auto out = t.layer_norm(t.input(X), t.input(ones), t.input(Mat<double>(1, 16)));
  for (int i = 0; i < 20; ++i) {
    double mean = 0, var = 0;
    for (int j = 0; j < 16; ++j) mean += t.val(out)(i, j);
    mean /= 16;
    for (int j = 0; j < 16; ++j) {
      const double d = t.val(out)(i, j) - mean;
      var += d * d;
    }
    var /= 16;
    CHECK(std::abs(mean) < 1e-5);
    if (i != 7) CHECK(std::abs(var - 1.0) < 1e-4);
  }
  for (int j = 0; j < 16; ++j) CHECK(t.val(out)(7, j) == doctest::Approx(0.0));
}

TEST_CASE("backward of a linear map produces the outer-product gradient") {
  // loss = sum(W x): dW[i][j] = x[j]
  ParameterStore<double> ps(1);
  Rng rng(3);
  const int wid = ps.add_xavier("W", 4, 3, rng);
  Mat<double> x(3, 1);
  x(0, 0) = 1.5;
  x(1, 0) = -2.0;
  x(2, 0) = 0.25;

  Tape<double> t;
  auto loss = t.sum_all(t.matmul(t.param(ps, wid), t.input(x)));
  ps.zero_grads();
  t.backward(loss, &ps.grads);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(ps.grad(wid)(i, j) == doctest::Approx(x(j, 0)));
}

TEST_CASE("parameters not on the loss path get zero gradient") {
  ParameterStore<double> ps(1);
  Rng rng(4);
  const int used = ps.add_xavier("used", 2, 2, rng);
  const int unused = ps.add_xavier("unused", 2, 2, rng);
  Tape<double> t;
  auto loss = t.sum_all(t.param(ps, used));
  ps.zero_grads();
  t.backward(loss, &ps.grads);
  for (double g : ps.grad(used).a) CHECK(g == 1.0);
  for (double g : ps.grad(unused).a) CHECK(g == 0.0);
}

TEST_CASE("backward usage errors") {
  Tape<double> t;
  CHECK_THROWS_AS(t.backward(0, nullptr), std::logic_error);
  auto a = t.input(Mat<double>(2, 2));
  CHECK_THROWS_AS(t.backward(a, nullptr), std::logic_error);  // non-scalar root
  auto s = t.sum_all(a);
  t.backward(s, nullptr);
  CHECK_THROWS_AS(t.backward(s, nullptr), std::logic_error);  // reuse
}

TEST_CASE("grad_check on a quadratic is exact to 1e-9") {
  ParameterStore<double> ps(1);
  Rng rng(8);
  const int wid = ps.add_xavier("theta", 5, 3, rng);
  auto loss_value = [&]() {
    Tape<double> t;
    auto w = t.param(ps, wid);
    return t.val(t.sum_all(t.mul(w, w)))(0, 0);
  };
  auto loss_grad = [&]() {
    Tape<double> t;
    auto w = t.param(ps, wid);
    auto l = t.sum_all(t.mul(w, w));
    const double v = t.val(l)(0, 0);
    t.backward(l, &ps.grads);
    return v;
  };
  auto rep = grad_check<double>(loss_value, loss_grad, ps, 40, 1e-4);
  CHECK(!rep.nondeterministic);
  CHECK(rep.max_rel_error < 1e-9);
}

TEST_CASE("grad_check flags a nondeterministic closure") {
  ParameterStore<double> ps(1);
  ps.add("theta", 1, 1);
  int counter = 0;
  auto loss_value = [&]() { return static_cast<double>(++counter); };
  auto rep = grad_check<double>(loss_value, loss_value, ps, 4, 1e-4);
  CHECK(rep.nondeterministic);
}

TEST_CASE("slot primitives match per-node reference loops") {
  Rng rng(17);
  const int L = 5, S = 6, dk = 3;
  Mat<double> K(L * S, dk), Q(L, dk), A(L, S), V(L * S, 4);
  for (auto& v : K.a) v = rng.uniform(-1, 1);
  for (auto& v : Q.a) v = rng.uniform(-1, 1);
  for (auto& v : A.a) v = rng.uniform(0, 1);
  for (auto& v : V.a) v = rng.uniform(-1, 1);
  Tape<double> t;
  auto scores = t.slot_scores(t.input(K), t.input(Q), S);
  auto mixed = t.slot_weighted_sum(t.input(A), t.input(V));
  for (int c = 0; c < L; ++c) {
    for (int s = 0; s < S; ++s) {
      double want = 0;
      for (int j = 0; j < dk; ++j) want += K(c * S + s, j) * Q(c, j);
      CHECK(t.val(scores)(c, s) == doctest::Approx(want));
    }
    for (int j = 0; j < 4; ++j) {
      double want = 0;
      for (int s = 0; s < S; ++s) want += A(c, s) * V(c * S + s, j);
      CHECK(t.val(mixed)(c, j) == doctest::Approx(want));
    }
  }
}

TEST_CASE("composite tape expression passes grad_check") {
  // Exercises gather/scatter/concat/softmax/layer_norm/slot ops together.
  ParameterStore<double> ps(1);
  Rng rng(21);
  const int d = 4;
  const int table = ps.add_embedding("table", 6, d, rng);
  const int w = ps.add_xavier("w", d, 2 * d, rng);
  const int b = ps.add_zeros("b", 1, d);
  const int g = ps.add("g", 1, 2 * d);
  ps.value(g).fill(1.0);
  const int beta = ps.add_zeros("beta", 1, 2 * d);

  auto build = [&](Tape<double>& t) {
    auto tab = t.param(ps, table);
    auto x1 = t.gather_rows(tab, {0, 2, 4});
    auto x2 = t.gather_rows(tab, {1, 3, 5});
    auto x = t.concat_cols({x1, t.sub(x2, x1)});
    auto ln = t.layer_norm(x, t.param(ps, g), t.param(ps, beta));
    auto y = t.add_rowvec(t.matmul_nt(ln, t.param(ps, w)), t.param(ps, b));
    auto grid = t.scatter_rows({y}, {{0, 2, 5}}, 6, d);
    std::vector<uint8_t> mask(6, 0);
    mask[0] = mask[2] = mask[5] = 1;
    Mat<double> q(1, d);
    for (int j = 0; j < d; ++j) q(0, j) = 0.3 * (j + 1);
    auto scores = t.slot_scores(grid, t.input(q), 6);
    auto alpha = t.masked_row_softmax(scores, mask);
    auto ctx = t.slot_weighted_sum(alpha, grid);
    return t.sum_all(t.sigmoid(t.relu(ctx)));
  };
  auto loss_value = [&]() {
    Tape<double> t;
    return t.val(build(t))(0, 0);
  };
  auto loss_grad = [&]() {
    Tape<double> t;
    auto l = build(t);
    const double v = t.val(l)(0, 0);
    t.backward(l, &ps.grads);
    return v;
  };
  auto rep = grad_check<double>(loss_value, loss_grad, ps, 120, 1e-5);
  CHECK(!rep.nondeterministic);
  CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("checkpoint round-trips values, seed, and manifest") {
  ParameterStore<float> ps(0xfeed);
  Rng rng(30);
  ps.add_xavier("a.W", 3, 4, rng);
  ps.add_embedding("b.table", 5, 2, rng);
  const std::string path = "test_ckpt.bin";
  ps.save(path);

  ParameterStore<float> ps2(0);
  Rng rng2(31);
  ps2.add_xavier("a.W", 3, 4, rng2);
  ps2.add_embedding("b.table", 5, 2, rng2);
  ps2.load(path);
  CHECK(ps2.seed() == 0xfeed);
  for (int p = 0; p < ps.count(); ++p)
    for (size_t i = 0; i < ps.value(p).a.size(); ++i)
      CHECK(ps.value(p).a[i] == ps2.value(p).a[i]);

  ParameterStore<float> bad(0);
  Rng rng3(32);
  bad.add_xavier("a.W", 3, 5, rng3);  // wrong shape
  bad.add_embedding("b.table", 5, 2, rng3);
  CHECK_THROWS_WITH_AS(bad.load(path), doctest::Contains("shape mismatch"), CheckpointError);

  ParameterStore<double> wrong_precision(0);
  Rng rng4(33);
  wrong_precision.add_xavier("a.W", 3, 4, rng4);
  wrong_precision.add_embedding("b.table", 5, 2, rng4);
  CHECK_THROWS_AS(wrong_precision.load(path), CheckpointError);
  std::remove(path.c_str());
}

TEST_CASE("duplicate parameter names are rejected") {
  ParameterStore<double> ps(1);
  ps.add("x", 1, 1);
  CHECK_THROWS_AS(ps.add("x", 2, 2), std::invalid_argument);
}
