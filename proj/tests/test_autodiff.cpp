#include <doctest.h>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "lanecast/grad_check.hpp"
#include "lanecast/graph.hpp"
#include "lanecast/nn.hpp"
#include "lanecast/optim.hpp"

using namespace lanecast;
using ad::Graph;
using ad::Var;

namespace {

Tensor random_tensor(Rng& rng, int rows, int cols, double lo = -2.0,
                     double hi = 2.0) {
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero, for ops with kinks at the origin.
Tensor random_tensor_off_kink(Rng& rng, int rows, int cols) {
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.values) {
    const double mag = rng.uniform(0.2, 2.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

}  // namespace

TEST_CASE("matmul identity passthrough") {
  Graph g;
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> eye{1, 0, 0, 1};
  Var out = g.matmul(g.constant(2, 2, a), g.constant(2, 2, eye));
  auto v = g.value(out);
  CHECK(std::vector<double>(v.begin(), v.end()) == a);
}

TEST_CASE("softmax of a constant row is uniform and normalized") {
  Graph g;
  const std::vector<double> z{0, 0, 0};
  Var p = g.softmax_rows(g.constant(1, 3, z));
  auto v = g.value(p);
  for (double x : v) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  double sum = v[0] + v[1] + v[2];
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("softmax outputs are strictly positive and sum to one") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    Graph g;
    Tensor t = random_tensor(rng, 1 + rng.uniform_int(4), 1 + rng.uniform_int(8),
                             -50.0, 50.0);
    Var p = g.softmax_rows(g.constant(t.rows(), t.cols(), t.values));
    auto v = g.value(p);
    for (int r = 0; r < t.rows(); ++r) {
      double sum = 0.0;
      for (int c = 0; c < t.cols(); ++c) {
        const double x = v[static_cast<std::size_t>(r) * t.cols() + c];
        CHECK(x > 0.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("GRU cell with zero weights maps any input to zero state") {
  // Hand evaluation: all gate preactivations are 0, so z = 0.5, n = tanh(0) = 0
  // and h' = 0.5 * 0 + 0.5 * h = 0 when h = 0.
  Graph g;
  const int in = 3, d = 4;
  nn::GruLayer p;
  p.wx = g.zeros(in, 3 * d);
  p.wh = g.zeros(d, 3 * d);
  p.bx = g.zeros(1, 3 * d);
  p.bh = g.zeros(1, 3 * d);
  p.dim = d;
  const std::vector<double> x{0.7, -1.3, 2.9};
  Var h = g.zeros(1, d);
  Var out = nn::gru_cell(g, g.constant(1, in, x), h, p);
  for (double v : g.value(out)) CHECK(v == 0.0);
}

TEST_CASE("backward of sum(x*x) is 2x") {
  Graph g;
  const std::vector<double> xv{1, 2, 3};
  Var x = g.input(1, 3, xv, true);
  Var loss = g.sum_all(g.mul(x, x));
  g.backward(loss);
  auto gx = g.grad(x);
  CHECK(gx[0] == doctest::Approx(2.0));
  CHECK(gx[1] == doctest::Approx(4.0));
  CHECK(gx[2] == doctest::Approx(6.0));
}

TEST_CASE("l1 distance subgradient is zero at ties") {
  Graph g;
  const std::vector<double> xv{1.5, -0.5};
  Var x = g.input(1, 2, xv, true);
  Var y = g.constant(1, 2, xv);
  Var loss = g.l1_distance(x, y);
  CHECK(g.value_scalar(loss) == 0.0);
  g.backward(loss);
  for (double v : g.grad(x)) CHECK(v == 0.0);
}

TEST_CASE("softmax + cross-entropy gradient equals probs minus onehot") {
  Rng rng(17);
  Tensor z = random_tensor(rng, 1, 5);
  std::vector<double> onehot(5, 0.0);
  onehot[2] = 1.0;

  Graph g;
  Var zv = g.input(1, 5, z.values, true);
  Var p = g.softmax_rows(zv);
  Var loss = g.cross_entropy(p, g.constant(1, 5, onehot));
  g.backward(loss);
  auto probs = g.value(p);
  auto gz = g.grad(zv);
  for (int i = 0; i < 5; ++i)
    CHECK(gz[i] == doctest::Approx(probs[i] - onehot[i]).epsilon(1e-10));

  // and the same composite against the finite-difference oracle
  const double err = ad::grad_check(
      [&](Graph& gg, const std::vector<Var>& in) {
        return gg.cross_entropy(gg.softmax_rows(in[0]),
                                gg.constant(1, 5, onehot));
      },
      {z}, 1e-6);
  CHECK(err < 1e-5);
}

TEST_CASE("grad_check: matmul 3x4 * 4x2") {
  Rng rng(5);
  const double err = ad::grad_check(
      [](Graph& g, const std::vector<Var>& in) {
        return g.sum_all(g.tanh(g.matmul(in[0], in[1])));
      },
      {random_tensor(rng, 3, 4), random_tensor(rng, 4, 2)}, 1e-6);
  CHECK(err < 1e-5);
}

TEST_CASE("grad_check: GRU cell") {
  Rng rng(23);
  const int in = 3, d = 4;
  auto builder = [](Graph& g, const std::vector<Var>& v) {
    nn::GruLayer p{v[2], v[3], v[4], v[5], 4};
    return g.sum_all(nn::gru_cell(g, v[0], v[1], p));
  };
  const double err = ad::grad_check(
      builder,
      {random_tensor(rng, 2, in, -1, 1), random_tensor(rng, 2, d, -1, 1),
       random_tensor(rng, in, 3 * d, -1, 1), random_tensor(rng, d, 3 * d, -1, 1),
       random_tensor(rng, 1, 3 * d, -1, 1), random_tensor(rng, 1, 3 * d, -1, 1)},
      1e-6);
  CHECK(err < 1e-5);
}

TEST_CASE("grad_check: every catalog op on 10 random seeds") {
  struct Case {
    const char* name;
    ad::LossBuilder builder;
    std::function<std::vector<Tensor>(Rng&)> make_inputs;
  };

  std::vector<Case> cases;
  cases.push_back({"add", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.add(v[0], v[1])));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 4),
                                                random_tensor(r, 3, 4)};
                   }});
  cases.push_back({"sub", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.sigmoid(g.sub(v[0], v[1])));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 2, 5),
                                                random_tensor(r, 2, 5)};
                   }});
  cases.push_back({"mul", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.mul(v[0], v[1]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 3),
                                                random_tensor(r, 3, 3)};
                   }});
  cases.push_back({"affine", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.affine(v[0], -1.7, 0.3)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 4, 2)};
                   }});
  cases.push_back({"add_bias", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.add_bias(v[0], v[1])));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 4),
                                                random_tensor(r, 1, 4)};
                   }});
  cases.push_back({"matmul", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.matmul(v[0], v[1])));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 2, 6),
                                                random_tensor(r, 6, 3)};
                   }});
  cases.push_back({"matmul_bt", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.matmul_bt(v[0], v[1])));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 2, 5),
                                                random_tensor(r, 4, 5)};
                   }});
  cases.push_back({"tanh", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(v[0]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 3)};
                   }});
  cases.push_back({"sigmoid", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.sigmoid(v[0]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 3)};
                   }});
  cases.push_back({"relu", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.relu(v[0]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor_off_kink(r, 3, 5)};
                   }});
  cases.push_back({"softmax", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.mul(g.softmax_rows(v[0]), v[1]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 2, 4),
                                                random_tensor(r, 2, 4)};
                   }});
  cases.push_back({"scaled_dot_softmax",
                   [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(
                         g.matmul(g.scaled_dot_softmax(v[0], v[1]), v[2]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 1, 6),
                                                random_tensor(r, 5, 6),
                                                random_tensor(r, 5, 3)};
                   }});
  cases.push_back({"concat_rows", [](Graph& g, const std::vector<Var>& v) {
                     std::vector<Var> parts{v[0], v[1]};
                     return g.sum_all(g.tanh(g.concat_rows(parts)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 2, 3),
                                                random_tensor(r, 4, 3)};
                   }});
  cases.push_back({"concat_cols", [](Graph& g, const std::vector<Var>& v) {
                     std::vector<Var> parts{v[0], v[1]};
                     return g.sum_all(g.tanh(g.concat_cols(parts)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 2),
                                                random_tensor(r, 3, 5)};
                   }});
  cases.push_back({"slice_rows", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.slice_rows(v[0], 1, 3)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 4, 3)};
                   }});
  cases.push_back({"slice_cols", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.slice_cols(v[0], 1, 4)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 5)};
                   }});
  cases.push_back({"reshape", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.reshape(v[0], 1, 12)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 4)};
                   }});
  cases.push_back({"gather_rows", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(
                         g.tanh(g.gather_rows(v[0], {2, 0, 2, 3})));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 4, 3)};
                   }});
  cases.push_back({"scatter_add_rows",
                   [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(
                         g.tanh(g.scatter_add_rows(v[0], {1, 0, 1, 2}, 4)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 4, 3)};
                   }});
  cases.push_back({"sum_all", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.mul(v[0], v[0]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 4)};
                   }});
  cases.push_back({"mean_all", [](Graph& g, const std::vector<Var>& v) {
                     return g.mean_all(g.mul(v[0], v[0]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 3, 4)};
                   }});
  cases.push_back({"conv1d", [](Graph& g, const std::vector<Var>& v) {
                     return g.sum_all(g.tanh(g.conv1d_same(v[0], v[1], v[2], 3)));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 6, 2),
                                                random_tensor(r, 6, 4),
                                                random_tensor(r, 1, 4)};
                   }});
  cases.push_back({"l1_distance", [](Graph& g, const std::vector<Var>& v) {
                     return g.l1_distance(v[0], v[1]);
                   },
                   [](Rng& r) {
                     // keep the two points apart so no coordinate ties
                     std::vector<Tensor> t{random_tensor(r, 2, 3, 1.0, 2.0),
                                           random_tensor(r, 2, 3, -2.0, -1.0)};
                     return t;
                   }});
  cases.push_back({"cross_entropy", [](Graph& g, const std::vector<Var>& v) {
                     return g.cross_entropy(g.softmax_rows(v[0]),
                                            g.softmax_rows(v[1]));
                   },
                   [](Rng& r) {
                     return std::vector<Tensor>{random_tensor(r, 2, 4),
                                                random_tensor(r, 2, 4)};
                   }});

  for (const auto& c : cases) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed * 7919 + 13);
      const double err = ad::grad_check(c.builder, c.make_inputs(rng), 1e-6);
      INFO(c.name << " seed " << seed);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("leaf with no influence on the loss gets an exactly-zero gradient") {
  Graph g;
  const std::vector<double> a{1.0, 2.0};
  Var used = g.input(1, 2, a, true);
  Var unused = g.input(1, 2, a, true);
  Var loss = g.sum_all(g.mul(used, used));
  g.backward(loss);
  for (double v : g.grad(unused)) CHECK(v == 0.0);
  CHECK(g.grad(unused).size() == 2);
}

TEST_CASE("identical seeds give bit-identical forwards and gradients") {
  auto run = [](std::uint64_t seed, std::vector<double>& vals,
                std::vector<double>& grads) {
    Rng rng(seed);
    Tensor a = random_tensor(rng, 4, 4);
    Tensor b = random_tensor(rng, 4, 4);
    Graph g;
    Var av = g.input(4, 4, a.values, true);
    Var bv = g.input(4, 4, b.values, false);
    Var out = g.softmax_rows(g.matmul(g.tanh(av), bv));
    Var loss = g.sum_all(g.mul(out, out));
    g.backward(loss);
    auto v = g.value(out);
    vals.assign(v.begin(), v.end());
    auto gr = g.grad(av);
    grads.assign(gr.begin(), gr.end());
  };
  std::vector<double> v1, g1, v2, g2;
  run(99, v1, g1);
  run(99, v2, g2);
  CHECK(std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("error paths: shapes, non-scalar loss, consumed tape") {
  Graph g;
  Var a = g.zeros(2, 3);
  Var b = g.zeros(4, 2);
  CHECK_THROWS_WITH_AS(g.matmul(a, b),
                       "matmul: incompatible shapes 2x3 and 4x2",
                       std::invalid_argument);
  CHECK_THROWS_AS(g.add(a, b), std::invalid_argument);

  Graph g2;
  Var x = g2.input(1, 2, std::vector<double>{1.0, 2.0}, true);
  Var y = g2.mul(x, x);
  CHECK_THROWS_AS(g2.backward(y), std::invalid_argument);  // non-scalar
  Var loss = g2.sum_all(y);
  g2.backward(loss);
  CHECK_THROWS_AS(g2.backward(loss), std::logic_error);  // tape consumed
}

TEST_CASE("grad_check validates eps") {
  CHECK_THROWS_AS(ad::grad_check(
                      [](Graph& g, const std::vector<Var>& v) {
                        return g.sum_all(v[0]);
                      },
                      {Tensor::zeros(1, 1)}, 1e-2),
                  std::invalid_argument);
}

TEST_CASE("optimizer: zero gradient leaves parameters unchanged") {
  ParamStore ps;
  ps.add("w", 2, 2, 2);
  ps.init_uniform(42);
  const auto before = ps.at("w").values;
  AdamState st;
  st.init(ps);
  auto grads = make_grad_buffers(ps);
  for (int i = 0; i < 5; ++i) adam_step(ps, grads, st);
  CHECK(ps.at("w").values == before);
  CHECK(st.step == 5);
}

TEST_CASE("optimizer: constant gradient moves parameter against its sign") {
  ParamStore ps;
  ps.add("w", 1, 1, 1);
  AdamState st;
  st.init(ps);
  auto grads = make_grad_buffers(ps);
  grads[0][0] = 0.7;
  for (int i = 0; i < 10; ++i) adam_step(ps, grads, st);
  CHECK(ps.at("w").values[0] < 0.0);

  ParamStore ps2;
  ps2.add("w", 1, 1, 1);
  AdamState st2;
  st2.init(ps2);
  auto grads2 = make_grad_buffers(ps2);
  grads2[0][0] = -0.7;
  for (int i = 0; i < 10; ++i) adam_step(ps2, grads2, st2);
  CHECK(ps2.at("w").values[0] > 0.0);
}

TEST_CASE("optimizer: quadratic bowl converges like the scalar recurrence") {
  // Independent oracle: the same adaptive-moment recurrence on plain doubles.
  double w_oracle = 0.0, m = 0.0, v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 200; ++t) {
    const double grad = 2.0 * (w_oracle - 3.0);
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad * grad;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    w_oracle -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  CHECK(std::abs(w_oracle - 3.0) < 0.05);

  ParamStore ps;
  ps.add("w", 1, 1, 1);
  AdamState st;
  st.lr = 0.1;
  st.init(ps);
  for (int t = 1; t <= 200; ++t) {
    Graph g;
    Var w = g.bind(ps.at("w"));
    Var target = g.scalar(3.0);
    Var diff = g.sub(w, target);
    Var loss = g.sum_all(g.mul(diff, diff));
    g.backward(loss);
    GradBuffers grads(1);
    auto gw = g.grad(w);
    grads[0].assign(gw.begin(), gw.end());
    adam_step(ps, grads, st);
  }
  CHECK(std::abs(ps.at("w").values[0] - 3.0) < 0.05);
  CHECK(ps.at("w").values[0] == doctest::Approx(w_oracle).epsilon(1e-12));
}

TEST_CASE("optimizer: missing gradient is an error") {
  ParamStore ps;
  ps.add("w", 2, 2, 2);
  AdamState st;
  st.init(ps);
  GradBuffers grads(1);  // empty inner buffer
  CHECK_THROWS_AS(adam_step(ps, grads, st), std::invalid_argument);
}
