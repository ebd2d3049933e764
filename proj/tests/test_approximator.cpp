#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "rllg/mlp.hpp"
#include "rllg/squashed_gaussian.hpp"

using namespace rllg;

namespace {

// central finite differences of a scalar function of the parameters
template <typename F>
std::vector<double> fd_gradient(Network& net, F&& loss, double h = 1e-5) {
  std::vector<double> g(net.params().size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double saved = net.params()[i];
    net.params()[i] = saved + h;
    const double up = loss();
    net.params()[i] = saved - h;
    const double down = loss();
    net.params()[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(1e-12, std::sqrt(den));
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS(mlp_spec({4}, Activation::kReLU, HeadKind::kLinear));
  CHECK_THROWS(mlp_spec({4, 0, 2}, Activation::kReLU, HeadKind::kLinear));
  CHECK_THROWS(mlp_spec({4, 8, 3}, Activation::kReLU,
                        HeadKind::kSquashedGaussian, 2));  // width != 2d
  CHECK_THROWS(mlp_spec({4, 8, 2}, Activation::kReLU, HeadKind::kBoundedTanh,
                        0, -0.5));
  const MlpSpec s = mlp_spec({4, 8, 2}, Activation::kReLU, HeadKind::kLinear);
  CHECK(s.param_count() == 4 * 8 + 8 + 8 * 2 + 2);
}

TEST_CASE("forward: zero-initialized linear layer maps anything to zero") {
  Network net(mlp_spec({3, 2}, Activation::kReLU, HeadKind::kLinear), 7);
  std::fill(net.params().begin(), net.params().end(), 0.0);
  const std::vector<double> y = net.forward(std::vector<double>{1.0, -2.0, 0.5});
  CHECK(y.size() == 2);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("forward: BoundedTanh with phi = 0 is identically zero") {
  Network net(mlp_spec({3, 8, 2}, Activation::kTanH, HeadKind::kBoundedTanh, 0,
                       0.0),
              3);
  const std::vector<double> y = net.forward(std::vector<double>{0.3, 4.0, -9.0});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("forward: hand-computed 1-2-1 ReLU net") {
  Network net(mlp_spec({1, 2, 1}, Activation::kReLU, HeadKind::kLinear), 0);
  // layer 0: W = [[2],[-3]], b = [0.5, 1.0]; layer 1: W = [[1, 2]], b = [-0.25]
  net.params() = {2.0, -3.0, 0.5, 1.0, 1.0, 2.0, -0.25};
  // x=1: z0 = [2.5, -2], a0 = [2.5, 0]; y = 2.5*1 + 0*2 - 0.25 = 2.25
  const std::vector<double> y = net.forward(std::vector<double>{1.0});
  CHECK(y[0] == doctest::Approx(2.25).epsilon(1e-15));
}

TEST_CASE("backward: zero upstream leaves grad unchanged") {
  Network net(mlp_spec({2, 4, 2}, Activation::kReLU, HeadKind::kLinear), 1);
  net.forward(std::vector<double>{0.2, -0.4});
  net.backward(std::vector<double>{0.0, 0.0});
  for (double g : net.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward without forward is a hard error") {
  Network net(mlp_spec({2, 2}, Activation::kReLU, HeadKind::kLinear), 1);
  CHECK_THROWS_AS(net.backward(std::vector<double>{1.0, 0.0}),
                  std::logic_error);
}

TEST_CASE("backward: single linear weight, product rule") {
  Network net(mlp_spec({1, 1}, Activation::kReLU, HeadKind::kLinear), 1);
  net.params() = {2.0, 0.0};  // y = 2x
  net.forward(std::vector<double>{3.0});
  net.backward(std::vector<double>{1.0});
  CHECK(net.grad()[0] == doctest::Approx(3.0));  // dy/dw = x
  CHECK(net.grad()[1] == doctest::Approx(1.0));  // dy/db = 1
}

TEST_CASE("backward matches central finite differences on a random 4-8-2 net") {
  std::mt19937_64 rng(11);
  for (const Activation act : {Activation::kReLU, Activation::kTanH}) {
    Network net(mlp_spec({4, 8, 2}, act, HeadKind::kLinear), 99);
    const Matrix x = random_matrix(5, 4, rng);
    const Matrix w = random_matrix(5, 2, rng);
    auto loss = [&] { return (net.infer(x).array() * w.array()).sum(); };
    net.forward(x);
    net.zero_grad();
    net.backward(w);
    const std::vector<double> fd = fd_gradient(net, loss);
    CHECK(rel_err(net.grad(), fd) <= 1e-4);
  }
}

TEST_CASE("backward: input gradients match finite differences") {
  std::mt19937_64 rng(12);
  Network net(mlp_spec({3, 8, 8, 1}, Activation::kTanH, HeadKind::kLinear), 5);
  Matrix x = random_matrix(1, 3, rng);
  net.forward(x);
  const Matrix gin = net.backward(Matrix::Ones(1, 1), false);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Matrix xp = x, xm = x;
    xp(0, j) += h;
    xm(0, j) -= h;
    const double fd = (net.infer(xp)(0, 0) - net.infer(xm)(0, 0)) / (2 * h);
    CHECK(gin(0, j) == doctest::Approx(fd).epsilon(1e-5));
  }
  for (double g : net.grad()) CHECK(g == 0.0);  // accumulate off
}

TEST_CASE("gradient check across heads and activations") {
  std::mt19937_64 rng(13);
  const std::vector<MlpSpec> specs = {
      mlp_spec({3, 6, 2}, Activation::kReLU, HeadKind::kLinear),
      mlp_spec({3, 6, 2}, Activation::kTanH, HeadKind::kLinear),
      mlp_spec({3, 6, 4}, Activation::kReLU, HeadKind::kSquashedGaussian, 2),
      mlp_spec({3, 6, 4}, Activation::kTanH, HeadKind::kSquashedGaussian, 2),
      mlp_spec({3, 6, 2}, Activation::kReLU, HeadKind::kBoundedTanh, 0, 0.7),
      mlp_spec({3, 6, 2}, Activation::kTanH, HeadKind::kBoundedTanh, 0, 1.3),
  };
  for (const MlpSpec& spec : specs) {
    for (int rep = 0; rep < 3; ++rep) {
      Network net(spec, 1000 + rep);
      const Matrix x = random_matrix(4, 3, rng);
      const Matrix w = random_matrix(4, spec.output_dim(), rng);
      auto loss = [&] { return (net.infer(x).array() * w.array()).sum(); };
      net.forward(x);
      net.zero_grad();
      net.backward(w);
      const std::vector<double> fd = fd_gradient(net, loss);
      CHECK(rel_err(net.grad(), fd) <= 1e-4);
    }
  }
}

TEST_CASE("adam: zero grad leaves params unchanged") {
  Network net(mlp_spec({2, 2}, Activation::kReLU, HeadKind::kLinear), 4);
  AdamState opt(net.params().size());
  const std::vector<double> before = net.params();
  adam_step(net, opt);
  CHECK(net.params() == before);
}

TEST_CASE("adam: first step moves a scalar by about lr against the gradient") {
  Network net(mlp_spec({1, 1}, Activation::kReLU, HeadKind::kLinear), 4);
  net.params() = {1.0, 0.0};
  AdamState opt(2, 0.1);
  net.grad()[0] = 1.0;
  adam_step(net, opt);
  CHECK(net.params()[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
}

TEST_CASE("adam: optimizing p^2 decreases |p| monotonically") {
  std::vector<double> p = {1.0};
  std::vector<double> g = {0.0};
  AdamState opt(1, 0.05);
  double prev = std::abs(p[0]);
  for (int i = 0; i < 10; ++i) {
    g[0] = 2.0 * p[0];
    adam_step(p, g, opt);
    CHECK(std::abs(p[0]) < prev);
    prev = std::abs(p[0]);
  }
}

TEST_CASE("soft_update") {
  const MlpSpec spec = mlp_spec({2, 3, 1}, Activation::kReLU, HeadKind::kLinear);
  Network target(spec, 1), online(spec, 2);

  SUBCASE("tau = 1 copies online exactly") {
    soft_update(target, online, 1.0);
    CHECK(target.params() == online.params());
  }
  SUBCASE("tau = 0.005 on scalars") {
    std::fill(target.params().begin(), target.params().end(), 0.0);
    std::fill(online.params().begin(), online.params().end(), 1.0);
    soft_update(target, online, 0.005);
    for (double v : target.params()) CHECK(v == doctest::Approx(0.005));
  }
  SUBCASE("repeated application converges geometrically") {
    std::fill(target.params().begin(), target.params().end(), 0.0);
    std::fill(online.params().begin(), online.params().end(), 1.0);
    const double tau = 0.1;
    for (int n = 1; n <= 50; ++n) {
      soft_update(target, online, tau);
      const double gap = std::abs(1.0 - target.params()[0]);
      CHECK(gap <= std::pow(1.0 - tau, n) + 1e-12);
    }
  }
  SUBCASE("spec mismatch is a hard error") {
    Network other(mlp_spec({2, 4, 1}, Activation::kReLU, HeadKind::kLinear), 3);
    CHECK_THROWS(soft_update(target, other, 0.5));
  }
}

TEST_CASE("BoundedTanh output stays within [-phi, phi] under fuzzing") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> big(0.0, 20.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double phi = std::abs(big(rng)) / 10.0;
    Network net(mlp_spec({3, 8, 2}, Activation::kReLU, HeadKind::kBoundedTanh,
                         0, phi),
                rep);
    for (double& p : net.params()) p = big(rng);
    const Matrix x = random_matrix(8, 3, rng, 50.0);
    const Matrix y = net.infer(x);
    CHECK(y.cwiseAbs().maxCoeff() <= phi + 1e-15);
  }
}

TEST_CASE("squashed gaussian: strict containment and finite log-density") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> big(0.0, 30.0);
  for (int rep = 0; rep < 40; ++rep) {
    Network net(mlp_spec({3, 8, 4}, Activation::kReLU,
                         HeadKind::kSquashedGaussian, 2),
                rep);
    for (double& p : net.params()) p = big(rng);
    const Matrix x = random_matrix(16, 3, rng, 10.0);
    const Matrix head = net.infer(x);
    const auto mean = gaussian::mean_of(head);
    const auto log_std = gaussian::log_std_of(head);
    CHECK(log_std.maxCoeff() <= kLogStdMax);
    CHECK(log_std.minCoeff() >= kLogStdMin);
    const gaussian::SampleBatch sb = gaussian::sample(mean, log_std, rng);
    CHECK(sb.a.cwiseAbs().maxCoeff() < 1.0);
    const Vector lp = gaussian::log_prob_from_u(sb.u, mean, log_std);
    for (Eigen::Index i = 0; i < lp.size(); ++i) CHECK(std::isfinite(lp(i)));
  }
}

TEST_CASE("squashed gaussian: log_prob_of_action agrees with the u form") {
  std::mt19937_64 rng(23);
  const Matrix mean = random_matrix(6, 2, rng, 0.5);
  const Matrix log_std = random_matrix(6, 2, rng, 0.3);
  const gaussian::SampleBatch sb = gaussian::sample(mean, log_std, rng);
  const Vector a = gaussian::log_prob_from_u(sb.u, mean, log_std);
  const Vector b = gaussian::log_prob_of_action(sb.a, mean, log_std);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    CHECK(a(i) == doctest::Approx(b(i)).epsilon(1e-6));
}

TEST_CASE("determinism: same seed gives bitwise-identical params and outputs") {
  const MlpSpec spec =
      mlp_spec({4, 16, 16, 2}, Activation::kReLU, HeadKind::kLinear);
  Network a(spec, 12345), b(spec, 12345);
  CHECK(a.params() == b.params());
  std::mt19937_64 r1(5), r2(5);
  const Matrix x1 = random_matrix(3, 4, r1);
  const Matrix x2 = random_matrix(3, 4, r2);
  const Matrix y1 = a.infer(x1);
  const Matrix y2 = b.infer(x2);
  CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint: round-trip preserves spec and parameters exactly") {
  Network net(mlp_spec({4, 8, 4}, Activation::kTanH,
                       HeadKind::kSquashedGaussian, 2),
              777);
  const auto path =
      std::filesystem::temp_directory_path() / "rllg_net_roundtrip.ckpt";
  save_network(net, path);
  Network back = load_network(path);
  CHECK(back.spec() == net.spec());
  CHECK(back.params() == net.params());
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: header and malformed fields are rejected") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "rllg_net_bad.ckpt";
  {
    std::ofstream f(path);
    f << "RLLG-NET v2\n";
  }
  CHECK_THROWS_WITH_AS(load_network(path),
                       doctest::Contains("bad field 'header'"),
                       std::runtime_error);
  {
    std::ofstream f(path);
    f << "RLLG-NET v1\nwidths 3 2\nactivation relu\nhead linear\nparams 99\n";
  }
  CHECK_THROWS_WITH_AS(load_network(path),
                       doctest::Contains("bad field 'params count'"),
                       std::runtime_error);
  fs::remove(path);
}
