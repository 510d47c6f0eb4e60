#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "fedwire/error.hpp"
#include "fedwire/fl_sim.hpp"

using namespace fedwire;
using namespace fedwire::fl_sim;

namespace {

UserDataset gaussian(std::mt19937_64& rng, int n, int d, bool labels) {
  std::normal_distribution<double> N(0, 1);
  UserDataset u{Mat(n, d), Vec(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) u.X(i, j) = N(rng);
    u.y(i) = labels ? (N(rng) > 0 ? 1.0 : -1.0) : N(rng);
  }
  return u;
}

Vec randvec(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> N(0, scale);
  Vec v(d);
  for (int j = 0; j < d; ++j) v(j) = N(rng);
  return v;
}

// max over coordinates of |analytic - central difference| relative to the gradient norm
double fd_error(const std::function<LossGrad(const Vec&)>& f, const Vec& x) {
  const auto g = f(x).grad;
  Vec fd(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    fd(j) = (f(xp).value - f(xm).value) / (2 * h);
  }
  return (g - fd).norm() / std::max(g.norm(), 1e-8);
}

NetworkScenario one_user() {
  return NetworkScenario{{{1e-10, 1e4, 100, 1e9, 0.1}}, 1e6, 1e-20, 1e4, 1e-28};
}

std::string tmpfile(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("linear loss examples") {
  UserDataset zero{Mat::Ones(4, 3), Vec::Zero(4)};
  const auto r = loss_and_grad(LossModel{}, Vec::Zero(3), zero);
  CHECK(r.value == 0.0);
  CHECK(r.grad.norm() == 0.0);

  UserDataset one{Mat::Ones(1, 1), Vec::Ones(1)};
  const auto s = loss_and_grad(LossModel{}, Vec::Zero(1), one);
  CHECK(s.value == doctest::Approx(0.5));
  CHECK(s.grad(0) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(loss_and_grad(LossModel{}, Vec::Zero(2), one), InputError);
}

TEST_CASE("logistic loss values") {
  UserDataset d{Mat::Ones(1, 1), Vec::Ones(1)};
  const LossModel std_log{LossKind::logistic_regression};
  const LossModel neg_log{LossKind::negated_logistic};
  CHECK(loss_and_grad(std_log, Vec::Zero(1), d).value == doctest::Approx(std::log(2.0)));
  CHECK(loss_and_grad(neg_log, Vec::Zero(1), d).value == doctest::Approx(-std::log(2.0)));
  Vec w(1);
  w << 800.0;
  CHECK(std::isfinite(loss_and_grad(std_log, -w, d).value));
  CHECK(loss_and_grad(std_log, -w, d).value == doctest::Approx(800.0));
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(1);
  for (auto kind : {LossKind::linear_regression, LossKind::logistic_regression, LossKind::negated_logistic}) {
    for (int i = 0; i < 100; ++i) {
      const auto data = gaussian(rng, 20, 5, kind != LossKind::linear_regression);
      LossModel m{kind, i % 2 ? 0.3 : 0.0, randvec(rng, 5)};
      const Vec w = randvec(rng, 5, 0.5);
      CHECK(fd_error([&](const Vec& x) { return loss_and_grad(m, x, data); }, w) <= 1e-6);
    }
  }
}

TEST_CASE("surrogate gradient matches central differences") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const LossModel m{i % 2 ? LossKind::logistic_regression : LossKind::linear_regression};
    std::vector<UserDataset> users{gaussian(rng, 15, 4, i % 2), gaussian(rng, 25, 4, i % 2)};
    const Vec wn = randvec(rng, 4, 0.5);
    const auto glob = global_loss_and_grad(m, users, wn);
    const auto loc = loss_and_grad(m, wn, users[0]);
    const auto G = make_surrogate(m, users[0], wn, glob.grad, loc.grad, 0.2);
    CHECK(fd_error([&](const Vec& h) { return G.eval(h); }, randvec(rng, 4, 0.3)) <= 1e-6);
  }
}

TEST_CASE("global loss weights users by sample count") {
  std::mt19937_64 rng(3);
  std::vector<UserDataset> users{gaussian(rng, 100, 3, false), gaussian(rng, 300, 3, false)};
  const Vec w = randvec(rng, 3);
  const LossModel m{};
  const double f1 = loss_and_grad(m, w, users[0]).value, f2 = loss_and_grad(m, w, users[1]).value;
  CHECK(global_loss(m, users, w) == doctest::Approx(0.25 * f1 + 0.75 * f2).epsilon(1e-14));
  CHECK(global_loss(m, {users[0]}, w) == doctest::Approx(f1).epsilon(1e-15));
  std::vector<UserDataset> eq{gaussian(rng, 50, 3, false), gaussian(rng, 50, 3, false)};
  const double g1 = loss_and_grad(m, w, eq[0]).value, g2 = loss_and_grad(m, w, eq[1]).value;
  CHECK(global_loss(m, eq, w) == doctest::Approx(0.5 * (g1 + g2)).epsilon(1e-14));
}

TEST_CASE("surrogate identities") {
  std::mt19937_64 rng(4);
  const auto data = gaussian(rng, 30, 4, false);
  const LossModel m{};
  const Vec wn = randvec(rng, 4);
  const auto loc = loss_and_grad(m, wn, data);
  const auto r0 = local_surrogate(wn, loc.grad, loc.grad, 0.37, Vec::Zero(4), data, m);
  CHECK(r0.value == doctest::Approx(loc.value).epsilon(1e-15));
  // K = 1: the global gradient is the local one
  CHECK((r0.grad - 0.37 * loc.grad).norm() <= 1e-12 * loc.grad.norm());
  CHECK_THROWS_AS(local_surrogate(wn, loc.grad, loc.grad, 0.0, Vec::Zero(4), data, m), DomainError);
}

TEST_CASE("solve_local examples") {
  SUBCASE("already at the optimum") {
    const Objective G = [](const Vec& h) { return LossGrad{0.5 * h.squaredNorm(), h}; };
    const auto r = solve_local(G, 3, 0.5, LocalStop::accuracy(0.1));
    CHECK(r.iters == 0);
    CHECK(r.measured_eta == 0.0);
  }
  SUBCASE("one exact step") {
    const Objective G = [](const Vec& h) {
      return LossGrad{0.5 * (h(0) - 1) * (h(0) - 1), Vec::Constant(1, h(0) - 1)};
    };
    const auto r = solve_local(G, 1, 1.0, LocalStop::accuracy(0.25));
    CHECK(r.iters == 1);
    CHECK(r.h(0) == 1.0);
    CHECK(r.measured_eta == 0.0);
  }
  SUBCASE("fixed iteration count") {
    const Objective G = [](const Vec& h) {
      return LossGrad{0.5 * (h(0) - 1) * (h(0) - 1), Vec::Constant(1, h(0) - 1)};
    };
    const auto r = solve_local(G, 1, 0.5, LocalStop::fixed(3));
    CHECK(r.iters == 3);
    CHECK(r.h(0) == doctest::Approx(0.875));
  }
  SUBCASE("bad arguments") {
    const Objective G = [](const Vec& h) { return LossGrad{0.5 * h.squaredNorm(), h}; };
    CHECK_THROWS_AS(solve_local(G, 1, 0.0, LocalStop::accuracy(0.1)), DomainError);
    CHECK_THROWS_AS(solve_local(G, 1, 0.5, LocalStop::accuracy(1.0)), DomainError);
  }
}

TEST_CASE("local iterations within the gradient-descent bound on quadratics") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 6;
    const double gamma = 0.05 + 0.5 * U(rng), L = gamma * (1.5 + 20 * U(rng));
    // A = Q diag Q', eigenvalues spanning [gamma, L]
    Eigen::HouseholderQR<Mat> qr(Mat::Random(d, d));
    const Mat Q = qr.householderQ();
    Vec ev(d);
    for (int j = 0; j < d; ++j) ev(j) = gamma + (L - gamma) * (d == 1 ? 0 : double(j) / (d - 1));
    const Mat A = Q * ev.asDiagonal() * Q.transpose();
    const Vec b = randvec(rng, d);
    const Objective G = [&](const Vec& h) { return LossGrad{0.5 * h.dot(A * h) - b.dot(h), A * h - b}; };
    const double delta = (0.2 + 1.7 * U(rng)) / L;
    const double eta = std::pow(10.0, -3 * U(rng) - 0.1);
    const double v = 2.0 / ((2.0 - L * delta) * delta * gamma);
    const auto r = solve_local(G, d, delta, LocalStop::accuracy(eta));
    CHECK(r.iters <= std::ceil(v * std::log2(1 / eta)));
    CHECK(r.measured_eta <= eta);

    // descent along the iterates
    Vec h = Vec::Zero(d);
    double prev = G(h).value;
    for (int i = 0; i < 50; ++i) {
      h -= delta * G(h).grad;
      const double cur = G(h).value;
      CHECK(cur <= prev + 1e-12 * std::max(1.0, std::abs(prev)));
      prev = cur;
    }
  }
}

TEST_CASE("sgd local solver") {
  std::mt19937_64 rng(6);
  const auto data = gaussian(rng, 40, 3, false);
  const LossModel m{};
  const Vec wn = Vec::Zero(3);
  const auto loc = loss_and_grad(m, wn, data);
  const auto G = make_surrogate(m, data, wn, loc.grad, loc.grad, 0.5);
  const auto a = solve_local_sgd(G, 0.1, LocalStop::fixed(20), 8, 42);
  const auto b = solve_local_sgd(G, 0.1, LocalStop::fixed(20), 8, 42);
  CHECK(a.iters == 20);
  CHECK(a.h == b.h);
  CHECK(G.eval(a.h).value < G.eval(Vec::Zero(3)).value);
  // full batch reduces to gradient descent
  const auto full = solve_local_sgd(G, 0.1, LocalStop::fixed(5), 40, 1);
  const auto gd = solve_local([&](const Vec& h) { return G.eval(h); }, 3, 0.1, LocalStop::fixed(5));
  CHECK((full.h - gd.h).norm() <= 1e-12);
  CHECK_THROWS_AS(solve_local_sgd(G, 0.1, LocalStop::fixed(5), 41, 1), InputError);
}

TEST_CASE("dane: single user least squares") {
  const auto pool = make_synthetic({400, 5, 0.1, LossKind::linear_regression, 3});
  const std::vector<UserDataset> users{pool};
  const auto c = estimate_curvature(LossModel{}, users);
  DaneConfig cfg;
  cfg.fl = {c.lipschitz, c.strong_convexity, c.strong_convexity / c.lipschitz, 1.0 / c.lipschitz, 1e-8};
  cfg.local_stop = LocalStop::accuracy(1e-6);
  cfg.max_rounds = 500;
  const auto tr = run_dane(LossModel{}, users, cfg);
  REQUIRE(tr.rounds_to_eps0);
  // normal equations oracle
  const Vec ls = (pool.X.transpose() * pool.X).ldlt().solve(pool.X.transpose() * pool.y);
  CHECK((tr.w.back() - ls).norm() <= 1e-3 * ls.norm());
  CHECK(tr.global_loss.size() == tr.w.size());
  CHECK(tr.global_loss.size() == static_cast<std::size_t>(*tr.rounds_to_eps0) + 1);
}

TEST_CASE("dane: identical users follow the single-user trajectory") {
  const auto pool = make_synthetic({200, 4, 0.1, LossKind::linear_regression, 4});
  const auto c = estimate_curvature(LossModel{}, {pool});
  DaneConfig cfg;
  cfg.fl = {c.lipschitz, c.strong_convexity, c.strong_convexity / c.lipschitz, 1.0 / c.lipschitz, 1e-4};
  cfg.local_stop = LocalStop::fixed(7);
  cfg.max_rounds = 15;
  const auto one = run_dane(LossModel{}, {pool}, cfg);
  const auto four = run_dane(LossModel{}, {pool, pool, pool, pool}, cfg);
  REQUIRE(one.w.size() == four.w.size());
  for (std::size_t n = 0; n < one.w.size(); ++n)
    CHECK((one.w[n] - four.w[n]).norm() <= 1e-12 * std::max(1.0, one.w[n].norm()));
}

TEST_CASE("dane: rounds and local iterations within the bounds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pool = make_synthetic({600, 10, 0.1, LossKind::linear_regression, seed});
    const auto users = partition(pool, 6, {}, seed);
    const auto c = estimate_curvature(LossModel{}, users);
    DaneConfig cfg;
    cfg.fl = {c.lipschitz, c.strong_convexity, c.strong_convexity / c.lipschitz, 1.0 / c.lipschitz, 1e-3};
    cfg.local_stop = LocalStop::accuracy(0.1);
    cfg.adaptive_xi = false;
    const auto tr = run_dane(LossModel{}, users, cfg);
    const auto co = IterationCoefficients::from(cfg.fl, one_user());
    REQUIRE(tr.rounds_to_eps0);
    CHECK(*tr.rounds_to_eps0 <= std::ceil(co.a / (1 - 0.1)));
    for (const auto& round : tr.local_iters)
      for (int it : round) CHECK(it <= std::ceil(co.v * std::log2(10.0)));
  }
}

TEST_CASE("dane: logistic regression converges and is parallel-safe") {
  const auto pool = make_synthetic({600, 5, 0.3, LossKind::logistic_regression, 5});
  const auto users = partition(pool, 4, {}, 5);
  const LossModel m{LossKind::logistic_regression, 0.05};
  const auto c = estimate_curvature(m, users);
  DaneConfig cfg;
  cfg.fl = {c.lipschitz, c.strong_convexity, c.strong_convexity / c.lipschitz, 1.0 / c.lipschitz, 1e-3};
  cfg.max_rounds = 400;
  const auto serial = run_dane(m, users, cfg);
  cfg.exec = Exec::parallel;
  const auto par = run_dane(m, users, cfg);
  CHECK(serial.rounds_to_eps0.has_value());
  CHECK(serial.global_loss == par.global_loss);
}

TEST_CASE("proximal term makes the negated loss strongly convex") {
  std::mt19937_64 rng(7);
  const auto data = gaussian(rng, 30, 3, true);
  const double lmax = power_iteration(data.X.transpose() * data.X / 30.0);
  const double g = lmax / 4 + 0.2;  // beats the concave part's curvature
  const LossModel m{LossKind::negated_logistic, g, randvec(rng, 3)};
  for (int i = 0; i < 100; ++i) {
    const Vec w = randvec(rng, 3), dir = randvec(rng, 3).normalized();
    const double h = 1e-3;
    const double sd = loss_and_grad(m, w + h * dir, data).value - 2 * loss_and_grad(m, w, data).value +
                      loss_and_grad(m, w - h * dir, data).value;
    CHECK(sd / (h * h) >= 0.2 - 1e-4);
  }
}

TEST_CASE("estimate_curvature") {
  SUBCASE("identity rows") {
    UserDataset u{Mat::Identity(4, 4), Vec::Zero(4)};
    const auto c = estimate_curvature(LossModel{}, {u});
    CHECK(c.lipschitz == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(c.strong_convexity == doctest::Approx(0.25).epsilon(1e-9));
    CHECK_FALSE(c.singular);
  }
  SUBCASE("duplicated column is flagged") {
    std::mt19937_64 rng(8);
    auto u = gaussian(rng, 50, 3, false);
    u.X.col(2) = u.X.col(1);
    const auto c = estimate_curvature(LossModel{}, {u});
    CHECK(c.singular);
    CHECK(c.strong_convexity < 1e-12);
  }
  SUBCASE("power iteration against a dense eigensolver") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20; ++i) {
      const auto u = gaussian(rng, 60, 6, false);
      const Mat H = u.X.transpose() * u.X / 60.0;
      Eigen::SelfAdjointEigenSolver<Mat> es(H);
      CHECK(std::abs(power_iteration(H) - es.eigenvalues().maxCoeff()) <= 1e-6);
      const auto c = estimate_curvature(LossModel{}, {u});
      CHECK(std::abs(c.lipschitz - es.eigenvalues().maxCoeff()) <= 1e-6);
      CHECK(std::abs(c.strong_convexity - es.eigenvalues().minCoeff()) <= 1e-6);
    }
  }
  SUBCASE("logistic uses a quarter of the top eigenvalue plus the proximal weight") {
    std::mt19937_64 rng(10);
    const auto u = gaussian(rng, 40, 3, true);
    Eigen::SelfAdjointEigenSolver<Mat> es(u.X.transpose() * u.X / 40.0);
    const auto c = estimate_curvature(LossModel{LossKind::logistic_regression, 0.1}, {u});
    CHECK(c.lipschitz == doctest::Approx(es.eigenvalues().maxCoeff() / 4 + 0.1).epsilon(1e-8));
    CHECK(c.strong_convexity == doctest::Approx(0.1));
  }
}

TEST_CASE("partition") {
  UserDataset pool{Mat(60000, 1), Vec(60000)};
  for (int i = 0; i < 60000; ++i) {
    pool.X(i, 0) = i;
    pool.y(i) = (i * 7919) % 60000;  // a permutation of 0..59999
  }
  SUBCASE("iid") {
    const auto parts = partition(pool, 120, {}, 1);
    REQUIRE(parts.size() == 120);
    std::set<double> seen;
    for (const auto& p : parts) {
      CHECK(p.size() == 500);
      for (Eigen::Index i = 0; i < p.X.rows(); ++i) seen.insert(p.X(i, 0));
    }
    CHECK(seen.size() == 60000);
    CHECK_THROWS_AS(partition(pool, 7, {}, 1), InputError);
  }
  SUBCASE("noniid shards") {
    PartitionMode m{PartitionMode::Kind::noniid, 2, 250};
    const auto parts = partition(pool, 120, m, 1);
    REQUIRE(parts.size() == 120);
    for (const auto& p : parts) {
      CHECK(p.size() == 500);
      // targets are 0..59999 sorted into 240 blocks of 250
      std::set<int> shards;
      for (Eigen::Index i = 0; i < p.y.size(); ++i) shards.insert(static_cast<int>(p.y(i)) / 250);
      CHECK(shards.size() <= 2);
    }
    CHECK_THROWS_AS(partition(pool, 100, m, 1), InputError);
  }
  SUBCASE("single user keeps everything") {
    const auto parts = partition(pool, 1, {}, 3);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].size() == 60000);
  }
}

TEST_CASE("csv ingestion") {
  SUBCASE("header and normalization") {
    const auto path = tmpfile("fedwire_ok.csv", "a,b,target\n1,10,0.5\n3,10,1.5\n2,10,2.5\n");
    const auto d = read_csv(path, true);
    CHECK(d.size() == 3);
    CHECK(d.dim() == 2);
    CHECK(d.X(0, 0) == 0.0);
    CHECK(d.X(1, 0) == 1.0);
    CHECK(d.X(2, 0) == 0.5);
    CHECK(d.X(1, 1) == 0.0);
    CHECK(d.y(2) == 2.5);
  }
  SUBCASE("bad cell reports row and column") {
    const auto path = tmpfile("fedwire_bad.csv", "1,2,3\n4,x,6\n");
    try {
      read_csv(path, false);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("column 2") != std::string::npos);
    }
  }
  SUBCASE("ragged rows") {
    CHECK_THROWS_AS(read_csv(tmpfile("fedwire_ragged.csv", "1,2,3\n4,5\n"), false), InputError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_csv("/nonexistent/file.csv", false), InputError); }
}

TEST_CASE("synthetic data is seeded") {
  const auto a = make_synthetic({100, 4, 0.1, LossKind::logistic_regression, 11});
  const auto b = make_synthetic({100, 4, 0.1, LossKind::logistic_regression, 11});
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  for (Eigen::Index i = 0; i < a.y.size(); ++i) CHECK(std::abs(a.y(i)) == 1.0);
}
