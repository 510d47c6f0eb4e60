#include "fedwire/fl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "fedwire/error.hpp"

namespace fedwire::fl_sim {

namespace {

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_dim(const Vec& w, const UserDataset& data) {
  if (static_cast<std::size_t>(w.size()) != data.dim())
    throw InputError(fmt::format("dimension mismatch: w has {} entries, data has {} features",
                                 w.size(), data.dim()));
}

void add_proximal(const LossModel& model, const Vec& w, LossGrad& out) {
  if (model.proximal_gamma <= 0) return;
  const Vec diff = model.anchor.size() == 0 ? w : Vec(w - model.anchor);
  out.value += 0.5 * model.proximal_gamma * diff.squaredNorm();
  out.grad += model.proximal_gamma * diff;
}

// Per-sample loss value and d loss / d margin given margin m = x'w.
template <typename Margins, typename Targets>
LossGrad accumulate(LossKind kind, const Margins& m, const Targets& y, Vec& coeff) {
  const auto n = m.size();
  coeff.resize(n);
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (kind) {
      case LossKind::linear_regression: {
        const double r = m(i) - y(i);
        value += 0.5 * r * r;
        coeff(i) = r;
        break;
      }
      case LossKind::logistic_regression: {
        const double z = -y(i) * m(i);
        value += softplus(z);
        coeff(i) = -y(i) * sigmoid(z);
        break;
      }
      case LossKind::negated_logistic: {
        const double z = -y(i) * m(i);
        value -= softplus(z);
        coeff(i) = y(i) * sigmoid(z);
        break;
      }
    }
  }
  return {value, Vec()};
}

}  // namespace

LossGrad loss_and_grad(const LossModel& model, const Vec& w, const UserDataset& data) {
  check_dim(w, data);
  const double n = static_cast<double>(data.size());
  const Vec m = data.X * w;
  Vec coeff;
  LossGrad out = accumulate(model.kind, m, data.y, coeff);
  out.value /= n;
  out.grad = data.X.transpose() * coeff / n;
  add_proximal(model, w, out);
  return out;
}

LossGrad loss_and_grad(const LossModel& model, const Vec& w, const UserDataset& data,
                       const std::vector<int>& rows) {
  check_dim(w, data);
  if (rows.empty()) throw InputError("empty mini-batch");
  const Mat Xb = data.X(rows, Eigen::all);
  const Vec yb = data.y(rows);
  const Vec m = Xb * w;
  Vec coeff;
  LossGrad out = accumulate(model.kind, m, yb, coeff);
  const double n = static_cast<double>(rows.size());
  out.value /= n;
  out.grad = Xb.transpose() * coeff / n;
  add_proximal(model, w, out);
  return out;
}

LossGrad global_loss_and_grad(const LossModel& model, const std::vector<UserDataset>& users,
                              const Vec& w) {
  if (users.empty()) throw InputError("no users");
  double D = 0.0;
  for (const auto& u : users) D += static_cast<double>(u.size());
  LossGrad out{0.0, Vec::Zero(w.size())};
  for (const auto& u : users) {
    const LossGrad lg = loss_and_grad(model, w, u);
    const double weight = static_cast<double>(u.size()) / D;
    out.value += weight * lg.value;
    out.grad += weight * lg.grad;
  }
  return out;
}

double global_loss(const LossModel& model, const std::vector<UserDataset>& users, const Vec& w) {
  return global_loss_and_grad(model, users, w).value;
}

LossGrad Surrogate::eval(const Vec& h) const {
  LossGrad out = loss_and_grad(*model, w_n + h, *data);
  out.value -= correction.dot(h);
  out.grad -= correction;
  return out;
}

LossGrad Surrogate::eval_batch(const Vec& h, const std::vector<int>& rows) const {
  LossGrad out = loss_and_grad(*model, w_n + h, *data, rows);
  out.value -= correction.dot(h);
  out.grad -= correction;
  return out;
}

Surrogate make_surrogate(const LossModel& model, const UserDataset& data, const Vec& w_n,
                         const Vec& global_grad, const Vec& local_grad_at_wn, double xi) {
  check_dim(w_n, data);
  if (global_grad.size() != w_n.size() || local_grad_at_wn.size() != w_n.size())
    throw InputError("gradient dimension mismatch");
  if (!(xi > 0)) throw DomainError(fmt::format("xi must be positive, got {}", xi));
  return Surrogate{&model, &data, w_n, local_grad_at_wn - xi * global_grad};
}

LossGrad local_surrogate(const Vec& w_n, const Vec& global_grad, const Vec& local_grad_at_wn,
                         double xi, const Vec& h, const UserDataset& data, const LossModel& model) {
  if (h.size() != w_n.size()) throw InputError("h dimension mismatch");
  return make_surrogate(model, data, w_n, global_grad, local_grad_at_wn, xi).eval(h);
}

namespace {

// Reference minimizer value of G by plain GD down to the gradient tolerance.
double reference_value(const Objective& G, const Vec& start, double delta, double oracle_tol,
                       int max_iter) {
  Vec h = start;
  LossGrad lg = G(h);
  for (int i = 0; i < max_iter; ++i) {
    if (lg.grad.norm() <= oracle_tol) return lg.value;
    h -= delta * lg.grad;
    lg = G(h);
  }
  if (lg.grad.norm() <= oracle_tol) return lg.value;
  throw ConvergenceError(fmt::format("local reference solve: gradient norm {} > {} after {} steps",
                                     lg.grad.norm(), oracle_tol, max_iter));
}

double ratio(double value, double opt, double gap0) {
  return std::max(0.0, value - opt) / gap0;
}

}  // namespace

LocalResult solve_local(const Objective& G, std::size_t dim, double delta, const LocalStop& stop,
                        double oracle_tol, int max_iter) {
  if (!(delta > 0)) throw DomainError("step size must be positive");
  Vec h = Vec::Zero(static_cast<Eigen::Index>(dim));
  LossGrad lg = G(h);

  if (stop.kind == LocalStop::Kind::fixed_iters) {
    for (int i = 0; i < stop.iters; ++i) {
      h -= delta * lg.grad;
      lg = G(h);
    }
    return {h, stop.iters, std::numeric_limits<double>::quiet_NaN()};
  }

  if (!(stop.eta > 0 && stop.eta < 1))
    throw DomainError(fmt::format("local accuracy must be in (0,1), got {}", stop.eta));
  if (lg.grad.norm() <= oracle_tol) return {h, 0, 0.0};

  const double opt = reference_value(G, h, delta, oracle_tol, max_iter);
  const double gap0 = lg.value - opt;
  // G(0) already optimal to working precision
  if (!(gap0 > 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(opt))))
    return {h, 0, 0.0};

  for (int i = 1; i <= max_iter; ++i) {
    h -= delta * lg.grad;
    lg = G(h);
    const double r = ratio(lg.value, opt, gap0);
    if (r <= stop.eta) return {h, i, r};
  }
  throw ConvergenceError(
      fmt::format("local solver did not reach eta = {} within {} iterations", stop.eta, max_iter));
}

LocalResult solve_local_sgd(const Surrogate& G, double delta, const LocalStop& stop,
                            int batch_size, std::uint64_t seed, double oracle_tol, int max_iter) {
  const int n = static_cast<int>(G.data->size());
  if (batch_size < 1 || batch_size > n)
    throw InputError(fmt::format("batch size {} outside [1, {}]", batch_size, n));
  if (batch_size == n) {
    auto full = [&G](const Vec& h) { return G.eval(h); };
    return solve_local(full, G.data->dim(), delta, stop, oracle_tol, max_iter);
  }

  std::mt19937_64 rng(seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<int> batch(static_cast<std::size_t>(batch_size));
  auto next_batch = [&] {
    for (auto& idx : batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      idx = order[cursor++];
    }
  };

  Vec h = Vec::Zero(static_cast<Eigen::Index>(G.data->dim()));
  if (stop.kind == LocalStop::Kind::fixed_iters) {
    for (int i = 0; i < stop.iters; ++i) {
      next_batch();
      h -= delta * G.eval_batch(h, batch).grad;
    }
    return {h, stop.iters, std::numeric_limits<double>::quiet_NaN()};
  }

  auto full = [&G](const Vec& x) { return G.eval(x); };
  const LossGrad start = G.eval(h);
  if (start.grad.norm() <= oracle_tol) return {h, 0, 0.0};
  const double opt = reference_value(full, h, delta, oracle_tol, max_iter);
  const double gap0 = start.value - opt;
  if (!(gap0 > 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(opt))))
    return {h, 0, 0.0};
  for (int i = 1; i <= max_iter; ++i) {
    next_batch();
    h -= delta * G.eval_batch(h, batch).grad;
    const double r = ratio(G.eval(h).value, opt, gap0);
    if (r <= stop.eta) return {h, i, r};
  }
  throw ConvergenceError(
      fmt::format("mini-batch solver did not reach eta = {} within {} iterations", stop.eta,
                  max_iter));
}

Vec reference_minimizer(const LossModel& model, const std::vector<UserDataset>& users) {
  if (users.empty()) throw InputError("no users");
  const auto d = static_cast<Eigen::Index>(users.front().dim());
  Eigen::Index rows = 0;
  for (const auto& u : users) {
    if (static_cast<Eigen::Index>(u.dim()) != d) throw InputError("users disagree on dimension");
    rows += static_cast<Eigen::Index>(u.size());
  }

  if (model.kind == LossKind::linear_regression) {
    // (1/D) X'X w - (1/D) X'y + gamma (w - anchor) = 0
    Mat X(rows, d);
    Vec y(rows);
    Eigen::Index r = 0;
    for (const auto& u : users) {
      X.middleRows(r, u.X.rows()) = u.X;
      y.segment(r, u.y.size()) = u.y;
      r += u.X.rows();
    }
    if (model.proximal_gamma <= 0) return X.completeOrthogonalDecomposition().solve(y);
    const double D = static_cast<double>(rows);
    Mat H = X.transpose() * X / D + model.proximal_gamma * Mat::Identity(d, d);
    Vec rhs = X.transpose() * y / D;
    if (model.anchor.size()) rhs += model.proximal_gamma * model.anchor;
    return H.ldlt().solve(rhs);
  }

  // Newton with backtracking on the weighted global loss
  Vec w = Vec::Zero(d);
  double D = 0.0;
  for (const auto& u : users) D += static_cast<double>(u.size());
  const double sign = model.kind == LossKind::negated_logistic ? -1.0 : 1.0;
  for (int it = 0; it < 200; ++it) {
    const LossGrad lg = global_loss_and_grad(model, users, w);
    if (lg.grad.norm() <= 1e-13) return w;
    Mat H = Mat::Zero(d, d);
    for (const auto& u : users) {
      const Vec m = u.X * w;
      Vec s(m.size());
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double p = sigmoid(-u.y(i) * m(i));
        s(i) = sign * p * (1 - p);
      }
      H += u.X.transpose() * s.asDiagonal() * u.X / D;
    }
    if (model.proximal_gamma > 0) H += model.proximal_gamma * Mat::Identity(d, d);
    const Eigen::LDLT<Mat> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw DomainError("reference Newton: Hessian not positive definite (enable the proximal term)");
    const Vec step = ldlt.solve(lg.grad);
    double t = 1.0;
    while (t > 1e-12 && global_loss(model, users, w - t * step) > lg.value - 0.25 * t * lg.grad.dot(step))
      t *= 0.5;
    w -= t * step;
    if (t <= 1e-12) return w;
  }
  return w;
}

TrainingTrace run_dane(const LossModel& model, const std::vector<UserDataset>& users,
                       const DaneConfig& config, const Vec& w0_in) {
  if (users.empty()) throw InputError("no users");
  const std::size_t K = users.size();
  const auto d = static_cast<Eigen::Index>(users.front().dim());
  for (const auto& u : users) {
    if (static_cast<Eigen::Index>(u.dim()) != d) throw InputError("users disagree on dimension");
    if (u.size() == 0) throw InputError("user with no samples");
  }
  if (config.local_solver == DaneConfig::Solver::sgd) {
    std::size_t min_d = users.front().size();
    for (const auto& u : users) min_d = std::min(min_d, u.size());
    if (config.batch_size < 1 || static_cast<std::size_t>(config.batch_size) > min_d)
      throw InputError(fmt::format("batch size {} outside [1, {}]", config.batch_size, min_d));
  }

  TrainingTrace trace;
  const Vec w_star = reference_minimizer(model, users);
  trace.optimal_loss = global_loss(model, users, w_star);

  Vec w = w0_in.size() ? w0_in : Vec::Zero(d);
  LossGrad global = global_loss_and_grad(model, users, w);
  trace.global_loss.push_back(global.value);
  trace.w.push_back(w);
  const double gap0 = global.value - trace.optimal_loss;
  const double target = config.fl.global_accuracy * gap0;
  if (gap0 <= 0) {
    trace.rounds_to_eps0 = 0;
    return trace;
  }

  double xi = config.fl.xi;
  int stalls = 0;
  int increases = 0;
  std::vector<Vec> steps(K);
  std::vector<int> iters(K);
  std::vector<double> acc(K);

  for (int round = 1; round <= config.max_rounds; ++round) {
    trace.xi.push_back(xi);
    for_each_index(config.exec, K, [&](std::size_t k) {
      const Vec local_grad = loss_and_grad(model, w, users[k]).grad;
      const Surrogate G = make_surrogate(model, users[k], w, global.grad, local_grad, xi);
      LocalResult res;
      if (config.local_solver == DaneConfig::Solver::sgd) {
        std::seed_seq seq{config.seed, static_cast<std::uint64_t>(round),
                          static_cast<std::uint64_t>(k)};
        std::uint32_t words[2];
        seq.generate(words, words + 2);
        const std::uint64_t s = (std::uint64_t{words[0]} << 32) | words[1];
        res = solve_local_sgd(G, config.fl.step_size, config.local_stop, config.batch_size, s,
                              config.oracle_tol);
      } else {
        auto obj = [&G](const Vec& h) { return G.eval(h); };
        res = solve_local(obj, static_cast<std::size_t>(d), config.fl.step_size,
                          config.local_stop, config.oracle_tol);
      }
      steps[k] = std::move(res.h);
      iters[k] = res.iters;
      acc[k] = res.measured_eta;
    });

    Vec sum = Vec::Zero(d);
    for (const auto& h : steps) sum += h;
    w += sum / static_cast<double>(K);
    trace.w.push_back(w);
    trace.local_iters.push_back(iters);
    trace.measured_local_accuracy.push_back(acc);

    const double previous = global.value;
    global = global_loss_and_grad(model, users, w);
    trace.global_loss.push_back(global.value);

    if (global.value - trace.optimal_loss <= target) {
      trace.rounds_to_eps0 = round;
      return trace;
    }

    if (global.value > previous) {
      if (++increases >= 5)
        throw DivergenceError(fmt::format(
            "global loss increased for 5 consecutive rounds (round {}, xi = {})", round, xi));
    } else {
      increases = 0;
    }
    if (global.value >= previous) {
      if (config.adaptive_xi && ++stalls >= 3) {
        xi *= 0.5;
        stalls = 0;
        trace.events.push_back(fmt::format("round {}: xi halved to {}", round, xi));
      }
    } else {
      stalls = 0;
    }
  }
  trace.events.push_back(fmt::format("stopped at max_rounds = {}", config.max_rounds));
  return trace;
}

constexpr Eigen::Index kDenseEigenMax = 2000;

double power_iteration(const Mat& A, double tol, int max_iter) {
  const auto n = A.rows();
  if (n == 0) return 0.0;
  // deterministic, non-symmetric start so no eigenvector is orthogonal to it by accident
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
  x.normalize();
  double lambda = x.dot(A * x);
  for (int it = 0; it < max_iter; ++it) {
    Vec y = A * x;
    const double norm = y.norm();
    if (norm == 0) return 0.0;
    x = y / norm;
    const double next = x.dot(A * x);
    if (std::abs(next - lambda) <= tol * std::max(std::abs(next), 1e-300)) return next;
    lambda = next;
  }
  return lambda;
}

Curvature estimate_curvature(const LossModel& model, const std::vector<UserDataset>& users,
                             double tol) {
  if (users.empty()) throw InputError("no users");
  double L = 0.0;
  double gamma = std::numeric_limits<double>::infinity();
  for (const auto& u : users) {
    const Mat H = u.X.transpose() * u.X / static_cast<double>(u.size());
    double top, bottom;
    if (H.rows() <= kDenseEigenMax) {
      // shifted power iteration only resolves bottom to about tol * top
      const Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
      top = es.eigenvalues().maxCoeff();
      bottom = std::max(0.0, es.eigenvalues().minCoeff());
    } else {
      top = power_iteration(H, tol);
      const Mat shifted = top * Mat::Identity(H.rows(), H.cols()) - H;
      bottom = std::max(0.0, top - power_iteration(shifted, tol));
    }
    L = std::max(L, top);
    if (model.kind == LossKind::linear_regression) gamma = std::min(gamma, bottom);
  }
  if (model.kind == LossKind::linear_regression) {
    L += std::max(0.0, model.proximal_gamma);
    gamma += std::max(0.0, model.proximal_gamma);
  } else {
    L = 0.25 * L + std::max(0.0, model.proximal_gamma);
    gamma = std::max(0.0, model.proximal_gamma);
  }
  return {L, gamma, gamma < 1e-12};
}

std::vector<UserDataset> partition(const UserDataset& pool, int K, const PartitionMode& mode,
                                   std::uint64_t seed) {
  if (K < 1) throw InputError("K must be at least 1");
  const auto N = static_cast<Eigen::Index>(pool.size());
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(N));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);

  auto take = [&](auto begin, auto end) {
    const std::vector<Eigen::Index> rows(begin, end);
    return UserDataset{pool.X(rows, Eigen::all), pool.y(rows)};
  };

  std::vector<UserDataset> out;
  out.reserve(static_cast<std::size_t>(K));
  if (mode.kind == PartitionMode::Kind::iid) {
    if (N % K != 0)
      throw InputError(fmt::format("{} samples do not split into {} equal parts", N, K));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto part = N / K;
    for (int k = 0; k < K; ++k) out.push_back(take(idx.begin() + k * part, idx.begin() + (k + 1) * part));
    return out;
  }

  const long long shards = static_cast<long long>(K) * mode.shards_per_user;
  if (mode.shards_per_user < 1 || mode.shard_size < 1 || shards * mode.shard_size != N)
    throw InputError(fmt::format("{} users x {} shards x {} samples does not match {} samples", K,
                                 mode.shards_per_user, mode.shard_size, N));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return pool.y(a) < pool.y(b); });
  std::vector<long long> shard_ids(static_cast<std::size_t>(shards));
  std::iota(shard_ids.begin(), shard_ids.end(), 0LL);
  std::shuffle(shard_ids.begin(), shard_ids.end(), rng);
  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> rows;
    for (int j = 0; j < mode.shards_per_user; ++j) {
      const long long s = shard_ids[static_cast<std::size_t>(k * mode.shards_per_user + j)];
      rows.insert(rows.end(), idx.begin() + s * mode.shard_size,
                  idx.begin() + (s + 1) * mode.shard_size);
    }
    out.push_back(take(rows.begin(), rows.end()));
  }
  return out;
}

}  // namespace fedwire::fl_sim
