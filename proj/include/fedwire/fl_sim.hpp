#pragma once

// DANE-style federated training: each round users minimize a gradient-
// corrected local surrogate with gradient descent and the server averages
// the steps. Instrumented to measure local accuracy and rounds to eps0.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedwire/exec.hpp"
#include "fedwire/model.hpp"

namespace fedwire::fl_sim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One user's samples, one row per sample.
struct UserDataset {
  Mat X;
  Vec y;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
};

enum class LossKind {
  linear_regression,    ///< 1/2 (x'w - y)^2
  logistic_regression,  ///< log(1 + exp(-y x'w)), y in {-1, +1}
  negated_logistic,     ///< -log(1 + exp(-y x'w)); concave, needs the proximal term
};

struct LossModel {
  LossKind kind = LossKind::linear_regression;
  double proximal_gamma = 0.0;  ///< adds gamma/2 |w - anchor|^2 when > 0
  Vec anchor;                   ///< empty means the origin
};

struct LossGrad {
  double value;
  Vec grad;
};

/// F_k(w) = (1/D_k) sum_l f(w, x_l, y_l), plus the proximal term.
LossGrad loss_and_grad(const LossModel& model, const Vec& w, const UserDataset& data);

/// Same over a subset of rows (mini-batch).
LossGrad loss_and_grad(const LossModel& model, const Vec& w, const UserDataset& data,
                       const std::vector<int>& rows);

/// F(w) = sum_k (D_k / D) F_k(w)
double global_loss(const LossModel& model, const std::vector<UserDataset>& users, const Vec& w);
LossGrad global_loss_and_grad(const LossModel& model, const std::vector<UserDataset>& users,
                              const Vec& w);

/// G_k(h) = F_k(w_n + h) - (grad F_k(w_n) - xi grad F(w_n))' h
struct Surrogate {
  const LossModel* model;
  const UserDataset* data;
  Vec w_n;
  Vec correction;  ///< grad F_k(w_n) - xi grad F(w_n)

  LossGrad eval(const Vec& h) const;
  LossGrad eval_batch(const Vec& h, const std::vector<int>& rows) const;
};

Surrogate make_surrogate(const LossModel& model, const UserDataset& data, const Vec& w_n,
                         const Vec& global_grad, const Vec& local_grad_at_wn, double xi);

/// Value and h-gradient of the surrogate at h.
LossGrad local_surrogate(const Vec& w_n, const Vec& global_grad, const Vec& local_grad_at_wn,
                         double xi, const Vec& h, const UserDataset& data, const LossModel& model);

struct LocalStop {
  enum class Kind { accuracy_target, fixed_iters };
  Kind kind = Kind::accuracy_target;
  double eta = 0.1;
  int iters = 10;

  static LocalStop accuracy(double eta) { return {Kind::accuracy_target, eta, 0}; }
  static LocalStop fixed(int iters) { return {Kind::fixed_iters, 0.0, iters}; }
};

struct LocalResult {
  Vec h;
  int iters;
  double measured_eta;  ///< (G(h) - G(h*)) / (G(0) - G(h*)); 0 when G(0) is optimal
};

using Objective = std::function<LossGrad(const Vec&)>;

/// Gradient descent h <- h - delta grad G from h = 0. With an accuracy
/// target, stops once G(h) - G(h*) <= eta (G(0) - G(h*)), where h* is a
/// reference run down to gradient norm oracle_tol.
LocalResult solve_local(const Objective& G, std::size_t dim, double delta, const LocalStop& stop,
                        double oracle_tol = 1e-10, int max_iter = 1'000'000);

/// Mini-batch variant: batches drawn without replacement within an epoch,
/// reshuffled each epoch.
LocalResult solve_local_sgd(const Surrogate& G, double delta, const LocalStop& stop,
                            int batch_size, std::uint64_t seed, double oracle_tol = 1e-10,
                            int max_iter = 1'000'000);

struct DaneConfig {
  FlParams fl;
  enum class Solver { gd, sgd };
  Solver local_solver = Solver::gd;
  int batch_size = 0;
  LocalStop local_stop{};
  int max_rounds = 1000;
  std::uint64_t seed = 0;
  bool adaptive_xi = true;   ///< halve xi after 3 rounds without progress
  double oracle_tol = 1e-10;
  Exec exec = Exec::serial;
};

struct TrainingTrace {
  std::vector<double> global_loss;                       ///< includes the initial loss
  std::vector<std::vector<int>> local_iters;             ///< [round][user]
  std::vector<std::vector<double>> measured_local_accuracy;
  std::optional<int> rounds_to_eps0;
  std::vector<double> xi;       ///< value used in each round
  std::vector<Vec> w;           ///< iterates, including w_0
  double optimal_loss = 0.0;    ///< F(w*) from the centralized reference
  std::vector<std::string> events;
};

/// Centralized reference minimizer of F (least squares or Newton).
Vec reference_minimizer(const LossModel& model, const std::vector<UserDataset>& users);

TrainingTrace run_dane(const LossModel& model, const std::vector<UserDataset>& users,
                       const DaneConfig& config, const Vec& w0 = {});

struct Curvature {
  double lipschitz;
  double strong_convexity;
  bool singular;  ///< gamma < 1e-12: strong convexity fails, enable the proximal term
};

/// Extreme eigenvalues of the per-user Hessian bound (dense eigensolver up to
/// 2000 features, power iteration above).
Curvature estimate_curvature(const LossModel& model, const std::vector<UserDataset>& users,
                             double tol = 1e-10);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration(const Mat& A, double tol = 1e-10, int max_iter = 100000);

struct PartitionMode {
  enum class Kind { iid, noniid };
  Kind kind = Kind::iid;
  int shards_per_user = 2;
  int shard_size = 0;
};

std::vector<UserDataset> partition(const UserDataset& pool, int K, const PartitionMode& mode,
                                   std::uint64_t seed);

// ---- data sources ----

/// Features then target per row; header auto-detected when the first line is
/// not numeric. normalize applies per-feature min-max scaling to [0, 1].
UserDataset read_csv(const std::string& path, bool normalize);

struct SyntheticSpec {
  std::size_t samples = 6000;
  std::size_t dim = 10;
  double noise = 0.1;
  LossKind kind = LossKind::linear_regression;
  std::uint64_t seed = 0;
};

/// Gaussian features; linear target x'w_true + noise, or +/-1 labels from
/// the sign of a noisy logit.
UserDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace fedwire::fl_sim
