#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fedwire/error.hpp"
#include "fedwire/fl_sim.hpp"

namespace fedwire::fl_sim {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? std::string{} : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

}  // namespace

UserDataset read_csv(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open dataset '{}'", path));

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t c = 0; c < fields.size(); ++c)
      if (!parse_number(fields[c], values[c])) {
        numeric = false;
        bad = c;
        break;
      }
    if (!numeric) {
      if (rows.empty() && width == 0) {  // header
        width = fields.size();
        continue;
      }
      throw InputError(fmt::format("{}: row {}, column {}: '{}' is not a finite number", path,
                                   lineno, bad + 1, fields[bad]));
    }
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw InputError(fmt::format("{}: row {}: expected {} columns, found {}", path, lineno,
                                   width, values.size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw InputError(fmt::format("{}: no data rows", path));
  if (width < 2) throw InputError(fmt::format("{}: need at least one feature and a target", path));

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width - 1);
  UserDataset out{Mat(n, d), Vec(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) out.X(i, j) = r[static_cast<std::size_t>(j)];
    out.y(i) = r.back();
  }
  if (normalize) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double lo = out.X.col(j).minCoeff();
      const double span = out.X.col(j).maxCoeff() - lo;
      // constant columns map to 0
      if (span > 0)
        out.X.col(j) = (out.X.col(j).array() - lo) / span;
      else
        out.X.col(j).setZero();
    }
  }
  return out;
}

UserDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.samples < 1 || spec.dim < 1) throw InputError("synthetic data needs samples and dim >= 1");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(spec.samples);
  const auto d = static_cast<Eigen::Index>(spec.dim);

  Vec w_true(d);
  for (Eigen::Index j = 0; j < d; ++j) w_true(j) = normal(rng);
  UserDataset out{Mat(n, d), Vec(n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out.X(i, j) = normal(rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = out.X.row(i).dot(w_true) + spec.noise * normal(rng);
    out.y(i) = spec.kind == LossKind::linear_regression ? m : (m >= 0 ? 1.0 : -1.0);
  }
  return out;
}

}  // namespace fedwire::fl_sim
