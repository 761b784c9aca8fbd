#pragma once

// Finite-sum problems F(x) = (1/n) sum_i f_i(x) and their component oracles.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "iwr/types.hpp"

namespace iwr {

enum class ProblemKind { logistic, sigmoid_nonconvex, median, relu_net, custom };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view name);

/// One summand f_i with its direction oracle d_i.
///
/// `lipschitz_value` is M_i, a bound on ||d_i(x)|| everywhere. A component is
/// smooth iff `lipschitz_gradient` (L_i) is set, in which case d_i is the
/// gradient. `generators`, when set, returns a finite list whose convex hull
/// is the conservative field D_i(x).
struct ComponentOracle {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> direction;
  double lipschitz_value = 0.0;
  std::optional<double> lipschitz_gradient;
  std::function<std::vector<Vector>(const Vector&)> generators;

  bool smooth() const { return lipschitz_gradient.has_value(); }
  bool has_generators() const { return static_cast<bool>(generators); }
};

/// Coordinatewise box [lower, upper] containing the minimizers; a point when
/// lower == upper.
struct SolutionBox {
  Vector lower;
  Vector upper;

  bool is_point() const { return lower == upper; }
  /// Euclidean distance from x to the box.
  double distance(const Vector& x) const;
};

/// Raw data behind a zoo problem, kept so the problem can be serialized and
/// rebuilt bit for bit.
struct ProblemData {
  ProblemKind kind = ProblemKind::custom;
  std::uint64_t seed = 0;
  Matrix features;    // logistic / sigmoid / relu_net: n x q inputs; median: n x p anchors
  Vector targets;     // labels in {-1, +1} or regression targets; unused for median
  std::size_t hidden = 0;  // relu_net hidden units
};

/// Immutable after construction; shareable across threads.
class FiniteSumProblem {
 public:
  FiniteSumProblem(std::vector<ComponentOracle> components, std::size_t dim,
                   std::optional<double> f_star_lower = std::nullopt,
                   std::optional<SolutionBox> known_solution = std::nullopt);

  std::size_t n() const { return components_.size(); }
  std::size_t p() const { return dim_; }

  const ComponentOracle& component(std::size_t i) const { return components_.at(i); }
  const std::vector<ComponentOracle>& components() const { return components_; }

  /// M = sqrt((1/n) sum_i M_i^2).
  double M() const { return M_; }
  /// L = (1/n) sum_i L_i, present iff every component is smooth.
  std::optional<double> L() const { return L_; }
  bool smooth() const { return L_.has_value(); }
  bool has_generators() const;

  std::optional<double> f_star_lower() const { return f_star_lower_; }
  const std::optional<SolutionBox>& known_solution() const { return known_solution_; }

  /// Zoo problems carry their generating data; custom problems return null.
  const ProblemData* data() const { return data_.get(); }
  ProblemKind kind() const { return data_ ? data_->kind : ProblemKind::custom; }

  FiniteSumProblem with_data(ProblemData data) const;

 private:
  std::vector<ComponentOracle> components_;
  std::size_t dim_;
  double M_;
  std::optional<double> L_;
  std::optional<double> f_star_lower_;
  std::optional<SolutionBox> known_solution_;
  std::shared_ptr<const ProblemData> data_;
};

/// M and L recomputed from the component constants, in the same order the
/// constructor uses.
struct ProblemConstants {
  double M = 0.0;
  std::optional<double> L;
};
ProblemConstants recompute_constants(const std::vector<ComponentOracle>& components);

double full_value(const FiniteSumProblem& problem, const Vector& x);
Vector full_direction(const FiniteSumProblem& problem, const Vector& x);

/// Distinct elements of {(1/n) sum_i g_i : g_i in generators_i(x)}. Throws
/// UnsupportedProblem when a component exposes no generators or when the
/// combination count exceeds `max_size`.
std::vector<Vector> generator_set(const FiniteSumProblem& problem, const Vector& x,
                                  std::size_t max_size = 1 << 14);

/// Deterministic in `seed`. Requires n >= 1, p >= 1.
FiniteSumProblem make_problem(ProblemKind kind, std::size_t n, std::size_t p, std::uint64_t seed);

/// Rebuilds a zoo problem from its raw data, bit for bit.
FiniteSumProblem make_problem_from_data(ProblemData data);

/// f_i(x) = log(1 + exp(-b_i <a_i, x>)) with rows a_i of `features`.
FiniteSumProblem make_logistic(Matrix features, Vector labels);
/// f_i(x) = 1 / (1 + exp(b_i <a_i, x>)), a smooth nonconvex loss.
FiniteSumProblem make_sigmoid_nonconvex(Matrix features, Vector labels);
/// f_i(x) = sum_j |x_j - b_ij|, rows b_i of `anchors`.
FiniteSumProblem make_median(Matrix anchors);
/// f_i(W) = |(1/H) sum_k s_k relu(<w_k, a_i>) - y_i| with fixed output signs
/// s_k = (-1)^k and trainable first-layer weights W (H x q, row-major in x).
FiniteSumProblem make_relu_net(Matrix features, Vector targets, std::size_t hidden);

/// Hidden-unit count used by make_problem(relu_net, ...) for dimension p.
std::size_t relu_hidden_units(std::size_t p);

/// Max over coordinates of the relative error between central differences of
/// full_value and full_direction. Requires a smooth problem and h > 0.
double finite_diff_check(const FiniteSumProblem& problem, const Vector& x, double h);

}  // namespace iwr
