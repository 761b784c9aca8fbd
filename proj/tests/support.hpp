#pragma once

// Small problems with hand-checkable behaviour, shared by the unit tests.

#include <cmath>
#include <memory>
#include <random>

#include <iwr/engine.hpp>

namespace iwr::test {

/// n components with f_i = 0 and d_i = 0 in dimension p.
inline FiniteSumProblem zero_problem(std::size_t n, std::size_t p) {
  std::vector<ComponentOracle> comps(n);
  for (auto& c : comps) {
    c.value = [](const Vector&) { return 0.0; };
    c.direction = [](const Vector& x) -> Vector { return Vector::Zero(x.size()); };
    c.lipschitz_value = 0.0;
    c.lipschitz_gradient = 0.0;
    c.generators = [](const Vector& x) { return std::vector<Vector>{Vector::Zero(x.size())}; };
  }
  return FiniteSumProblem(std::move(comps), p, 0.0);
}

/// f(x) = <c, x>: constant gradient, L = 0.
inline FiniteSumProblem linear_problem(const Vector& c) {
  ComponentOracle comp;
  comp.value = [c](const Vector& x) { return c.dot(x); };
  comp.direction = [c](const Vector&) -> Vector { return c; };
  comp.lipschitz_value = c.norm();
  comp.lipschitz_gradient = 0.0;
  comp.generators = [c](const Vector&) { return std::vector<Vector>{c}; };
  return FiniteSumProblem({comp}, static_cast<std::size_t>(c.size()));
}

/// n = 1, f(x) = sum_j (sqrt(1 + x_j^2) - 1): bounded gradient (M^2 = p), L = 1,
/// unique minimizer 0.
inline FiniteSumProblem pseudo_huber(std::size_t p) {
  ComponentOracle comp;
  comp.value = [](const Vector& x) { return ((1.0 + x.array().square()).sqrt() - 1.0).sum(); };
  comp.direction = [](const Vector& x) -> Vector { return x.array() / (1.0 + x.array().square()).sqrt(); };
  comp.lipschitz_value = std::sqrt(static_cast<double>(p));
  comp.lipschitz_gradient = 1.0;
  comp.generators = [d = comp.direction](const Vector& x) { return std::vector<Vector>{d(x)}; };
  return FiniteSumProblem({comp}, p, 0.0);
}

/// Direction turns NaN once x exceeds 1, to exercise aborts.
inline FiniteSumProblem exploding_problem() {
  ComponentOracle comp;
  comp.value = [](const Vector& x) { return -x(0); };
  comp.direction = [](const Vector& x) -> Vector {
    Vector d(1);
    d(0) = x(0) > 1.0 ? std::numeric_limits<double>::quiet_NaN() : -1.0;
    return d;
  };
  comp.lipschitz_value = 1.0;
  return FiniteSumProblem({comp, comp}, 1);
}

inline std::shared_ptr<const FiniteSumProblem> share(FiniteSumProblem problem) {
  return std::make_shared<const FiniteSumProblem>(std::move(problem));
}

inline RunConfig make_config(std::shared_ptr<const FiniteSumProblem> problem, StepStrategy strategy,
                             std::size_t epochs, EvalPointPolicy policy = EvalPointPolicy::incremental(),
                             PermutationPolicy permutation = PermutationPolicy::identity()) {
  RunConfig c;
  c.x0 = Vector::Zero(static_cast<Eigen::Index>(problem->p()));
  c.problem = std::move(problem);
  c.strategy = strategy;
  c.eval_policy = policy;
  c.permutation = std::move(permutation);
  c.epochs = epochs;
  return c;
}

/// The seeded logistic instance used across tests and acceptance runs.
inline std::shared_ptr<const FiniteSumProblem> logistic_32x5(std::uint64_t seed = 1) {
  return share(make_problem(ProblemKind::logistic, 32, 5, seed));
}

inline Vector gaussian_vector(std::mt19937_64& rng, std::size_t p, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector x(static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = normal(rng);
  return x;
}

}  // namespace iwr::test
