#include "iwr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace iwr {

namespace {

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sign0(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

// max_t |sigma''(t)| = sqrt(3)/18
constexpr double kSigmoidCurvature = 0.096225044864937627;

void append_unique(std::vector<Vector>& out, Vector v) {
  for (const auto& u : out) {
    if (u == v) return;
  }
  out.push_back(std::move(v));
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::logistic: return "logistic";
    case ProblemKind::sigmoid_nonconvex: return "sigmoid_nonconvex";
    case ProblemKind::median: return "median";
    case ProblemKind::relu_net: return "relu_net";
    case ProblemKind::custom: return "custom";
  }
  return "custom";
}

ProblemKind parse_problem_kind(std::string_view name) {
  for (auto k : {ProblemKind::logistic, ProblemKind::sigmoid_nonconvex, ProblemKind::median,
                 ProblemKind::relu_net}) {
    if (name == to_string(k)) return k;
  }
  throw InvalidArgument("unknown problem kind '" + std::string(name) + "'");
}

double SolutionBox::distance(const Vector& x) const {
  const Vector clamped = x.cwiseMax(lower).cwiseMin(upper);
  return (x - clamped).norm();
}

ProblemConstants recompute_constants(const std::vector<ComponentOracle>& components) {
  ProblemConstants out;
  const double n = static_cast<double>(components.size());
  double m2 = 0.0;
  double lsum = 0.0;
  bool smooth = true;
  for (const auto& c : components) {
    m2 += c.lipschitz_value * c.lipschitz_value;
    if (c.lipschitz_gradient) {
      lsum += *c.lipschitz_gradient;
    } else {
      smooth = false;
    }
  }
  out.M = std::sqrt(m2 / n);
  if (smooth) out.L = lsum / n;
  return out;
}

FiniteSumProblem::FiniteSumProblem(std::vector<ComponentOracle> components, std::size_t dim,
                                   std::optional<double> f_star_lower,
                                   std::optional<SolutionBox> known_solution)
    : components_(std::move(components)),
      dim_(dim),
      f_star_lower_(f_star_lower),
      known_solution_(std::move(known_solution)) {
  require(!components_.empty(), "a finite-sum problem needs at least one component");
  require(dim_ >= 1, "problem dimension must be at least 1");
  for (const auto& c : components_) {
    require(static_cast<bool>(c.value) && static_cast<bool>(c.direction),
            "every component needs value and direction oracles");
    require(c.lipschitz_value >= 0.0, "component Lipschitz constants must be nonnegative");
    require(!c.lipschitz_gradient || *c.lipschitz_gradient >= 0.0,
            "gradient Lipschitz constants must be nonnegative");
  }
  const auto constants = recompute_constants(components_);
  M_ = constants.M;
  L_ = constants.L;
}

bool FiniteSumProblem::has_generators() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](const ComponentOracle& c) { return c.has_generators(); });
}

FiniteSumProblem FiniteSumProblem::with_data(ProblemData data) const {
  FiniteSumProblem copy = *this;
  copy.data_ = std::make_shared<const ProblemData>(std::move(data));
  return copy;
}

double full_value(const FiniteSumProblem& problem, const Vector& x) {
  require(static_cast<std::size_t>(x.size()) == problem.p(), "point dimension does not match problem");
  double sum = 0.0;
  for (const auto& c : problem.components()) sum += c.value(x);
  return sum / static_cast<double>(problem.n());
}

Vector full_direction(const FiniteSumProblem& problem, const Vector& x) {
  require(static_cast<std::size_t>(x.size()) == problem.p(), "point dimension does not match problem");
  Vector sum = Vector::Zero(x.size());
  for (const auto& c : problem.components()) sum += c.direction(x);
  return sum / static_cast<double>(problem.n());
}

std::vector<Vector> generator_set(const FiniteSumProblem& problem, const Vector& x,
                                  std::size_t max_size) {
  require(static_cast<std::size_t>(x.size()) == problem.p(), "point dimension does not match problem");
  std::vector<Vector> sums{Vector::Zero(x.size())};
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const auto& c = problem.component(i);
    if (!c.has_generators()) {
      throw UnsupportedProblem("component " + std::to_string(i) + " exposes no generator set");
    }
    const auto gens = c.generators(x);
    if (gens.empty()) throw UnsupportedProblem("empty generator set");
    std::vector<Vector> next;
    next.reserve(sums.size() * gens.size());
    for (const auto& s : sums) {
      for (const auto& g : gens) append_unique(next, s + g);
      if (next.size() > max_size) throw UnsupportedProblem("generator set too large");
    }
    sums = std::move(next);
  }
  const double n = static_cast<double>(problem.n());
  std::vector<Vector> out;
  out.reserve(sums.size());
  for (auto& s : sums) append_unique(out, s / n);
  return out;
}

// ---------------------------------------------------------------------------
// Problem classes

FiniteSumProblem make_logistic(Matrix features, Vector labels) {
  require(features.rows() == labels.size(), "features and labels disagree on n");
  require(features.rows() >= 1 && features.cols() >= 1, "logistic problem needs n, p >= 1");
  auto A = std::make_shared<const Matrix>(std::move(features));
  auto b = std::make_shared<const Vector>(std::move(labels));
  std::vector<ComponentOracle> comps;
  for (Eigen::Index i = 0; i < A->rows(); ++i) {
    ComponentOracle c;
    c.value = [A, b, i](const Vector& x) { return softplus(-(*b)(i) * A->row(i).dot(x)); };
    c.direction = [A, b, i](const Vector& x) -> Vector {
      const double bi = (*b)(i);
      const double s = sigmoid(-bi * A->row(i).dot(x));
      return (-bi * s) * A->row(i).transpose();
    };
    const double norm = A->row(i).norm();
    c.lipschitz_value = norm;
    c.lipschitz_gradient = norm * norm / 4.0;
    c.generators = [d = c.direction](const Vector& x) { return std::vector<Vector>{d(x)}; };
    comps.push_back(std::move(c));
  }
  return FiniteSumProblem(std::move(comps), static_cast<std::size_t>(A->cols()), 0.0);
}

FiniteSumProblem make_sigmoid_nonconvex(Matrix features, Vector labels) {
  require(features.rows() == labels.size(), "features and labels disagree on n");
  require(features.rows() >= 1 && features.cols() >= 1, "sigmoid problem needs n, p >= 1");
  auto A = std::make_shared<const Matrix>(std::move(features));
  auto b = std::make_shared<const Vector>(std::move(labels));
  std::vector<ComponentOracle> comps;
  for (Eigen::Index i = 0; i < A->rows(); ++i) {
    ComponentOracle c;
    c.value = [A, b, i](const Vector& x) { return sigmoid(-(*b)(i) * A->row(i).dot(x)); };
    c.direction = [A, b, i](const Vector& x) -> Vector {
      const double bi = (*b)(i);
      const double s = sigmoid(-bi * A->row(i).dot(x));
      return (-bi * s * (1.0 - s)) * A->row(i).transpose();
    };
    const double norm = A->row(i).norm();
    c.lipschitz_value = norm / 4.0;
    c.lipschitz_gradient = norm * norm * kSigmoidCurvature;
    c.generators = [d = c.direction](const Vector& x) { return std::vector<Vector>{d(x)}; };
    comps.push_back(std::move(c));
  }
  return FiniteSumProblem(std::move(comps), static_cast<std::size_t>(A->cols()), 0.0);
}

FiniteSumProblem make_median(Matrix anchors) {
  require(anchors.rows() >= 1 && anchors.cols() >= 1, "median problem needs n, p >= 1");
  auto B = std::make_shared<const Matrix>(std::move(anchors));
  const auto p = B->cols();
  std::vector<ComponentOracle> comps;
  for (Eigen::Index i = 0; i < B->rows(); ++i) {
    ComponentOracle c;
    c.value = [B, i](const Vector& x) { return (x - B->row(i).transpose()).cwiseAbs().sum(); };
    c.direction = [B, i](const Vector& x) -> Vector {
      Vector d(x.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) d(j) = sign0(x(j) - (*B)(i, j));
      return d;
    };
    c.lipschitz_value = std::sqrt(static_cast<double>(p));
    c.generators = [B, i](const Vector& x) {
      std::vector<Vector> gens{Vector::Zero(x.size())};
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double s = sign0(x(j) - (*B)(i, j));
        if (s != 0.0) {
          for (auto& g : gens) g(j) = s;
          continue;
        }
        const std::size_t count = gens.size();
        for (std::size_t k = 0; k < count; ++k) {
          Vector other = gens[k];
          gens[k](j) = -1.0;
          other(j) = 1.0;
          gens.push_back(std::move(other));
        }
      }
      return gens;
    };
    comps.push_back(std::move(c));
  }

  // Coordinatewise median interval of the anchors.
  const auto n = B->rows();
  SolutionBox box{Vector(p), Vector(p)};
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> col(B->col(j).data(), B->col(j).data() + n);
    std::sort(col.begin(), col.end());
    if (n % 2 == 1) {
      box.lower(j) = box.upper(j) = col[static_cast<std::size_t>(n / 2)];
    } else {
      box.lower(j) = col[static_cast<std::size_t>(n / 2 - 1)];
      box.upper(j) = col[static_cast<std::size_t>(n / 2)];
    }
  }
  return FiniteSumProblem(std::move(comps), static_cast<std::size_t>(p), 0.0, std::move(box));
}

namespace {

struct ReluEval {
  double output = 0.0;
  Vector preactivation;
};

ReluEval relu_forward(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Vector& x, std::size_t hidden) {
  const auto q = a.size();
  ReluEval out;
  out.preactivation.resize(static_cast<Eigen::Index>(hidden));
  for (std::size_t k = 0; k < hidden; ++k) {
    const double t = a.dot(x.segment(static_cast<Eigen::Index>(k) * q, q));
    out.preactivation(static_cast<Eigen::Index>(k)) = t;
    const double sk = (k % 2 == 0) ? 1.0 : -1.0;
    out.output += sk * std::max(t, 0.0);
  }
  out.output /= static_cast<double>(hidden);
  return out;
}

}  // namespace

FiniteSumProblem make_relu_net(Matrix features, Vector targets, std::size_t hidden) {
  require(features.rows() == targets.size(), "features and targets disagree on n");
  require(features.rows() >= 1 && features.cols() >= 1, "relu_net needs n, q >= 1");
  require(hidden >= 1 && hidden <= 16, "relu_net supports 1..16 hidden units");
  auto A = std::make_shared<const Matrix>(std::move(features));
  auto y = std::make_shared<const Vector>(std::move(targets));
  const auto q = A->cols();
  const auto p = static_cast<std::size_t>(q) * hidden;
  const double H = static_cast<double>(hidden);

  std::vector<ComponentOracle> comps;
  for (Eigen::Index i = 0; i < A->rows(); ++i) {
    ComponentOracle c;
    c.value = [A, y, i, hidden](const Vector& x) {
      return std::abs(relu_forward(A->row(i), x, hidden).output - (*y)(i));
    };
    // Reverse-mode selection with relu'(0) = 0 and sign(0) = 0.
    c.direction = [A, y, i, hidden, q, H](const Vector& x) -> Vector {
      const auto fwd = relu_forward(A->row(i), x, hidden);
      const double r = sign0(fwd.output - (*y)(i));
      Vector d = Vector::Zero(x.size());
      if (r == 0.0) return d;
      for (std::size_t k = 0; k < hidden; ++k) {
        if (fwd.preactivation(static_cast<Eigen::Index>(k)) > 0.0) {
          const double sk = (k % 2 == 0) ? 1.0 : -1.0;
          d.segment(static_cast<Eigen::Index>(k) * q, q) = (r * sk / H) * A->row(i).transpose();
        }
      }
      return d;
    };
    // Output weights are fixed, so ||d_i|| <= ||a_i|| / sqrt(H) on all of R^p.
    c.lipschitz_value = A->row(i).norm() / std::sqrt(H);
    c.generators = [A, y, i, hidden, q, H](const Vector& x) {
      const auto fwd = relu_forward(A->row(i), x, hidden);
      const double r = sign0(fwd.output - (*y)(i));
      std::vector<double> residual_signs = r == 0.0 ? std::vector<double>{-1.0, 1.0} : std::vector<double>{r};
      std::vector<std::size_t> ties;
      for (std::size_t k = 0; k < hidden; ++k) {
        if (fwd.preactivation(static_cast<Eigen::Index>(k)) == 0.0) ties.push_back(k);
      }
      std::vector<Vector> gens;
      const std::size_t patterns = std::size_t{1} << ties.size();
      for (double s : residual_signs) {
        for (std::size_t mask = 0; mask < patterns; ++mask) {
          Vector d = Vector::Zero(x.size());
          for (std::size_t k = 0; k < hidden; ++k) {
            bool active = fwd.preactivation(static_cast<Eigen::Index>(k)) > 0.0;
            const auto tie = std::find(ties.begin(), ties.end(), k);
            if (tie != ties.end()) active = (mask >> (tie - ties.begin())) & 1U;
            if (!active) continue;
            const double sk = (k % 2 == 0) ? 1.0 : -1.0;
            d.segment(static_cast<Eigen::Index>(k) * q, q) = (s * sk / H) * A->row(i).transpose();
          }
          append_unique(gens, std::move(d));
        }
      }
      return gens;
    };
    comps.push_back(std::move(c));
  }
  return FiniteSumProblem(std::move(comps), p, 0.0);
}

std::size_t relu_hidden_units(std::size_t p) {
  std::size_t best = 1;
  for (std::size_t h = 1; h <= std::min<std::size_t>(16, p); ++h) {
    if (p % h == 0) best = h;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Seeded zoo

namespace {

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

// Gaussian inputs labelled by a random linear teacher, with 10% of labels
// flipped so that the data is not linearly separable in general.
std::pair<Matrix, Vector> teacher_classification(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  Matrix A = gaussian_matrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  const Vector teacher = gaussian_matrix(rng, static_cast<Eigen::Index>(p), 1).col(0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector b(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double margin = A.row(i).dot(teacher);
    double label = margin >= 0.0 ? 1.0 : -1.0;
    if (unif(rng) < 0.1) label = -label;
    b(i) = label;
  }
  return {std::move(A), std::move(b)};
}

}  // namespace

FiniteSumProblem make_problem(ProblemKind kind, std::size_t n, std::size_t p, std::uint64_t seed) {
  require(n >= 1, "n must be at least 1");
  require(p >= 1, "p must be at least 1");
  std::mt19937_64 rng(seed);
  ProblemData data;
  data.kind = kind;
  data.seed = seed;
  switch (kind) {
    case ProblemKind::logistic:
    case ProblemKind::sigmoid_nonconvex: {
      auto [A, b] = teacher_classification(rng, n, p);
      data.features = std::move(A);
      data.targets = std::move(b);
      break;
    }
    case ProblemKind::median:
      data.features = gaussian_matrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
      break;
    case ProblemKind::relu_net: {
      const std::size_t hidden = relu_hidden_units(p);
      const auto q = static_cast<Eigen::Index>(p / hidden);
      Matrix A = gaussian_matrix(rng, static_cast<Eigen::Index>(n), q);
      const Vector teacher = gaussian_matrix(rng, static_cast<Eigen::Index>(p), 1).col(0);
      Vector y(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = relu_forward(A.row(i), teacher, hidden).output;
      data.features = std::move(A);
      data.targets = std::move(y);
      data.hidden = hidden;
      break;
    }
    case ProblemKind::custom:
      throw InvalidArgument("make_problem cannot build a custom problem");
  }
  return make_problem_from_data(std::move(data));
}

FiniteSumProblem make_problem_from_data(ProblemData data) {
  switch (data.kind) {
    case ProblemKind::logistic:
      return make_logistic(data.features, data.targets).with_data(data);
    case ProblemKind::sigmoid_nonconvex:
      return make_sigmoid_nonconvex(data.features, data.targets).with_data(data);
    case ProblemKind::median:
      return make_median(data.features).with_data(data);
    case ProblemKind::relu_net:
      return make_relu_net(data.features, data.targets, data.hidden).with_data(data);
    case ProblemKind::custom:
      break;
  }
  throw UnsupportedProblem("custom problems carry no data to rebuild from");
}

double finite_diff_check(const FiniteSumProblem& problem, const Vector& x, double h) {
  if (!problem.smooth()) throw UnsupportedProblem("finite-difference check needs a smooth problem");
  require(h > 0.0, "finite-difference step must be positive");
  const Vector g = full_direction(problem, x);
  double worst = 0.0;
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe(j) = x(j) + h;
    const double up = full_value(problem, probe);
    probe(j) = x(j) - h;
    const double down = full_value(problem, probe);
    probe(j) = x(j);
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g(j)) / std::max(1.0, std::abs(g(j))));
  }
  return worst;
}

}  // namespace iwr
