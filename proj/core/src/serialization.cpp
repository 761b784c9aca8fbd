#include "iwr/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace iwr {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw InvalidArgument("not a number: '" + text + "'");
  return value;
}

namespace {

std::size_t parse_index(const std::string& text) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("not an index: '" + text + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  require(j.is_array() && !j.empty(), "matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, "matrix rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

void write_vector_cells(std::ostream& out, const Vector& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) out << ',' << format_double(v(k));
}

Vector read_vector_cells(const std::vector<std::string>& cells, std::size_t offset, std::size_t p) {
  require(cells.size() >= offset + p, "row too short");
  Vector v(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < p; ++k) v(static_cast<Eigen::Index>(k)) = parse_double(cells[offset + k]);
  return v;
}

}  // namespace

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Vector vector_from_json(const Json& j) {
  require(j.is_array(), "vector must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

Json problem_to_json(const FiniteSumProblem& problem) {
  const auto* data = problem.data();
  if (data == nullptr) throw UnsupportedProblem("only zoo problems can be serialized");
  Json j;
  j["kind"] = std::string(to_string(data->kind));
  j["seed"] = data->seed;
  j["n"] = problem.n();
  j["p"] = problem.p();
  j["features"] = matrix_to_json(data->features);
  j["targets"] = vector_to_json(data->targets);
  j["hidden"] = data->hidden;
  return j;
}

std::shared_ptr<const FiniteSumProblem> problem_from_json(const Json& j) {
  ProblemData data;
  data.kind = parse_problem_kind(j.at("kind").get<std::string>());
  data.seed = get_or<std::uint64_t>(j, "seed", 0);
  data.features = matrix_from_json(j.at("features"));
  data.targets = vector_from_json(j.value("targets", Json::array()));
  data.hidden = get_or<std::size_t>(j, "hidden", 0);
  auto problem = std::make_shared<const FiniteSumProblem>(make_problem_from_data(std::move(data)));
  if (j.contains("n")) require(j["n"].get<std::size_t>() == problem->n(), "problem n disagrees with its data");
  if (j.contains("p")) require(j["p"].get<std::size_t>() == problem->p(), "problem p disagrees with its data");
  return problem;
}

Json strategy_to_json(const StepStrategy& s) {
  Json j;
  j["rule"] = std::string(to_string(s.rule));
  j["n"] = s.n;
  j["alpha"] = s.alpha;
  j["lipschitz"] = s.lipschitz;
  j["delta"] = s.delta;
  j["beta"] = s.beta;
  return j;
}

StepStrategy strategy_from_json(const Json& j) {
  StepStrategy s;
  s.rule = parse_step_rule(j.at("rule").get<std::string>());
  s.n = j.at("n").get<std::size_t>();
  s.alpha = get_or<double>(j, "alpha", 0.0);
  s.lipschitz = get_or<double>(j, "lipschitz", 0.0);
  s.delta = get_or<double>(j, "delta", 0.0);
  s.beta = get_or<double>(j, "beta", 0.0);
  s.validate();
  return s;
}

Json eval_policy_to_json(const EvalPointPolicy& p) {
  Json j;
  j["rule"] = std::string(to_string(p.rule));
  j["batch"] = p.batch;
  j["max_delay"] = p.max_delay;
  j["seed"] = p.seed;
  return j;
}

EvalPointPolicy eval_policy_from_json(const Json& j) {
  EvalPointPolicy p;
  p.rule = parse_eval_rule(j.at("rule").get<std::string>());
  p.batch = get_or<std::size_t>(j, "batch", 1);
  p.max_delay = get_or<std::size_t>(j, "max_delay", 0);
  p.seed = get_or<std::uint64_t>(j, "seed", 0);
  p.validate();
  return p;
}

Json permutation_to_json(const PermutationPolicy& p) {
  Json j;
  j["rule"] = std::string(to_string(p.rule));
  j["fixed"] = p.fixed;
  j["seed"] = p.seed;
  return j;
}

PermutationPolicy permutation_from_json(const Json& j) {
  PermutationPolicy p;
  p.rule = parse_permutation_rule(j.at("rule").get<std::string>());
  p.fixed = j.value("fixed", std::vector<std::size_t>{});
  p.seed = get_or<std::uint64_t>(j, "seed", 0);
  return p;
}

Json run_config_to_json(const RunConfig& c) {
  Json j;
  j["problem"] = problem_to_json(*c.problem);
  j["strategy"] = strategy_to_json(c.strategy);
  j["eval_policy"] = eval_policy_to_json(c.eval_policy);
  j["permutation"] = permutation_to_json(c.permutation);
  j["x0"] = vector_to_json(c.x0);
  j["epochs"] = c.epochs;
  j["record_level"] = std::string(to_string(c.record_level));
  j["monitor_radius"] = nullable(c.monitor_radius);
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  c.problem = problem_from_json(j.at("problem"));
  c.strategy = strategy_from_json(j.at("strategy"));
  c.eval_policy = eval_policy_from_json(j.at("eval_policy"));
  c.permutation = permutation_from_json(j.at("permutation"));
  c.x0 = vector_from_json(j.at("x0"));
  c.epochs = j.at("epochs").get<std::size_t>();
  c.record_level = parse_record_level(j.value("record_level", std::string("full")));
  c.monitor_radius = get_or<double>(j, "monitor_radius", std::numeric_limits<double>::infinity());
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

void write_trace(std::ostream& out, const RunTrace& trace) {
  const auto& cfg = trace.config;
  const std::size_t p = cfg.problem->p();
  Json header;
  header["format"] = "iwr-trace";
  header["version"] = 1;
  header["config"] = run_config_to_json(cfg);
  Json result;
  result["epochs_recorded"] = trace.epochs.size();
  if (trace.abort) {
    result["abort"] = {{"epoch", trace.abort->at.epoch}, {"inner", trace.abort->at.inner},
                       {"reason", trace.abort->reason}};
  } else {
    result["abort"] = nullptr;
  }
  result["radius_exit"] = trace.radius_exit ? Json(*trace.radius_exit) : Json(nullptr);
  result["max_point_norm"] = trace.max_point_norm;
  header["result"] = result;
  out << header.dump() << '\n';

  out << "#points\nK,F,grad_norm_sq";
  for (std::size_t k = 0; k < p; ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t K = 0; K < trace.points.size(); ++K) {
    out << K << ',' << format_double(trace.values[K]) << ',' << format_double(trace.grad_norm_sq[K]);
    write_vector_cells(out, trace.points[K]);
    out << '\n';
  }

  out << "#epochs\nK,alpha_first,alpha_last,alpha_sum,alpha_sq_dnorm_sum,alpha_cube_dnorm_sum,dnorm2_sum,v_end,order\n";
  for (const auto& e : trace.epochs) {
    out << e.K << ',' << format_double(e.alpha_first) << ',' << format_double(e.alpha_last) << ','
        << format_double(e.alpha_sum) << ',' << format_double(e.alpha_sq_dnorm_sum) << ','
        << format_double(e.alpha_cube_dnorm_sum) << ',' << format_double(e.dnorm2_sum) << ','
        << format_double(e.v_end) << ',';
    for (std::size_t k = 0; k < e.order.size(); ++k) out << (k ? " " : "") << e.order[k];
    out << '\n';
  }

  if (trace.has_inner()) {
    out << "#inner\nK,i,component,alpha,dnorm2,v,weights";
    for (const char* block : {"zhat", "d", "z"}) {
      for (std::size_t k = 0; k < p; ++k) out << ',' << block << k;
    }
    out << '\n';
    for (const auto& e : trace.epochs) {
      for (std::size_t i = 1; i <= e.inner.size(); ++i) {
        const auto& r = e.inner[i - 1];
        out << e.K << ',' << i << ',' << r.component << ',' << format_double(r.alpha) << ','
            << format_double(r.dnorm2) << ',' << format_double(r.v) << ',';
        for (std::size_t k = 0; k < r.weights.size(); ++k) {
          out << (k ? ";" : "") << r.weights[k].index << ':' << format_double(r.weights[k].value);
        }
        write_vector_cells(out, r.eval_point);
        write_vector_cells(out, r.direction);
        write_vector_cells(out, r.point);
        out << '\n';
      }
    }
  }
  out << "#end\n";
}

RunTrace read_trace(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty trace file");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("trace header is not JSON: ") + e.what());
  }
  require(header.value("format", std::string()) == "iwr-trace", "not an iwr trace file");
  RunTrace trace;
  trace.config = run_config_from_json(header.at("config"));
  const auto& result = header.at("result");
  if (!result.at("abort").is_null()) {
    const auto& a = result["abort"];
    trace.abort = AbortInfo{{a.at("epoch").get<std::size_t>(), a.at("inner").get<std::size_t>()},
                            a.value("reason", std::string())};
  }
  if (!result.at("radius_exit").is_null()) trace.radius_exit = result["radius_exit"].get<std::size_t>();
  trace.max_point_norm = result.value("max_point_norm", 0.0);
  const std::size_t E = result.at("epochs_recorded").get<std::size_t>();
  const std::size_t p = trace.config.problem->p();
  const std::size_t n = trace.config.problem->n();

  std::string block;
  bool header_row = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      block = line.substr(1);
      header_row = true;
      if (block == "end") break;
      continue;
    }
    if (header_row) {
      header_row = false;
      continue;
    }
    const auto cells = split(line, ',');
    if (block == "points") {
      require(cells.size() == 3 + p, "malformed points row");
      require(parse_index(cells[0]) == trace.points.size(), "points rows out of order");
      trace.values.push_back(parse_double(cells[1]));
      trace.grad_norm_sq.push_back(parse_double(cells[2]));
      trace.points.push_back(read_vector_cells(cells, 3, p));
    } else if (block == "epochs") {
      require(cells.size() == 9, "malformed epochs row");
      EpochRecord e;
      e.K = parse_index(cells[0]);
      require(e.K == trace.epochs.size(), "epoch rows out of order");
      e.alpha_first = parse_double(cells[1]);
      e.alpha_last = parse_double(cells[2]);
      e.alpha_sum = parse_double(cells[3]);
      e.alpha_sq_dnorm_sum = parse_double(cells[4]);
      e.alpha_cube_dnorm_sum = parse_double(cells[5]);
      e.dnorm2_sum = parse_double(cells[6]);
      e.v_end = parse_double(cells[7]);
      for (const auto& s : split(cells[8], ' ')) {
        if (!s.empty()) e.order.push_back(parse_index(s));
      }
      trace.epochs.push_back(std::move(e));
    } else if (block == "inner") {
      require(cells.size() == 7 + 3 * p, "malformed inner row");
      const std::size_t K = parse_index(cells[0]);
      const std::size_t i = parse_index(cells[1]);
      require(K < trace.epochs.size(), "inner row for an unknown epoch");
      auto& e = trace.epochs[K];
      require(i == e.inner.size() + 1 && i <= n, "inner rows out of order");
      InnerRecord r;
      r.component = parse_index(cells[2]);
      r.alpha = parse_double(cells[3]);
      r.dnorm2 = parse_double(cells[4]);
      r.v = parse_double(cells[5]);
      for (const auto& wtxt : split(cells[6], ';')) {
        const auto kv = split(wtxt, ':');
        require(kv.size() == 2, "malformed weight entry");
        r.weights.push_back({parse_index(kv[0]), parse_double(kv[1])});
      }
      r.eval_point = read_vector_cells(cells, 7, p);
      r.direction = read_vector_cells(cells, 7 + p, p);
      r.point = read_vector_cells(cells, 7 + 2 * p, p);
      e.inner.push_back(std::move(r));
    } else {
      throw InvalidArgument("unknown trace block '" + block + "'");
    }
  }
  require(block == "end", "trace file is truncated");
  require(trace.epochs.size() == E && trace.points.size() == E + 1, "trace length disagrees with its header");
  for (std::size_t K = 0; K < E; ++K) {
    trace.epochs[K].x_start = trace.points[K];
    trace.epochs[K].x_end = trace.points[K + 1];
    if (trace.has_inner()) require(trace.epochs[K].inner.size() == n, "incomplete inner block");
  }
  return trace;
}

void write_trace_file(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace(out, trace);
  if (!out) throw std::runtime_error("failed writing " + path);
}

RunTrace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_trace(in);
}

void write_summary_csv(std::ostream& out, const RunTrace& trace) {
  out << "K,F,grad_norm_sq,min_so_far,alpha_first,alpha_last,v\n";
  for (const auto& r : summary(trace)) {
    out << r.K << ',' << format_double(r.value) << ',' << format_double(r.grad_norm_sq) << ','
        << format_double(r.min_so_far) << ',' << format_double(r.alpha_first) << ','
        << format_double(r.alpha_last) << ',' << format_double(r.v) << '\n';
  }
}

void write_bound_csv(std::ostream& out, const BoundReport& report) {
  out << "N,bound,observed,slack,pass\n";
  for (const auto& r : report.rows) {
    out << r.N << ',' << format_double(r.bound) << ',' << format_double(r.observed) << ','
        << format_double(r.slack) << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

Json bound_report_to_json(const BoundReport& report) {
  Json j;
  j["corollary"] = std::string(to_string(report.which));
  j["f0_minus_fstar"] = report.params.f0_minus_fstar;
  j["L"] = report.params.L;
  j["M"] = report.params.M;
  j["alpha"] = report.params.alpha;
  j["N"] = report.params.N;
  j["tolerance"] = report.tolerance;
  j["rows"] = report.rows.size();
  j["pass"] = report.all_pass();
  if (auto f = report.first_failure()) {
    j["first_failure"] = {{"N", f->N}, {"bound", f->bound}, {"observed", f->observed}};
  }
  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& r : report.rows) min_slack = std::min(min_slack, r.slack);
  j["min_slack"] = nullable(min_slack);
  return j;
}

void write_gamma_csv(std::ostream& out, const GammaTrace& gamma) {
  out << "K,tau_start,tau_end,gamma,ratio,max_lambda,lambda_ok\n";
  for (const auto& g : gamma.intervals) {
    out << g.K << ',' << format_double(g.tau_start) << ',' << format_double(g.tau_end) << ','
        << format_double(g.gamma) << ',' << format_double(g.ratio) << ',' << format_double(g.max_lambda) << ','
        << (g.lambda_ok ? 1 : 0) << '\n';
  }
}

void write_criticality_csv(std::ostream& out, const std::vector<std::pair<std::size_t, CriticalityReport>>& rows) {
  out << "K,measure,generator_count";
  if (!rows.empty()) {
    for (Eigen::Index k = 0; k < rows.front().second.point.size(); ++k) out << ",x" << k;
  }
  out << '\n';
  for (const auto& [K, r] : rows) {
    out << K << ',' << format_double(r.measure) << ',' << r.generator_count;
    write_vector_cells(out, r.point);
    out << '\n';
  }
}

}  // namespace iwr
