#include "dynsmpc/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dynsmpc/csv.hpp"

namespace dynsmpc {

ConfigError::ConfigError(const std::string& source, int line, const std::string& detail)
    : std::runtime_error(fmt::format("{}:{}: {}", source, line, detail)), line_(line) {}

namespace {

using Json = nlohmann::json;
using Path = std::vector<std::string>;

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

std::string dotted(const Path& path) {
  return path.empty() ? std::string("<root>") : fmt::format("{}", fmt::join(path, "."));
}

class Reader {
 public:
  Reader(const std::string& text, const std::string& source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const Path& path, const std::string& detail) const {
    throw ConfigError(source_, locate(path), fmt::format("{}: {}", dotted(path), detail));
  }

  // Line of the last key in `path`, found by scanning for each key in turn.
  int locate(const Path& path) const {
    std::size_t pos = 0;
    int line = 0;
    for (const auto& key : path) {
      if (!key.empty() && key.front() == '[') continue;
      const std::size_t hit = text_.find("\"" + key + "\"", pos);
      if (hit == std::string::npos) break;
      pos = hit + key.size() + 2;
      line = line_of_offset(text_, hit);
    }
    return line;
  }

  void check_keys(const Json& obj, const Path& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) {
        Path p = path;
        p.push_back(key);
        fail(p, "unknown key");
      }
    }
  }

  const Json& require(const Json& obj, const Path& path, const std::string& key) const {
    if (!obj.contains(key)) fail(path, fmt::format("missing key \"{}\"", key));
    return obj.at(key);
  }

  double number(const Json& j, const Path& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  std::int64_t integer(const Json& j, const Path& path) const {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<std::int64_t>();
  }

  Vector vector(const Json& j, const Path& path) const {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], path);
    return v;
  }

  Matrix matrix(const Json& j, const Path& path) const {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
      fail(path, "expected a non-empty list of rows");
    }
    const std::size_t cols = j[0].size();
    if (cols == 0) fail(path, "rows must be non-empty");
    Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
      if (!j[r].is_array() || j[r].size() != cols) {
        fail(path, fmt::format("row {} has a different length than row 0", r));
      }
      for (std::size_t c = 0; c < cols; ++c) {
        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], path);
      }
    }
    return M;
  }

  Polytope polytope(const Json& j, const Path& path, int dim) const {
    check_keys(j, path, {"box", "A", "b"});
    Polytope P;
    if (j.contains("box")) {
      if (j.contains("A") || j.contains("b")) fail(path, "give either \"box\" or \"A\"/\"b\"");
      Path bp = path;
      bp.push_back("box");
      const Matrix bounds = matrix(j.at("box"), bp);
      if (bounds.cols() != 2) fail(bp, "expected [lo, hi] pairs");
      if (bounds.rows() != dim) {
        fail(bp, fmt::format("expected {} [lo, hi] pairs, got {}", dim, bounds.rows()));
      }
      if ((bounds.col(0).array() >= bounds.col(1).array()).any()) fail(bp, "need lo < hi");
      return Polytope::box(bounds.col(0), bounds.col(1));
    }
    Path ap = path;
    ap.push_back("A");
    Path bp = path;
    bp.push_back("b");
    P.A = matrix(require(j, path, "A"), ap);
    P.b = vector(require(j, path, "b"), bp);
    if (P.A.cols() != dim) fail(ap, fmt::format("expected {} columns", dim));
    if (P.b.size() != P.A.rows()) fail(bp, "length must match the rows of A");
    return P;
  }

 private:
  const std::string& text_;
  const std::string& source_;
};

Path child(const Path& path, const std::string& key) {
  Path p = path;
  p.push_back(key);
  return p;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::string what = e.what();
    const auto colon = what.find("]: ");
    const std::string detail = colon == std::string::npos ? what : what.substr(colon + 3);
    throw ConfigError(source, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), detail);
  }
  const Reader rd(text, source);
  const Path root_path;
  rd.check_keys(root, root_path,
                {"system", "noise", "constraints", "cost", "horizon", "initial_state", "solver",
                 "tightening", "seed"});

  RunConfig cfg;
  ProblemInstance& inst = cfg.instance;

  const Path sp{"system"};
  const Json& system = rd.require(root, root_path, "system");
  rd.check_keys(system, sp, {"A", "B"});
  inst.system.A = rd.matrix(rd.require(system, sp, "A"), child(sp, "A"));
  inst.system.B = rd.matrix(rd.require(system, sp, "B"), child(sp, "B"));
  const int n = inst.system.n();
  const int m = inst.system.m();
  if (inst.system.A.cols() != n) rd.fail(child(sp, "A"), "must be square");
  if (inst.system.B.rows() != n) rd.fail(child(sp, "B"), fmt::format("expected {} rows", n));

  const Path np{"noise"};
  const Json& noise = rd.require(root, root_path, "noise");
  rd.check_keys(noise, np, {"covariance", "family"});
  inst.noise.covariance = rd.matrix(rd.require(noise, np, "covariance"), child(np, "covariance"));
  if (inst.noise.covariance.rows() != n || inst.noise.covariance.cols() != n) {
    rd.fail(child(np, "covariance"), fmt::format("expected {}x{}", n, n));
  }
  if (noise.contains("family")) {
    const Json& fam = noise.at("family");
    if (fam == "gaussian") {
      inst.noise.family = NoiseFamily::kGaussian;
    } else if (fam == "moment_only") {
      inst.noise.family = NoiseFamily::kMomentOnly;
    } else {
      rd.fail(child(np, "family"), "expected \"gaussian\" or \"moment_only\"");
    }
  }

  const Path cp{"constraints"};
  const Json& cons = rd.require(root, root_path, "constraints");
  rd.check_keys(cons, cp, {"state", "input", "p_bar_x", "p_bar_u"});
  inst.constraints.state_set = rd.polytope(rd.require(cons, cp, "state"), child(cp, "state"), n);
  inst.constraints.p_bar_x = rd.number(rd.require(cons, cp, "p_bar_x"), child(cp, "p_bar_x"));
  if (cons.contains("input")) {
    inst.constraints.input_set = rd.polytope(cons.at("input"), child(cp, "input"), m);
    inst.constraints.p_bar_u = rd.number(rd.require(cons, cp, "p_bar_u"), child(cp, "p_bar_u"));
  } else if (cons.contains("p_bar_u")) {
    rd.fail(child(cp, "p_bar_u"), "given without an input constraint");
  }

  const Path qp{"cost"};
  const Json& cost = rd.require(root, root_path, "cost");
  rd.check_keys(cost, qp, {"Q", "R"});
  inst.Q = rd.matrix(rd.require(cost, qp, "Q"), child(qp, "Q"));
  inst.R = rd.matrix(rd.require(cost, qp, "R"), child(qp, "R"));
  if (inst.Q.rows() != n || inst.Q.cols() != n) rd.fail(child(qp, "Q"), fmt::format("expected {}x{}", n, n));
  if (inst.R.rows() != m || inst.R.cols() != m) rd.fail(child(qp, "R"), fmt::format("expected {}x{}", m, m));

  const std::int64_t horizon = rd.integer(rd.require(root, root_path, "horizon"), {"horizon"});
  if (horizon < 1 || horizon > 1000) rd.fail({"horizon"}, "expected an integer in [1, 1000]");
  inst.horizon = static_cast<int>(horizon);

  inst.x0 = rd.vector(rd.require(root, root_path, "initial_state"), {"initial_state"});
  if (inst.x0.size() != n) rd.fail({"initial_state"}, fmt::format("expected {} entries", n));

  if (root.contains("solver")) {
    const Path vp{"solver"};
    const Json& s = root.at("solver");
    rd.check_keys(s, vp,
                  {"lp_feasibility_tol", "lp_optimality_tol", "lp_max_iterations",
                   "qp_feasibility_tol", "qp_max_iterations", "dare_tolerance", "xi_penalty"});
    auto positive = [&](const char* key, double& slot) {
      if (!s.contains(key)) return;
      const double v = rd.number(s.at(key), child(vp, key));
      if (!(v > 0.0)) rd.fail(child(vp, key), "must be positive");
      slot = v;
    };
    auto count = [&](const char* key, int& slot) {
      if (!s.contains(key)) return;
      const std::int64_t v = rd.integer(s.at(key), child(vp, key));
      if (v < 1 || v > 10000000) rd.fail(child(vp, key), "must be a positive integer");
      slot = static_cast<int>(v);
    };
    positive("lp_feasibility_tol", cfg.lp.feasibility_tol);
    positive("lp_optimality_tol", cfg.lp.optimality_tol);
    count("lp_max_iterations", cfg.lp.max_iterations);
    positive("qp_feasibility_tol", cfg.mpc.qp.feasibility_tol);
    count("qp_max_iterations", cfg.mpc.qp.max_iterations);
    positive("dare_tolerance", cfg.tightening.dare.tolerance);
    if (s.contains("xi_penalty")) {
      const double v = rd.number(s.at("xi_penalty"), child(vp, "xi_penalty"));
      if (v < 0.0) rd.fail(child(vp, "xi_penalty"), "must be non-negative");
      cfg.mpc.xi_penalty = v;
    }
  }

  if (root.contains("tightening")) {
    const Path tp{"tightening"};
    const Json& t = root.at("tightening");
    rd.check_keys(t, tp, {"generators", "scale"});
    if (t.contains("generators")) {
      const std::int64_t g = rd.integer(t.at("generators"), child(tp, "generators"));
      if (g < n || g > 64) {
        rd.fail(child(tp, "generators"), fmt::format("expected an integer in [{}, 64]", n));
      }
      cfg.tightening.generators = static_cast<int>(g);
    }
    if (t.contains("scale")) {
      const Json& sc = t.at("scale");
      if (sc == "chi2") {
        cfg.tightening.scale_family = NoiseFamily::kGaussian;
      } else if (sc == "chebyshev") {
        cfg.tightening.scale_family = NoiseFamily::kMomentOnly;
      } else if (sc != "auto") {
        rd.fail(child(tp, "scale"), "expected \"auto\", \"chi2\" or \"chebyshev\"");
      }
    }
  }

  if (root.contains("seed")) {
    const Json& s = root.at("seed");
    if (!s.is_number_unsigned()) rd.fail({"seed"}, "expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }

  for (const auto& v : validate_instance(inst)) {
    if (v.severity == Violation::Severity::kError) throw ConfigError(source, 0, v.message);
  }
  cfg.hash = fnv1a_64(text);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "cannot read file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string case_study_config_text() {
  return R"({
  "system": {
    "A": [[1.0, 0.0075], [-0.143, 0.996]],
    "B": [[4.798], [0.115]]
  },
  "noise": {
    "covariance": [[0.1, 0.0], [0.0, 0.1]],
    "family": "gaussian"
  },
  "constraints": {
    "state": {"box": [[-2.0, 2.0], [-2.0, 2.0]]},
    "p_bar_x": 0.6
  },
  "cost": {
    "Q": [[1.0, 0.0], [0.0, 10.0]],
    "R": [[10.0]]
  },
  "horizon": 15,
  "initial_state": [1.0, 1.0],
  "tightening": {"generators": 2, "scale": "auto"},
  "seed": 20190601
}
)";
}

}  // namespace dynsmpc
