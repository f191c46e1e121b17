// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dynsmpc/config.hpp"
#include "dynsmpc/reachability.hpp"
#include "dynsmpc/safety_lp.hpp"
#include "dynsmpc/setops.hpp"
#include "dynsmpc/simulator.hpp"
#include "dynsmpc/synthesis.hpp"

namespace fs = std::filesystem;
using namespace dynsmpc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  fmt::print("[{}] {}: {} ({:.3f} s, limit {:g} s{})\n", ok ? "PASS" : "FAIL", name, o.detail, secs,
             limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

std::vector<int> support_of(const Vector& alpha) {
  std::vector<int> out;
  for (int k = 0; k < alpha.size(); ++k) {
    if (alpha(k) > 1e-6) out.push_back(k);
  }
  return out;
}

std::vector<Vector> sign_points(const Zonotope& Z) {
  std::vector<Vector> out;
  for (unsigned mask = 0; mask < (1u << Z.order()); ++mask) {
    Vector p = Z.center;
    for (int j = 0; j < Z.order(); ++j) p += ((mask >> j) & 1u ? 1.0 : -1.0) * Z.generators.col(j);
    out.push_back(p);
  }
  return out;
}

double boundary_distance(const Polytope& P, const Vector& x) {
  double d = kInf;
  for (int i = 0; i < P.rows(); ++i) {
    d = std::min(d, std::abs(P.A.row(i).dot(x) - P.b(i)) / P.A.row(i).norm());
  }
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main() {
  const RunConfig cfg = parse_config(case_study_config_text(), "case-study");
  const ProblemInstance& inst = cfg.instance;
  fmt::print("case-study config: generators = {}, seed = {}\n",
             cfg.tightening.generators ? std::to_string(*cfg.tightening.generators) : "box", cfg.seed);

  SynthesisContext ctx;
  SafetyResult safety;
  criterion("AC1 case-study relaxation support", 5.0, [&] {
    ctx = build_context(inst, cfg.tightening);
    safety = solve_safety(ctx, inst);
    const auto s = support_of(safety.schedule.alpha);
    return Outcome{s == std::vector<int>{0, 14},
                   fmt::format("box template (g = 2): support {{{}}}, expected {{0, 14}}; alpha(0) = {:.5f}, alpha(14) = {:.5f}",
                               fmt::join(s, ", "), safety.schedule.alpha(0), safety.schedule.alpha(14))};
  });

  {
    TighteningOptions g8 = cfg.tightening;
    g8.generators = 8;
    const SynthesisContext c8 = build_context(inst, g8);
    const SafetyResult s8 = solve_safety(c8, inst);
    const double p8 = min_static_probability(inst, g8).probability;
    fmt::print("[INFO] g = 8 template: support {{{}}}, static probability level {:.4f}\n",
               fmt::join(support_of(s8.schedule.alpha), ", "), p8);
  }

  criterion("AC2 static-comparison bound", 60.0, [&] {
    const StaticProbabilityResult r = min_static_probability(inst, cfg.tightening);
    return Outcome{std::abs(r.probability - 0.27) <= 0.05,
                   fmt::format("level {:.4f}, expected 0.27 +- 0.05 ({} bisection steps)", r.probability,
                               r.bisection_steps)};
  });

  criterion("AC3 recursive feasibility", 120.0, [&] {
    int infeasible = 0;
    for (int trial = 0; trial < 100; ++trial) {
      try {
        run_closed_loop(inst, ctx, safety.schedule, 100, trial_seed(cfg.seed, trial));
      } catch (const std::exception&) {
        ++infeasible;
      }
    }
    ClosedLoopOptions logged;
    logged.check_candidate = true;
    double worst_row = 0.0;
    double worst_warm = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Trajectory t =
          run_closed_loop(inst, ctx, safety.schedule, 100, trial_seed(cfg.seed + 1, trial), logged);
      worst_row = std::max(worst_row, t.candidate_violation);
      worst_warm = std::max(worst_warm, t.warm_start_excess);
    }
    return Outcome{infeasible == 0 && worst_row <= 1e-7,
                   fmt::format("{} infeasible of 100x100 runs; candidate row violation {:.2e} (tol 1e-7), "
                               "warm-start excess {:.2e}",
                               infeasible, worst_row, worst_warm)};
  });

  criterion("AC4 chance-constraint satisfaction", 300.0, [&] {
    const SimulationReport rep = monte_carlo(inst, ctx, safety.schedule, 50, 1000, cfg.seed);
    double margin = kInf;
    for (std::size_t k = 0; k < rep.rate.size(); ++k) margin = std::min(margin, rep.rate[k] - rep.lower_limit[k]);
    return Outcome{rep.flagged.empty() && rep.feasibility_failures == 0,
                   fmt::format("M = 1000, T = 50: {} flagged steps, {} infeasible trials, "
                               "min rate - limit = {:.4f}, rate(0) = {:.3f} vs bound {:.4f}",
                               rep.flagged.size(), rep.feasibility_failures, margin, rep.rate[0],
                               rep.bound[0])};
  });

  criterion("AC5 numerical kernels", 60.0, [&] {
    double lyap = 0.0;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<std::pair<Matrix, Matrix>> cases{{ctx.AK, inst.noise.covariance}};
    for (int t = 0; t < 20; ++t) {
      const int n = 1 + t % 4;
      Matrix A = Matrix::NullaryExpr(n, n, [&] { return nd(rng); });
      A *= 0.9 / std::max(spectral_radius(A), 1e-3);
      Matrix L = Matrix::NullaryExpr(n, n, [&] { return nd(rng); });
      cases.emplace_back(A, L * L.transpose() + 0.1 * Matrix::Identity(n, n));
    }
    for (const auto& [A, W] : cases) {
      const Matrix S = solve_lyapunov(A, W);
      lyap = std::max(lyap, (A * S * A.transpose() - S + W).norm() / S.norm());
    }
    const GainPack g = solve_dare(inst.system.A, inst.system.B, inst.Q, inst.R);
    const double dare = dare_residual(inst.system.A, inst.system.B, inst.Q, g) / g.P.norm();
    const Matrix one = Matrix::Ones(1, 1);
    const double golden = std::abs(solve_dare(one, one, one, one).P(0, 0) - (1 + std::sqrt(5.0)) / 2);
    double chi = 0.0;
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      chi = std::max(chi, std::abs(chi2_quantile(p, 2) + 2.0 * std::log1p(-p)));
    }
    return Outcome{lyap <= 1e-10 && dare <= 1e-9 && golden <= 1e-9 && chi <= 1e-8,
                   fmt::format("Lyapunov rel {:.1e} (1e-10), DARE rel {:.1e} (1e-9), scalar P err {:.1e} "
                               "(1e-9), chi2 inverse err {:.1e} (1e-8)",
                               lyap, dare, golden, chi)};
  });

  criterion("AC6 set-algebra oracles", 60.0, [&] {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd(0.0, 0.4);
    const Polytope X = inst.constraints.state_set;
    auto random_zono = [&](int g) {
      Zonotope Z{Vector::Zero(2), Matrix(2, g)};
      for (int j = 0; j < g; ++j) Z.generators.col(j) << nd(rng), nd(rng);
      return Z;
    };
    double support_err = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Zonotope Z = random_zono(1 + t % 6);
      const Polytope T = tighten(X, Z, 1.0);
      const auto pts = sign_points(Z);
      for (int i = 0; i < X.rows(); ++i) {
        double worst = -kInf;
        for (const auto& v : pts) worst = std::max(worst, X.A.row(i).dot(v));
        support_err = std::max(support_err, std::abs(T.b(i) - (X.b(i) - worst)));
      }
    }
    int grid_bad = 0;
    const int cells = 200;
    const double h = 4.0 / cells;
    for (int t = 0; t < 10; ++t) {
      const Zonotope Z = random_zono(1 + t % 6);
      const Polytope T = tighten(X, Z, 1.0);
      const auto pts = sign_points(Z);
      for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
          Vector x(2);
          x << -2 + (i + 0.5) * h, -2 + (j + 0.5) * h;
          bool oracle = true;
          for (const auto& z : pts) oracle = oracle && contains(X, x + z, 0.0);
          if (oracle != contains(T, x, 0.0) && boundary_distance(T, x) > h) ++grid_bad;
        }
      }
    }
    int containment_bad = 0;
    for (int t = 0; t < 50; ++t) {
      Matrix L(2, 2);
      L << nd(rng), nd(rng), nd(rng), nd(rng);
      const Matrix E = L * L.transpose() + 0.05 * Matrix::Identity(2, 2);
      const Zonotope Z = ellipsoid_to_zonotope({E, Vector::Zero(2)}, 2 + t % 7);
      for (int i = 0; i < 360; ++i) {
        Vector a(2);
        a << std::cos(i * M_PI / 180), std::sin(i * M_PI / 180);
        if (std::sqrt(a.dot(E * a)) > zonotope_support(Z, a) + 1e-12) ++containment_bad;
      }
    }
    return Outcome{support_err <= 1e-9 && grid_bad == 0 && containment_bad == 0,
                   fmt::format("support vs vertex tightening {:.1e} (1e-9, 100 zonotopes); grid cells off by "
                               "more than one cell: {} (10 cases); ellipsoid escapes: {} (50 x 360 directions)",
                               support_err, grid_bad, containment_bad)};
  });

  criterion("AC7 determinism", 120.0, [&] {
    const fs::path root = fs::temp_directory_path() / "dynsmpc_acceptance";
    fs::remove_all(root);
    CaseStudyOptions opt;
    opt.tightening = cfg.tightening;
    opt.seed = cfg.seed;
    const CaseStudyReport a = reproduce_case_study(root / "a", opt);
    reproduce_case_study(root / "b", opt);
    int compared = 0;
    int differing = 0;
    for (const auto& file : a.files) {
      if (file.extension() != ".csv") continue;
      ++compared;
      if (slurp(file) != slurp(root / "b" / file.filename())) ++differing;
    }
    const std::string r1 = report_table(monte_carlo(inst, ctx, safety.schedule, 20, 50, cfg.seed)).str();
    const std::string r2 = report_table(monte_carlo(inst, ctx, safety.schedule, 20, 50, cfg.seed)).str();
    ++compared;
    if (r1 != r2) ++differing;
    fs::remove_all(root);
    return Outcome{differing == 0 && compared > 1,
                   fmt::format("{} of {} CSV outputs differ between two runs", differing, compared)};
  });

  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
