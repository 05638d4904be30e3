// Acceptance suite. One line per criterion: PASS, FAIL or SKIP, followed by
// the measured numbers. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hybridproj/error.hpp"
#include "hybridproj/geometry.hpp"
#include "hybridproj/mappings.hpp"
#include "hybridproj/solvers.hpp"
#include "hybridproj/speedup.hpp"
#include "oracle/qp_oracle.hpp"
#include "oracle/scalar_oracle.hpp"

using namespace hybridproj;

namespace {

// Pinned thresholds.
constexpr double kOracleTol = 1e-10;
constexpr std::size_t kOracleSteps = 200;
constexpr double kOracleBudget = 5.0;

constexpr std::size_t kFamilySize = 1000;
constexpr double kFixedPointTol = 1e-8;
constexpr std::uint64_t kConvergenceBudget = 100000;
constexpr double kConvergenceSeconds = 30.0;

constexpr double kInvariantSlack = 1e-10;

constexpr int kProjectionInstances = 200;
constexpr double kProjectionTol = 1e-8;
constexpr double kProjectionSeconds = 10.0;

constexpr double kOrderingTol = 1e-4;
constexpr double kSlowTol = 1e-5;
constexpr std::uint64_t kSlowCap = 1000000;
constexpr double kOrderingSeconds = 60.0;

constexpr double kResolventTol = 1e-8;
constexpr int kResolventSamples = 100;
constexpr double kResolventSeconds = 5.0;

constexpr double kShmTol = 1e-6;
constexpr std::uint64_t kShmBudget = 100000;
constexpr std::uint64_t kShiftRange = 10000;
constexpr double kShmSeconds = 30.0;

constexpr double kEpsilonOmega = 1.0;
constexpr double kEpsilonFloor = 1e-6;
constexpr double kEpsilonRunTol = 9e-4;
constexpr std::uint64_t kEpsilonCap = 3000000;

constexpr std::size_t kSpeedupMaps = 5000000;
constexpr double kSpeedupTarget = 1.5;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

Vector scalar(double x) { return Vector::Constant(1, x); }

const char* kScheduleNames[] = {"reciprocal", "log-reciprocal", "power-of-ten"};

AlphaSchedule named(const std::string& name) {
  if (name == "reciprocal") return AlphaSchedule::reciprocal();
  if (name == "log-reciprocal") return AlphaSchedule::log_reciprocal();
  return AlphaSchedule::power_of_ten();
}

SolverConfig example(Method m, std::size_t count, const std::string& schedule) {
  SolverConfig cfg;
  cfg.method = m;
  cfg.mappings = std::make_shared<const MappingFamily>(make_experiment_family(count));
  cfg.alpha = named(schedule);
  cfg.x_start = scalar(1.0);
  cfg.known_fixed_point = scalar(0.0);
  cfg.omega = 0.0;
  return cfg;
}

struct Outcome {
  enum { Pass, Fail, Skip } status = Pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const Outcome& o, double seconds) {
  const char* tag = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Fail ? "FAIL" : "SKIP";
  if (o.status == Outcome::Fail) ++failures;
  std::printf("criterion %d [%s] %s (%.2f s): %s\n", id, tag, title, seconds, o.detail.c_str());
  std::fflush(stdout);
}

void run(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Outcome::Fail, std::string("exception: ") + e.what()};
  }
  report(id, title, o, since(t0));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Runs shared between criteria 1-3.
struct Labeled {
  std::string label;
  SolverConfig cfg;
  RunReport report;
};
std::vector<Labeled> invariant_runs;

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t rows = 0;
  for (std::size_t count : {1, 3, 5, 100}) {
    for (const char* name : kScheduleNames) {
      SolverConfig cfg = example(Method::PhmQuasiMann, count, name);
      cfg.tol = 1e-300;  // run the full window
      cfg.max_iter = kOracleSteps;
      RunReport r = solve(cfg);
      const auto want = oracle::mann_midpoint(oracle::experiment_family(count),
                                              oracle::schedule(name), 1.0, kOracleSteps);
      std::vector<double> got(r.trajectory);
      got.push_back(r.final_x[0]);
      if (got.size() < kOracleSteps + 1 && r.termination != Termination::Converged &&
          r.termination != Termination::FixedPointDetected) {
        return {Outcome::Fail, "run stopped early at N=" + std::to_string(count) + " " + name};
      }
      for (std::size_t n = 0; n < got.size(); ++n) worst = std::max(worst, std::abs(got[n] - want[n]));
      rows += got.size();
      invariant_runs.push_back({"oracle N=" + std::to_string(count) + " " + name, cfg, std::move(r)});
    }
  }
  const double secs = since(t0);
  const bool ok = worst <= kOracleTol && secs < kOracleBudget;
  return {ok ? Outcome::Pass : Outcome::Fail,
          "12 runs, " + std::to_string(rows) + " iterates, max |x_n - oracle| = " + fmt(worst) +
              " (limit " + fmt(kOracleTol) + "), " + fmt(secs) + " s of " + fmt(kOracleBudget)};
}

Outcome convergence() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;
  for (Method m : {Method::PhmQuasiMann, Method::PhmQuasiHalpern}) {
    for (const char* name : kScheduleNames) {
      SolverConfig cfg = example(m, kFamilySize, name);
      cfg.tol = kFixedPointTol;
      cfg.max_iter = kConvergenceBudget;
      RunReport r = solve(cfg);
      const double residual = std::abs(r.final_x[0]);
      const bool hit = residual <= kFixedPointTol && r.iterations <= kConvergenceBudget;
      ok = ok && hit;
      detail << to_string(m) << "/" << name << ": " << (hit ? "ok" : "MISS") << " n=" << r.iterations
             << " |x|=" << fmt(residual) << "; ";
      invariant_runs.push_back({std::string(to_string(m)) + " " + name, cfg, std::move(r)});
    }
  }
  const double secs = since(t0);
  ok = ok && secs < kConvergenceSeconds;
  detail << fmt(secs) << " s of " << fmt(kConvergenceSeconds);
  return {ok ? Outcome::Pass : Outcome::Fail, detail.str()};
}

Outcome invariants() {
  double worst_phi_drop = 0.0, worst_cut = -INFINITY;
  std::size_t converged = 0, determinism_checked = 0;
  std::string broken;
  for (Labeled& run : invariant_runs) {
    const RunReport& r = run.report;
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      worst_phi_drop = std::max(worst_phi_drop, r.trace[i - 1].phi_to_start - r.trace[i].phi_to_start);
    }
    worst_cut = std::max(worst_cut, r.max_known_violation.value_or(0.0));
    if (r.termination != Termination::Converged) continue;
    ++converged;
    for (std::size_t w : {2, 4}) {
      SolverConfig cfg = run.cfg;
      cfg.workers = w;
      ++determinism_checked;
      if (!same_trajectory(r, solve(cfg))) broken += run.label + " workers=" + std::to_string(w) + "; ";
    }
  }
  const bool ok = worst_phi_drop <= kInvariantSlack && worst_cut <= kInvariantSlack && broken.empty();
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::to_string(invariant_runs.size()) + " runs (" + std::to_string(converged) +
              " converged): (a) max phi drop " + fmt(worst_phi_drop) + ", (b) max cut violation at 0 " +
              fmt(worst_cut) + ", (c) " + std::to_string(determinism_checked) +
              " reruns with 2/4 workers " + (broken.empty() ? "identical" : "DIFFER: " + broken)};
}

Outcome projection() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> dim(1, 3), count(1, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_vector = [&](Eigen::Index d, double scale) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * u(rng);
    return v;
  };
  double worst_qp = 0.0, worst_vi = -INFINITY;
  int samples = 0;
  for (int k = 0; k < kProjectionInstances; ++k) {
    const Eigen::Index d = dim(rng);
    const Vector inside = random_vector(d, 1.0);
    std::vector<HalfSpace> cuts;
    std::vector<oracle::Cut> plain;
    for (int i = 0, m = count(rng); i < m; ++i) {
      const Vector a = random_vector(d, 1.0);
      const double b = a.dot(inside) + 0.5 * std::abs(u(rng));
      cuts.emplace_back(a, b);
      plain.push_back({a, b});
    }
    const Vector x0 = random_vector(d, 3.0);
    const auto want = oracle::brute_force_projection(x0, plain);
    if (!want) return {Outcome::Fail, "oracle found no feasible point"};
    const Vector p = project_intersection(x0, cuts, ProjectionSettings{}).point;
    worst_qp = std::max(worst_qp, (p - *want).norm());
    for (int s = 0; s < 25; ++s) {
      const Vector z = inside + random_vector(d, 0.5);
      bool feasible = true;
      for (const HalfSpace& h : cuts) feasible = feasible && h.normal.dot(z) <= h.offset;
      if (!feasible) continue;
      // <z - p, x0 - p> <= 0
      worst_vi = std::max(worst_vi, (z - p).dot(x0 - p));
      ++samples;
    }
  }
  const double secs = since(t0);
  const bool ok = worst_qp <= kProjectionTol && worst_vi <= kProjectionTol && secs < kProjectionSeconds;
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::to_string(kProjectionInstances) + " instances, max |p - oracle| = " + fmt(worst_qp) +
              ", variational inequality max " + fmt(worst_vi) + " over " + std::to_string(samples) +
              " feasible samples"};
}

Outcome ordering() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;
  for (const char* name : kScheduleNames) {
    SolverConfig phm = example(Method::PhmQuasiMann, kFamilySize, name);
    phm.tol = kOrderingTol;
    SolverConfig lsm = phm;
    lsm.method = Method::Lsm;
    lsm.max_iter = kSlowCap;
    const RunReport a = solve(phm), b = solve(lsm);
    const bool slower = b.iterations > a.iterations && a.termination == Termination::Converged;
    ok = ok && slower;
    detail << name << " @" << fmt(kOrderingTol) << ": phm " << a.iterations << " vs lsm " << b.iterations
           << " (" << to_string(b.termination) << "); ";
  }
  SolverConfig phm = example(Method::PhmQuasiMann, kFamilySize, "log-reciprocal");
  phm.tol = kSlowTol;
  SolverConfig lsm = phm;
  lsm.method = Method::Lsm;
  lsm.max_iter = kSlowCap;
  const RunReport a = solve(phm), b = solve(lsm);
  const bool slow = b.termination == Termination::MaxIterReached && b.iterations == kSlowCap &&
                    a.termination == Termination::Converged;
  ok = ok && slow;
  detail << "log-reciprocal @" << fmt(kSlowTol) << ": phm " << to_string(a.termination) << " in "
         << a.iterations << ", lsm " << to_string(b.termination) << " at " << b.iterations
         << " with x=" << fmt(b.final_x[0]);
  const double secs = since(t0);
  ok = ok && secs < kOrderingSeconds;
  return {ok ? Outcome::Pass : Outcome::Fail, detail.str()};
}

Outcome resolvent_corollary() {
  const auto t0 = Clock::now();
  const AffineMonotoneOperator id{Eigen::MatrixXd::Identity(2, 2), Vector::Zero(2)};
  const std::vector<double> radii{0.5, 1.0, 2.0};
  SolverConfig cfg;
  cfg.method = Method::PhmQuasiMann;
  cfg.mappings = std::make_shared<const MappingFamily>(
      MappingFamily::resolvents(std::vector<AffineMonotoneOperator>(3, id), radii));
  cfg.alpha = AlphaSchedule::reciprocal();
  cfg.x_start = Vector::Ones(2);
  cfg.known_fixed_point = Vector::Zero(2);
  cfg.tol = kResolventTol;
  const RunReport r = solve(cfg);
  const double dist = r.final_x.norm();

  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 5.0);
  int violations = 0;
  for (double radius : radii) {
    for (int k = 0; k < kResolventSamples; ++k) {
      const Vector x{{g(rng), g(rng)}};
      const Vector u = Vector::Zero(2);
      if (lyapunov(u, resolvent(id, radius, x)) > lyapunov(u, x)) ++violations;
    }
  }
  const double secs = since(t0);
  const bool ok = r.termination == Termination::Converged && dist <= kResolventTol &&
                  violations == 0 && secs < kResolventSeconds;
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::string(to_string(r.termination)) + " after " + std::to_string(r.iterations) +
              " iterations, |x - 0| = " + fmt(dist) + ", phi(0, J_r x) > phi(0, x) in " +
              std::to_string(violations) + " of " + std::to_string(3 * kResolventSamples) + " samples"};
}

Outcome sequential_hybrid() {
  const auto t0 = Clock::now();
  std::size_t shift_failures = 0;
  for (std::uint64_t count = 1; count <= 20; ++count) {
    for (std::uint64_t n = count + 1; n <= kShiftRange; ++n) {
      const CyclicIndex now = cyclic_index(n, count), back = cyclic_index(n - count, count);
      if (now.p - 1 != back.p || now.j != back.j) ++shift_failures;
    }
  }
  SolverConfig cfg = example(Method::ShmQuasi, 3, "reciprocal");
  cfg.tol = kShmTol;
  cfg.max_iter = kShmBudget;
  double worst = -INFINITY;
  cfg.observer = [&](const IterationView& v) {
    for (const HalfSpace& h : v.projected_onto) worst = std::max(worst, h.violation(scalar(0.0)));
  };
  const RunReport r = solve(cfg);
  const double residual = std::abs(r.final_x[0]);
  const bool converged = r.termination == Termination::Converged && residual <= kShmTol;
  const double secs = since(t0);
  const bool ok = converged && shift_failures == 0 && worst <= kInvariantSlack && secs < kShmSeconds;
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::string(to_string(r.termination)) + " after " + std::to_string(r.iterations) +
              " iterations with |x| = " + fmt(residual) + " (target " + fmt(kShmTol) +
              "); cyclic shift failures " + std::to_string(shift_failures) +
              " for n <= 10^4, N <= 20; max violation of C_n, Q_n at 0 = " + fmt(worst)};
}

Outcome epsilon_path() {
  SolverConfig cfg = example(Method::PhmMann, 3, "reciprocal");
  cfg.mappings = std::make_shared<const MappingFamily>(
      make_experiment_family(3).with_asymptotic_constants(1.0));
  cfg.omega = kEpsilonOmega;
  cfg.tol = kEpsilonRunTol;
  cfg.max_iter = kEpsilonCap;
  const RunReport r = solve(cfg);
  if (r.trace.empty()) return {Outcome::Fail, "empty trace"};
  // Smallest N0 such that every later epsilon is below the floor.
  std::size_t tail = r.trace.size();
  while (tail > 0 && r.trace[tail - 1].epsilon < kEpsilonFloor) --tail;
  const bool observed = tail < r.trace.size();
  const bool positive = r.trace.front().epsilon > 0.0;
  const bool ok = r.termination == Termination::Converged && observed && positive &&
                  r.max_known_violation.value_or(0.0) <= kInvariantSlack;
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::string(to_string(r.termination)) + " after " + std::to_string(r.iterations) +
              " iterations (|x - 0| <= " + fmt(kEpsilonRunTol) + "), eps_0 = " +
              fmt(r.trace.front().epsilon) + ", eps_n < " + fmt(kEpsilonFloor) + " for all n >= " +
              (observed ? std::to_string(r.trace[tail].n) : std::string("never")) + ", last eps " +
              fmt(r.trace.back().epsilon)};
}

Outcome speedup() {
  const unsigned cores = std::thread::hardware_concurrency();
  if (cores < 2) {
    return {Outcome::Skip, "needs >= 2 cores, this machine reports " + std::to_string(cores)};
  }
  const MappingFamily fam = make_experiment_family(kSpeedupMaps);
  const std::vector<std::size_t> counts{1, 2};
  const SpeedupTable t = measure_batch_speedup(fam, scalar(1.0), counts, 3);
  const double s = t.speedup(1);
  return {s >= kSpeedupTarget && t.trajectories_identical ? Outcome::Pass : Outcome::Fail,
          "one batch of " + std::to_string(kSpeedupMaps) + " maps: T_s = " + fmt(t.rows[0].seconds) +
              " s, T_p = " + fmt(t.rows[1].seconds) + " s, T_s/T_p = " + fmt(s) + " (target " +
              fmt(kSpeedupTarget) + ")"};
}

}  // namespace

int main() {
  run(1, "phm-quasi-mann matches the scalar midpoint oracle", oracle_equivalence);
  run(2, "phm-quasi-mann and phm-quasi-halpern reach |x| <= 1e-8 in 1e5 iterations", convergence);
  run(3, "phi monotone, F inside every cut, bit-identical across workers", invariants);
  run(4, "project_intersection against the exhaustive QP oracle", projection);
  run(5, "lsm slower than phm; lsm stalls at 1e-5 with the log schedule", ordering);
  run(6, "resolvents of A(x) = x converge to the origin", resolvent_corollary);
  run(7, "shm-quasi converges on N = 3 with alpha_n = 1/n", sequential_hybrid);
  run(8, "epsilon_n path on an asymptotic family", epsilon_path);
  run(9, "batch speedup on 5e6 maps", speedup);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
