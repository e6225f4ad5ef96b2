// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Tolerances and thresholds are fixed here and nowhere else.

#include "support.hpp"

#include "swarmpath/analysis.hpp"
#include "swarmpath/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

using namespace swarmpath;
using namespace swarmpath::testing;

namespace {

// criterion 1
constexpr double kMinBeta = 0.97;
// criterion 2
constexpr double kMaxVarianceLowK = 2e-2;
// criterion 3
constexpr double kMaxBenchMedian   = 2.0;
constexpr double kMaxSolveFraction = 0.70;
constexpr int kBenchRepetitions    = 5;
// criterion 4
constexpr double kMinCoverage   = 0.99;
constexpr double kCoverageScale = 1.5;  // radius in units of l
constexpr double kCoverageGrid  = 0.2;
// criterion 5
constexpr double kStraightTolerance = 1e-6;
constexpr double kSpacingTolerance  = 1e-6;
constexpr double kUniformBetaTol    = 1e-9;
constexpr double kUniformRuntime    = 1.0;
// criterion 6
constexpr int kQpProblems        = 150;
constexpr int kQpMaxDim          = 50;
constexpr double kQpObjectiveTol = 1e-6;
constexpr double kQpRuntime      = 30.0;
// criterion 7
constexpr double kMaxTurnDeg = 90.0;
// criterion 8
constexpr double kFlankRadius = 10.0;
// criterion 9
constexpr double kAlignedBetaTol = 1e-12;
constexpr double kHatchBetaTol   = 1e-4;

constexpr double kSpacing = 0.4;
const std::vector<double> kWeights{0.5, 5.0, 50.0};

int failures = 0;

void report(int id, bool ok, const std::string & detail)
{
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string fmt(const char * pattern, double a = 0, double b = 0, double c = 0, double d = 0)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EngineConfig config_for(const PartSlice & slice, const StressField & field, double weight)
{
  EngineConfig c;
  c.spacing        = kSpacing;
  c.weight         = weight;
  c.seed_edge      = default_seed_edge(slice, field, kSpacing);
  c.max_iterations = default_max_iterations(slice, kSpacing);
  return c;
}

struct MatrixRun
{
  std::string label;
  const PartSlice * slice = nullptr;
  std::shared_ptr<StressField> field;
  double weight = 0.0;
  TrajectorySet traj;
  double seconds = 0.0;
};

std::size_t count_kind(const TrajectorySet & t, EventKind k)
{
  std::size_t n = 0;
  for (const auto & e : t.events) { n += e.kind == k ? 1 : 0; }
  return n;
}

}  // namespace

int main()
{
  const PartSlice specimen  = make_open_hole_specimen(kSpecimenLength, kSpecimenWidth, 2.0 * kHoleRadius);
  const PartSlice rectangle = make_rectangle(kSpecimenLength, kSpecimenWidth);
  auto kirsch_specimen      = std::make_shared<KirschField>(1.0, kHoleRadius, kHoleCenter);
  auto kirsch_rectangle     = std::make_shared<KirschField>(1.0, kHoleRadius, kRectangleKirschCenter);
  auto uniform              = std::make_shared<UniformField>(Vec2(1.0, 0.0));

  // The full test matrix: 3 K values x {Kirsch, uniform} x {specimen, rectangle}.
  std::vector<MatrixRun> matrix;
  for (int part = 0; part < 2; ++part) {
    for (int kind = 0; kind < 2; ++kind) {
      for (double k : kWeights) {
        MatrixRun r;
        r.slice  = part == 0 ? &specimen : &rectangle;
        r.field  = kind == 1 ? std::shared_ptr<StressField>(uniform)
                             : (part == 0 ? std::shared_ptr<StressField>(kirsch_specimen)
                                          : std::shared_ptr<StressField>(kirsch_rectangle));
        r.weight = k;
        r.label  = std::string(part == 0 ? "specimen" : "rectangle") + "/" + (kind == 0 ? "kirsch" : "uniform")
                + "/K=" + fmt("%g", k);
        const auto t0 = std::chrono::steady_clock::now();
        r.traj        = run(*r.slice, *r.field, config_for(*r.slice, *r.field, k)).trajectories;
        r.seconds     = seconds_since(t0);
        matrix.push_back(std::move(r));
      }
    }
  }
  auto find = [&](const std::string & label) -> const MatrixRun & {
    for (const auto & r : matrix) {
      if (r.label == label) { return r; }
    }
    throw std::runtime_error("missing run " + label);
  };

  // 1 and 2: K sweep on the specimen with the Kirsch field.
  {
    std::vector<double> beta, var;
    double seconds = 0.0;
    for (double k : kWeights) {
      const MatrixRun & r = find("specimen/kirsch/K=" + fmt("%g", k));
      beta.push_back(alignment_beta(r.traj, *r.field).beta_bar);
      var.push_back(spacing_report(r.traj, kSpacing).variance);
      seconds += r.seconds;
    }
    const bool beta_ok = beta[0] < beta[1] && beta[1] < beta[2] && beta[0] >= kMinBeta && seconds < 10.0;
    report(1, beta_ok,
           fmt("beta_bar K=0.5/5/50: %.6f / %.6f / %.6f (strictly increasing, each >= 0.97), %.2f s", beta[0], beta[1],
               beta[2], seconds));
    const bool var_ok = var[0] < var[1] && var[1] < var[2] && var[0] < kMaxVarianceLowK && seconds < 10.0;
    report(2, var_ok,
           fmt("spacing variance K=0.5/5/50: %.5f / %.5f / %.5f (strictly increasing, K=0.5 < 2e-2), %.2f s", var[0],
               var[1], var[2], seconds));
  }

  // 3: benchmark on the specimen, K = 5.
  {
    const BenchmarkReport b = benchmark(specimen, *kirsch_specimen, config_for(specimen, *kirsch_specimen, 5.0),
                                        kBenchRepetitions);
    report(3, b.median < kMaxBenchMedian && b.solve_fraction < kMaxSolveFraction,
           fmt("median %.1f ms over %g runs (< 2000 ms), QP solve %.1f%% of total (< 70%%)", b.median * 1e3,
               kBenchRepetitions, 100.0 * b.solve_fraction));
  }

  // 4: no crossings and full coverage across the matrix.
  {
    bool ok              = true;
    std::size_t worst_x  = 0;
    double worst_cov     = 1.0;
    std::string worst_at = "-";
    for (const auto & r : matrix) {
      const std::size_t x = crossing_count(r.traj);
      const double cov    = coverage(r.traj, *r.slice, kCoverageScale * kSpacing, kCoverageGrid).fraction;
      if (x > 0 || cov < kMinCoverage) {
        ok = false;
        std::printf("  %s: crossings %zu, coverage %.5f\n", r.label.c_str(), x, cov);
      }
      worst_x = std::max(worst_x, x);
      if (cov < worst_cov) {
        worst_cov = cov;
        worst_at  = r.label;
      }
    }
    report(4, ok,
           fmt("12 runs: max crossings %g (must be 0), min coverage %.5f (>= 0.99)", static_cast<double>(worst_x),
               worst_cov) + " at " + worst_at);
  }

  // 5: uniform field on the plain rectangle is a fixed point.
  {
    const auto t0       = std::chrono::steady_clock::now();
    const auto result   = run(rectangle, *uniform, config_for(rectangle, *uniform, 5.0));
    const double secs   = seconds_since(t0);
    const auto & t      = result.trajectories;
    double deviation    = 0.0;
    for (const auto & tr : t.traces) {
      // distance of every point from the line through the trace's endpoints
      const Vec2 a = tr.points.front();
      const Vec2 d = (tr.points.back() - a).normalized();
      for (const Vec2 & p : tr.points) { deviation = std::max(deviation, std::abs(cross(d, p - a))); }
    }
    double spacing_err = 0.0;
    for (double nd : spacing_report(t, kSpacing).normalized_distances) {
      spacing_err = std::max(spacing_err, std::abs(nd - 1.0) * kSpacing);
    }
    const std::size_t spawn_kill = count_kind(t, EventKind::Spawn) + count_kind(t, EventKind::Kill);
    const double beta            = alignment_beta(t, *uniform).beta_bar;
    const bool ok = deviation <= kStraightTolerance && spacing_err <= kSpacingTolerance && spawn_kill == 0
                 && std::abs(beta - 1.0) <= kUniformBetaTol && secs < kUniformRuntime && !t.traces.empty();
    report(5, ok,
           fmt("straightness %.2e mm, spacing error %.2e mm, beta_bar - 1 = %.1e, %.3f s", deviation, spacing_err,
               beta - 1.0, secs)
             + ", spawn/kill events " + std::to_string(spawn_kill));
  }

  // 6: QP solver against the independent oracle.
  {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(0x5eed);
    double worst = 0.0;
    int bad      = 0;
    for (int i = 0; i < kQpProblems; ++i) {
      const auto qp = random_block_tridiagonal_qp(rng, kQpMaxDim);
      double gap;
      try {
        gap = std::abs(solve(qp).objective - oracle_minimum(qp, 1e-9));
      } catch (const Error &) {
        gap = std::numeric_limits<double>::infinity();
      }
      worst = std::max(worst, gap);
      bad += gap > kQpObjectiveTol ? 1 : 0;
    }
    const double secs = seconds_since(t0);
    report(6, bad == 0 && secs < kQpRuntime,
           fmt("%g block-tridiagonal problems (dim <= 50): max objective gap %.2e (<= 1e-6), %.2f s",
               kQpProblems, worst, secs));
  }

  // 7: bounded turns and field sign invariance.
  {
    bool ok          = true;
    double max_turn  = 0.0;
    int identical    = 0;
    for (const auto & r : matrix) {
      const double turn = max_turn_angle_deg(r.traj);
      max_turn          = std::max(max_turn, turn);
      const NegatedField negated(r.field);
      const auto neg =
        run(*r.slice, negated, config_for(*r.slice, *r.field, r.weight)).trajectories;
      const bool same = trajectories_to_json(r.traj, nullptr).dump() == trajectories_to_json(neg, nullptr).dump();
      identical += same ? 1 : 0;
      if (turn >= kMaxTurnDeg || !same) {
        ok = false;
        std::printf("  %s: max turn %.2f deg, negation identical %s\n", r.label.c_str(), turn, same ? "yes" : "no");
      }
    }
    report(7, ok,
           fmt("12 runs: max turn %.2f deg (< 90), %g/12 byte-identical under field negation", max_turn,
               static_cast<double>(identical)));
  }

  // 8: hole events on the specimen.
  {
    const MatrixRun & r = find("specimen/kirsch/K=5");
    const auto & t      = r.traj;
    std::size_t near_spawn = 0, near_kill = 0;
    for (const auto & e : t.events) {
      const bool near = (e.position - kHoleCenter).norm() <= kFlankRadius;
      near_spawn += near && e.kind == EventKind::Spawn ? 1 : 0;
      near_kill += near && e.kind == EventKind::Kill ? 1 : 0;
    }
    const std::size_t adds    = count_kind(t, EventKind::InnerBoundaryAdd);
    const std::size_t removes = count_kind(t, EventKind::InnerBoundaryRemove);
    report(8, adds >= 1 && removes >= 1 && near_spawn >= 1 && near_kill >= 1,
           fmt("inner_boundary_add %g, inner_boundary_remove %g, spawn within 10 mm %g, kill within 10 mm %g",
               static_cast<double>(adds), static_cast<double>(removes), static_cast<double>(near_spawn),
               static_cast<double>(near_kill)));
  }

  // 9: baselines.
  {
    BaselineKind aligned;
    aligned.pattern = BaselineKind::Pattern::AlignedRectilinear;
    aligned.spacing = kSpacing;
    BaselineKind hatch;
    hatch.pattern   = BaselineKind::Pattern::CrossHatch;
    hatch.angle_deg = 45.0;
    hatch.spacing   = kSpacing;
    const double b_aligned = alignment_beta(generate_baseline(specimen, aligned), *uniform).beta_bar;
    const double b_hatch   = alignment_beta(generate_baseline(specimen, hatch), *uniform).beta_bar;
    report(9, std::abs(b_aligned - 1.0) <= kAlignedBetaTol && std::abs(b_hatch - std::sqrt(0.5)) <= kHatchBetaTol,
           fmt("aligned beta_bar %.15f (1 +- 1e-12), cross-hatch 45 deg beta_bar %.6f (0.70711 +- 1e-4)", b_aligned,
               b_hatch));
  }

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
