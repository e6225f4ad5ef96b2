#pragma once

#include "swarmpath/geometry.hpp"
#include "swarmpath/stress_field.hpp"
#include "swarmpath/swarm.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace swarmpath {

struct AlignmentReport
{
  double beta_bar = 0.0;        ///< in [0, 1]
  std::size_t point_count = 0;
  std::vector<double> samples;  ///< |s_hat . p| per point, only when requested
};

/// Fixed-width histogram over [lower, lower + bins * width); values past the
/// last bin are counted in it, values below `lower` in the first.
struct Histogram
{
  double lower = 0.0;
  double width = 0.05;
  std::vector<std::size_t> counts;

  static Histogram build(const std::vector<double> & values, double lower = 0.0, double width = 0.05,
                         std::size_t bins = 60);
};

struct SpacingReport
{
  std::vector<double> normalized_distances;  ///< distance to the following trace / l
  double mean     = 0.0;
  double variance = 0.0;  ///< population variance
  Histogram histogram;
};

struct CoverageReport
{
  std::size_t samples = 0;  ///< grid points inside the part
  std::size_t covered = 0;  ///< of those, within the radius of some trace
  double fraction     = 1.0;
};

struct BaselineKind
{
  enum class Pattern { CrossHatch, AlignedRectilinear };
  Pattern pattern    = Pattern::AlignedRectilinear;
  double angle_deg   = 45.0;  ///< CrossHatch only
  double spacing     = 0.4;
};

struct BenchmarkReport
{
  std::vector<double> samples;  ///< seconds per run
  double median = 0.0;
  double min    = 0.0;
  double max    = 0.0;
  /// per-phase medians over the runs
  PhaseTimes phases;
  /// median share of the total spent in the QP solver
  double solve_fraction = 0.0;
};

/// Magnitude-weighted mean |cos| between print and principal directions, sampled
/// at every trajectory point. Throws EmptyTrajectorySet.
AlignmentReport alignment_beta(const TrajectorySet & traj, const StressField & field, bool keep_samples = false);

/// Distances from every point to its recorded following trace, normalized by
/// l. Throws EmptyTrajectorySet, or SingleTrace when no point has a successor.
SpacingReport spacing_report(const TrajectorySet & traj, double spacing);

/// Transversal intersections between segments of distinct traces.
std::size_t crossing_count(const TrajectorySet & traj);

/// Share of the part's grid points within `radius` of some trace.
CoverageReport coverage(const TrajectorySet & traj, const PartSlice & slice, double radius, double grid_step = 0.2);

/// Largest turn in degrees between consecutive segments over all traces.
double max_turn_angle_deg(const TrajectorySet & traj);

/// Parallel line infill clipped to the slice. Traces come out ordered by
/// signed offset, each line's pieces along the line direction.
TrajectorySet generate_baseline(const PartSlice & slice, const BaselineKind & kind);

/// Times `run` end to end. Throws ValidationError for fewer than 3 repetitions.
BenchmarkReport benchmark(const PartSlice & slice, const StressField & field, const EngineConfig & config,
                          int repetitions);

/// Worker thread count for the analysis passes: hardware concurrency capped by
/// SWARMPATH_THREADS when set.
unsigned analysis_threads();

/// Runs body(i) for i in [0, n) across analysis_threads() workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> & body);

}  // namespace swarmpath
