#include "swarmpath/analysis.hpp"

#include "swarmpath/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>

namespace swarmpath {

unsigned analysis_threads()
{
  unsigned n = std::max(1U, std::thread::hardware_concurrency());
  if (const char * env = std::getenv("SWARMPATH_THREADS")) {
    char * end       = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value >= 1) { n = std::min(n, static_cast<unsigned>(value)); }
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> & body)
{
  const unsigned workers = std::min<std::size_t>(analysis_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) { body(i); }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) { body(i); }
    });
  }
  for (auto & t : pool) { t.join(); }
}

namespace {

// Flat list of every trace segment, bucketed on a uniform grid.
class SegmentIndex
{
public:
  struct Entry
  {
    Vec2 a;
    Vec2 b;
    int trace;
  };

  SegmentIndex(const TrajectorySet & traj, double cell) : cell_(cell)
  {
    for (const auto & t : traj.traces) {
      for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
        entries_.push_back({t.points[i], t.points[i + 1], t.id});
        bounds_.extend(t.points[i]);
        bounds_.extend(t.points[i + 1]);
      }
    }
    if (entries_.empty()) { return; }
    nx_ = std::max(1, static_cast<int>(std::ceil(bounds_.sizes().x() / cell_)) + 1);
    ny_ = std::max(1, static_cast<int>(std::ceil(bounds_.sizes().y() / cell_)) + 1);
    buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
    for (std::size_t e = 0; e < entries_.size(); ++e) {
      const auto [x0, y0] = cell_of(entries_[e].a.cwiseMin(entries_[e].b));
      const auto [x1, y1] = cell_of(entries_[e].a.cwiseMax(entries_[e].b));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) { buckets_[index(x, y)].push_back(e); }
      }
    }
  }

  const std::vector<Entry> & entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Calls fn(entry index) for each segment bucketed in a cell overlapping box.
  template<typename Fn>
  void visit(const Vec2 & lo, const Vec2 & hi, Fn && fn) const
  {
    if (entries_.empty()) { return; }
    const auto [x0, y0] = cell_of(lo);
    const auto [x1, y1] = cell_of(hi);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        for (std::size_t e : buckets_[index(x, y)]) { fn(e); }
      }
    }
  }

private:
  std::pair<int, int> cell_of(const Vec2 & p) const
  {
    const Vec2 q = (p - bounds_.min()) / cell_;
    return {std::clamp(static_cast<int>(std::floor(q.x())), 0, nx_ - 1),
            std::clamp(static_cast<int>(std::floor(q.y())), 0, ny_ - 1)};
  }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(x); }

  double cell_;
  Box2 bounds_;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<Entry> entries_;
  std::vector<std::vector<std::size_t>> buckets_;
};

double median_of(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Histogram Histogram::build(const std::vector<double> & values, double lower, double width, std::size_t bins)
{
  Histogram h;
  h.lower = lower;
  h.width = width;
  h.counts.assign(bins, 0);
  for (double v : values) {
    const double q  = std::floor((v - lower) / width);
    const auto  bin = q < 0.0 ? 0 : std::min(static_cast<std::size_t>(q), bins - 1);
    ++h.counts[bin];
  }
  return h;
}

AlignmentReport alignment_beta(const TrajectorySet & traj, const StressField & field, bool keep_samples)
{
  const std::string where = "analysis::alignment_beta";
  std::size_t points = 0;
  for (const auto & t : traj.traces) { points += t.points.size(); }
  if (points == 0) { throw EmptyTrajectorySet(where, "no trajectory points"); }

  TrajectorySet with_dirs;
  const TrajectorySet * src = &traj;
  for (const auto & t : traj.traces) {
    if (t.directions.size() != t.points.size()) {
      with_dirs = traj;
      compute_directions(with_dirs);
      src = &with_dirs;
      break;
    }
  }

  // Per-trace partial sums, reduced in trace order for determinism.
  const std::size_t n = src->traces.size();
  std::vector<double> num(n, 0.0), den(n, 0.0);
  std::vector<std::vector<double>> per_point(n);
  parallel_for(n, [&](std::size_t k) {
    const Trace & t = src->traces[k];
    if (keep_samples) { per_point[k].reserve(t.points.size()); }
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const StressSample s = field.sample(t.points[i]);
      const double cosine  = std::abs(s.direction.dot(t.directions[i]));
      if (keep_samples) { per_point[k].push_back(cosine); }
      if (s.magnitude == 0.0) { continue; }
      const double m = virtual_mass(field, s);
      num[k] += m * cosine;
      den[k] += m;
    }
  });

  AlignmentReport report;
  report.point_count = points;
  double total_num = 0.0, total_den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total_num += num[k];
    total_den += den[k];
    if (keep_samples) { report.samples.insert(report.samples.end(), per_point[k].begin(), per_point[k].end()); }
  }
  if (total_den == 0.0) { throw DegenerateField(where, "field vanishes at every trajectory point"); }
  report.beta_bar = std::clamp(total_num / total_den, 0.0, 1.0);
  return report;
}

SpacingReport spacing_report(const TrajectorySet & traj, double spacing)
{
  const std::string where = "analysis::spacing_report";
  if (!(spacing > 0.0)) { throw ValidationError(where, "spacing must be > 0"); }
  if (traj.traces.empty()) { throw EmptyTrajectorySet(where, "no traces"); }
  if (traj.traces.size() == 1) { throw SingleTrace(where, "a single trace has no following trace"); }

  std::vector<const Trace *> by_id;
  for (const auto & t : traj.traces) {
    if (t.id < 0) { continue; }
    if (by_id.size() <= static_cast<std::size_t>(t.id)) { by_id.resize(static_cast<std::size_t>(t.id) + 1, nullptr); }
    by_id[static_cast<std::size_t>(t.id)] = &t;
  }

  const std::size_t n = traj.traces.size();
  std::vector<std::vector<double>> per_trace(n);
  parallel_for(n, [&](std::size_t k) {
    const Trace & t = traj.traces[k];
    for (std::size_t i = 0; i < t.points.size() && i < t.successors.size(); ++i) {
      const int s = t.successors[i];
      if (s < 0 || static_cast<std::size_t>(s) >= by_id.size() || by_id[static_cast<std::size_t>(s)] == nullptr) {
        continue;
      }
      const Polyline & other = by_id[static_cast<std::size_t>(s)]->points;
      per_trace[k].push_back(point_polyline_distance(t.points[i], other) / spacing);
    }
  });

  SpacingReport report;
  for (const auto & v : per_trace) { report.normalized_distances.insert(report.normalized_distances.end(), v.begin(), v.end()); }
  if (report.normalized_distances.empty()) { throw SingleTrace(where, "no point has a following trace"); }
  const auto & d = report.normalized_distances;
  const double count = static_cast<double>(d.size());
  double sum = 0.0;
  for (double x : d) { sum += x; }
  report.mean = sum / count;
  double sq = 0.0;
  for (double x : d) { sq += (x - report.mean) * (x - report.mean); }
  report.variance  = sq / count;
  report.histogram = Histogram::build(d);
  return report;
}

std::size_t crossing_count(const TrajectorySet & traj)
{
  double total = 0.0;
  std::size_t segs = 0;
  for (const auto & t : traj.traces) {
    for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
      total += (t.points[i + 1] - t.points[i]).norm();
      ++segs;
    }
  }
  if (segs == 0) { return 0; }
  const SegmentIndex index(traj, std::max(2.0 * total / static_cast<double>(segs), 1e-3));
  const auto & entries = index.entries();

  std::vector<std::size_t> per_seg(entries.size(), 0);
  parallel_for(entries.size(), [&](std::size_t e) {
    const auto & s = entries[e];
    std::vector<std::size_t> seen;
    index.visit(s.a.cwiseMin(s.b), s.a.cwiseMax(s.b), [&](std::size_t o) {
      if (o <= e || entries[o].trace == s.trace) { return; }
      if (std::find(seen.begin(), seen.end(), o) != seen.end()) { return; }
      seen.push_back(o);
      if (segments_cross(s.a, s.b, entries[o].a, entries[o].b)) { ++per_seg[e]; }
    });
  });
  std::size_t count = 0;
  for (std::size_t c : per_seg) { count += c; }
  return count;
}

CoverageReport coverage(const TrajectorySet & traj, const PartSlice & slice, double radius, double grid_step)
{
  const std::string where = "analysis::coverage";
  if (!(radius > 0.0) || !(grid_step > 0.0)) { throw ValidationError(where, "radius and grid step must be > 0"); }
  const SegmentIndex index(traj, radius);
  const Box2 & box = slice.bounds();
  const auto nx    = static_cast<std::size_t>(std::floor(box.sizes().x() / grid_step));
  const auto ny    = static_cast<std::size_t>(std::floor(box.sizes().y() / grid_step));
  // Grid centred in the bounding box.
  const Vec2 origin = box.min() + 0.5 * (box.sizes() - grid_step * Vec2(static_cast<double>(nx), static_cast<double>(ny)))
                      + Vec2::Constant(0.5 * grid_step);

  std::vector<std::size_t> inside(ny, 0), covered(ny, 0);
  parallel_for(ny, [&](std::size_t row) {
    for (std::size_t col = 0; col < nx; ++col) {
      const Vec2 p = origin + grid_step * Vec2(static_cast<double>(col), static_cast<double>(row));
      if (!contains(slice, p)) { continue; }
      ++inside[row];
      bool hit = false;
      index.visit(p - Vec2::Constant(radius), p + Vec2::Constant(radius), [&](std::size_t e) {
        if (!hit && point_segment_distance(p, index.entries()[e].a, index.entries()[e].b) <= radius) { hit = true; }
      });
      if (hit) { ++covered[row]; }
    }
  });

  CoverageReport report;
  for (std::size_t r = 0; r < ny; ++r) {
    report.samples += inside[r];
    report.covered += covered[r];
  }
  report.fraction = report.samples == 0 ? 1.0 : static_cast<double>(report.covered) / static_cast<double>(report.samples);
  return report;
}

double max_turn_angle_deg(const TrajectorySet & traj)
{
  double worst = 0.0;
  for (const auto & t : traj.traces) {
    for (std::size_t i = 1; i + 1 < t.points.size(); ++i) {
      const Vec2 u = t.points[i] - t.points[i - 1];
      const Vec2 v = t.points[i + 1] - t.points[i];
      if (u.norm() == 0.0 || v.norm() == 0.0) { continue; }
      const double angle = std::atan2(std::abs(cross(u, v)), u.dot(v));
      worst = std::max(worst, angle * 180.0 / std::numbers::pi);
    }
  }
  return worst;
}

TrajectorySet generate_baseline(const PartSlice & slice, const BaselineKind & kind)
{
  const std::string where = "analysis::generate_baseline";
  const double s = kind.spacing;
  if (!(s > 0.0)) { throw ValidationError(where, "spacing must be > 0"); }

  Vec2 u;
  if (kind.pattern == BaselineKind::Pattern::AlignedRectilinear) {
    const Vec2 size = slice.bounds().sizes();
    u = size.x() >= size.y() ? Vec2::UnitX() : Vec2::UnitY();
  } else {
    const double rad = kind.angle_deg * std::numbers::pi / 180.0;
    u = Vec2(std::cos(rad), std::sin(rad));
  }
  const Vec2 n = perp(u);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto & p : slice.outer()) {
    lo = std::min(lo, n.dot(p));
    hi = std::max(hi, n.dot(p));
  }
  const auto lines = std::max<long>(1, static_cast<long>(std::ceil((hi - lo) / s - 1e-9)));
  const double mid = 0.5 * (lo + hi);

  // rows[k]: pieces of line k as (t_start, t_end) along u.
  std::vector<std::vector<Polyline>> rows;
  for (long k = 0; k < lines; ++k) {
    const double offset = mid + (static_cast<double>(k) - 0.5 * static_cast<double>(lines - 1)) * s;
    std::vector<double> ts;
    for (std::size_t loop = 0; loop < slice.loop_count(); ++loop) {
      const Polyline & pts = slice.loop(loop);
      for (std::size_t e = 0; e < pts.size(); ++e) {
        const Vec2 & p0  = pts[e];
        const Vec2 & p1  = pts[(e + 1) % pts.size()];
        const double s0  = n.dot(p0) - offset;
        const double s1  = n.dot(p1) - offset;
        if ((s0 > 0.0) == (s1 > 0.0)) { continue; }
        ts.push_back(u.dot(p0 + (p1 - p0) * (s0 / (s0 - s1))));
      }
    }
    std::sort(ts.begin(), ts.end());
    std::vector<Polyline> pieces;
    for (std::size_t i = 0; i + 1 < ts.size(); i += 2) {
      const double len = ts[i + 1] - ts[i];
      if (len < s) { continue; }
      const auto segs = std::max<long>(1, static_cast<long>(std::ceil(len / s - 1e-9)));
      Polyline piece;
      for (long j = 0; j <= segs; ++j) {
        const double t = ts[i] + len * static_cast<double>(j) / static_cast<double>(segs);
        piece.push_back(offset * n + t * u);
      }
      pieces.push_back(std::move(piece));
    }
    if (!pieces.empty()) { rows.push_back(std::move(pieces)); }
  }

  TrajectorySet out;
  out.info.spacing = s;
  std::vector<std::pair<int, int>> first_id(rows.size());
  int next = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    first_id[r] = {next, next + static_cast<int>(rows[r].size())};
    next += static_cast<int>(rows[r].size());
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t p = 0; p < rows[r].size(); ++p) {
      Trace t;
      t.id     = first_id[r].first + static_cast<int>(p);
      t.points = rows[r][p];
      t.masses.assign(t.points.size(), 1.0);
      t.successors.assign(t.points.size(), -1);
      if (r + 1 < rows.size()) {
        for (std::size_t i = 0; i < t.points.size(); ++i) {
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t q = 0; q < rows[r + 1].size(); ++q) {
            const double d = point_polyline_distance(t.points[i], rows[r + 1][q]);
            if (d < best) {
              best            = d;
              t.successors[i] = first_id[r + 1].first + static_cast<int>(q);
            }
          }
        }
      }
      out.traces.push_back(std::move(t));
    }
  }
  compute_directions(out);
  return out;
}

BenchmarkReport benchmark(const PartSlice & slice, const StressField & field, const EngineConfig & config,
                          int repetitions)
{
  if (repetitions < 3) { throw ValidationError("analysis::benchmark", "repetitions must be >= 3"); }
  BenchmarkReport report;
  std::vector<double> sampling, assembly, solve, geometry, total, fraction;
  for (int r = 0; r < repetitions; ++r) {
    const auto start       = std::chrono::steady_clock::now();
    const RunResult result = run(slice, field, config);
    const double wall      = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.samples.push_back(wall);
    sampling.push_back(result.times.sampling);
    assembly.push_back(result.times.assembly);
    solve.push_back(result.times.solve);
    geometry.push_back(result.times.geometry);
    total.push_back(result.times.total);
    fraction.push_back(result.times.total > 0.0 ? result.times.solve / result.times.total : 0.0);
  }
  report.median = median_of(report.samples);
  report.min    = *std::min_element(report.samples.begin(), report.samples.end());
  report.max    = *std::max_element(report.samples.begin(), report.samples.end());
  report.phases = {median_of(sampling), median_of(assembly), median_of(solve), median_of(geometry), median_of(total)};
  report.solve_fraction = median_of(fraction);
  return report;
}

}  // namespace swarmpath
