#include "swarmpath/swarm.hpp"

#include "swarmpath/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace swarmpath {

namespace {

using Clock = std::chrono::steady_clock;

class ScopedTimer
{
public:
  explicit ScopedTimer(double * sink) : sink_(sink), start_(Clock::now()) {}
  ~ScopedTimer()
  {
    if (sink_ != nullptr) { *sink_ += std::chrono::duration<double>(Clock::now() - start_).count(); }
  }
  ScopedTimer(const ScopedTimer &)             = delete;
  ScopedTimer & operator=(const ScopedTimer &) = delete;

private:
  double * sink_;
  Clock::time_point start_;
};

// Minimum forward progress, as a fraction of h, along the previous heading.
// Keeps every turn strictly below 90 degrees.
constexpr double kTurnMargin = 0.02;

double refresh_mass(const StressField & field, const Vec2 & p, double fallback)
{
  if (!field.in_domain(p)) { return fallback; }
  return virtual_mass(field, field.sample(p));
}

// True if some point of the box around `t` lies in the part.
bool box_meets_part(const PartSlice & slice, const AgentTarget & t)
{
  if (contains(slice, t.point)) { return true; }
  const std::array<Vec2, 4> corners{
    t.point + t.lower[0] * t.axial + t.lower[1] * t.radial,
    t.point + t.upper[0] * t.axial + t.lower[1] * t.radial,
    t.point + t.upper[0] * t.axial + t.upper[1] * t.radial,
    t.point + t.lower[0] * t.axial + t.upper[1] * t.radial};
  for (const auto & c : corners) {
    if (contains(slice, c)) { return true; }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (segment_hits(slice, corners[i], corners[(i + 1) % 4])) { return true; }
  }
  return false;
}

}  // namespace

std::string_view to_string(EventKind kind)
{
  switch (kind) {
    case EventKind::Spawn: return "spawn";
    case EventKind::Kill: return "kill";
    case EventKind::InnerBoundaryAdd: return "inner_boundary_add";
    case EventKind::InnerBoundaryRemove: return "inner_boundary_remove";
  }
  return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view name)
{
  for (auto k : {EventKind::Spawn, EventKind::Kill, EventKind::InnerBoundaryAdd, EventKind::InnerBoundaryRemove}) {
    if (to_string(k) == name) { return k; }
  }
  return std::nullopt;
}

bool Swarm::linked(std::size_t i) const
{
  const Agent & a = agents[i];
  const Agent & b = agents[i + 1];
  return !(a.kind == AgentKind::InnerBoundary && b.kind == AgentKind::InnerBoundary && a.hole_pair == b.hole_pair);
}

std::size_t Swarm::interior_count() const
{
  return static_cast<std::size_t>(
    std::count_if(agents.begin(), agents.end(), [](const Agent & a) { return a.kind == AgentKind::Interior; }));
}

void compute_directions(TrajectorySet & traj)
{
  for (auto & trace : traj.traces) {
    const auto & pts = trace.points;
    const std::size_t n = pts.size();
    trace.directions.assign(n, Vec2::UnitX());
    if (n < 2) { continue; }
    std::vector<Vec2> chords(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Vec2 c = pts[i + 1] - pts[i];
      chords[i]    = c.norm() > 0.0 ? Vec2(c.normalized()) : Vec2::UnitX();
    }
    trace.directions[0]     = chords.front();
    trace.directions[n - 1] = chords.back();
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Vec2 sum      = chords[i - 1] + chords[i];
      trace.directions[i] = sum.norm() > 1e-12 ? Vec2(sum.normalized()) : chords[i];
    }
  }
}

// ---------------------------------------------------------------------------

Swarm init_swarm(
  const PartSlice & slice, const StressField & field, const Segment & seed_edge, double spacing, double weight)
{
  const std::string where = "swarm_engine::init_swarm";
  if (!(spacing > 0.0)) { throw ValidationError(where, "spacing must be > 0"); }
  if (!(weight > 0.0)) { throw ValidationError(where, "K must be > 0"); }

  Vec2 a = seed_edge.a;
  Vec2 b = seed_edge.b;
  const double len = (b - a).norm();
  constexpr double kOnLoop = 1e-6;
  const auto [mid_cursor, mid_dist] = project_to_loop(slice, 0, 0.5 * (a + b));
  if (project_to_loop(slice, 0, a).second > kOnLoop || project_to_loop(slice, 0, b).second > kOnLoop
      || mid_dist > kOnLoop) {
    throw ValidationError(where, "seed edge does not lie on the outer boundary");
  }
  const auto n_interior = static_cast<long>(std::floor(len / spacing + 1e-9)) - 1;
  if (n_interior < 1) {
    throw SeedTooShort(where, "seed edge of length " + std::to_string(len) + " mm fits no interior agent at spacing "
                                + std::to_string(spacing) + " mm");
  }

  // Agents run along the loop direction; the inward normal is its left side.
  const Vec2 loop_dir = slice.tangent(mid_cursor);
  if ((b - a).dot(loop_dir) < 0.0) { std::swap(a, b); }
  const Vec2 along  = (b - a) / len;
  const Vec2 inward = perp(loop_dir);

  Swarm swarm;
  swarm.spacing = spacing;
  swarm.step    = spacing;
  swarm.weight  = weight;

  auto make = [&](const Vec2 & p, AgentKind kind) {
    Agent agent;
    agent.pos      = p;
    agent.prev_pos = p - swarm.step * inward;
    agent.kind     = kind;
    if (kind != AgentKind::Interior) {
      agent.cursor = project_to_loop(slice, 0, p).first;
      agent.pos    = slice.to_point(*agent.cursor);
      agent.prev_pos = agent.pos - swarm.step * inward;
    }
    agent.mass = refresh_mass(field, agent.pos, 1.0);
    return agent;
  };

  swarm.agents.push_back(make(a, AgentKind::OuterBoundary));
  for (long j = 1; j <= n_interior; ++j) {
    swarm.agents.push_back(make(a + static_cast<double>(j) * spacing * along, AgentKind::Interior));
  }
  swarm.agents.push_back(make(b, AgentKind::OuterBoundary));
  return swarm;
}

Vec2 ideal_step(const Agent & agent, const StressField & field, double step)
{
  const StressSample s = field.sample(agent.pos);
  const Vec2 heading   = agent.pos - agent.prev_pos;
  if (s.magnitude == 0.0) {
    if (heading.norm() == 0.0) {
      throw StalledAgent("swarm_engine::ideal_step", "zero stress and no previous displacement");
    }
    return agent.pos + step * heading.normalized();
  }
  const double mu = s.direction.dot(heading) >= 0.0 ? 1.0 : -1.0;
  return agent.pos + mu * step * s.direction;
}

BoundaryCursor boundary_ideal_step(const Agent & agent, const PartSlice & slice, double step)
{
  const BoundaryCursor & c = *agent.cursor;
  const BoundaryCursor fwd = cursor_advance(slice, c, step);
  const BoundaryCursor bwd = cursor_advance(slice, c, -step);
  const Vec2 heading       = agent.pos - agent.prev_pos;
  const double dot_fwd     = (slice.to_point(fwd) - agent.pos).dot(heading);
  const double dot_bwd     = (slice.to_point(bwd) - agent.pos).dot(heading);
  return dot_fwd >= dot_bwd ? fwd : bwd;
}

AgentTarget compute_target(const Agent & agent, const Swarm & swarm, const PartSlice & slice, const StressField & field)
{
  const double h = swarm.step;
  AgentTarget t;
  if (agent.is_boundary()) {
    t.cursor  = boundary_ideal_step(agent, slice, h);
    t.point   = slice.to_point(*t.cursor);
    t.tangent = slice.tangent(*t.cursor);
    t.lower   = {-0.25 * h, 0.0};
    t.upper   = {0.25 * h, 0.0};
    return t;
  }

  t.point  = ideal_step(agent, field, h);
  t.axial  = (t.point - agent.pos) / h;
  t.axial.normalize();
  t.radial = perp(t.axial);
  t.lower  = {-0.25 * h, -0.125 * h};
  t.upper  = {0.25 * h, 0.125 * h};

  // Tighten the radial side that would bend the path by 90 degrees or more.
  const Vec2 heading = agent.pos - agent.prev_pos;
  if (heading.norm() > 0.0) {
    const Vec2 p   = heading.normalized();
    const double c = p.dot(t.axial);
    const double s = p.dot(t.radial);
    if (s > 0.0) {
      t.lower[1] = std::max(t.lower[1], (kTurnMargin - 0.75 * c) * h / s);
    } else if (s < 0.0) {
      t.upper[1] = std::min(t.upper[1], (0.75 * c - kTurnMargin) * h / (-s));
    }
    if (t.lower[1] > t.upper[1]) { t.lower[1] = t.upper[1]; }
  }
  t.exits = !box_meets_part(slice, t);
  return t;
}

std::vector<AgentTarget> compute_targets(const Swarm & swarm, const PartSlice & slice, const StressField & field)
{
  std::vector<AgentTarget> targets;
  targets.reserve(swarm.agents.size());
  for (const auto & agent : swarm.agents) { targets.push_back(compute_target(agent, swarm, slice, field)); }
  return targets;
}

Vec2 radial_direction(const Agent & left, const Agent & right, const Vec2 & left_target, const Vec2 & right_target)
{
  const Vec2 travel = (left.pos - left.prev_pos) + (right.pos - right.prev_pos);
  if (travel.norm() > 1e-12) { return Vec2(travel.y(), -travel.x()).normalized(); }
  const Vec2 v = right_target - left_target;
  return v.norm() > 0.0 ? Vec2(v.normalized()) : Vec2::UnitX();
}

AssembledQp assemble_qp(const Swarm & swarm, const std::vector<AgentTarget> & targets)
{
  const std::size_t n = swarm.agents.size();
  AssembledQp out;
  out.offsets.resize(n);
  Eigen::Index dim = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.offsets[i] = dim;
    dim += swarm.agents[i].is_boundary() ? 1 : 2;
  }

  BoxQp<double> & qp = out.qp;
  qp.linear = Eigen::VectorXd::Zero(dim);
  qp.lower.resize(dim);
  qp.upper.resize(dim);
  qp.constant = 0.0;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 20);

  // Columns of E_i: how agent i's position moves with its offsets.
  struct Frame
  {
    std::array<Vec2, 2> cols;
    int count;
  };
  auto frame = [&](std::size_t i) {
    const AgentTarget & t = targets[i];
    return swarm.agents[i].is_boundary() ? Frame{{t.tangent, Vec2::Zero()}, 1} : Frame{{t.axial, t.radial}, 2};
  };

  // Environment potential K m ||delta||^2 and bounds.
  for (std::size_t i = 0; i < n; ++i) {
    const Frame f    = frame(i);
    const double w   = 2.0 * swarm.weight * swarm.agents[i].mass;
    for (int k = 0; k < f.count; ++k) {
      const Eigen::Index v = out.offsets[i] + k;
      trip.emplace_back(v, v, w);
      qp.lower(v) = targets[i].lower[static_cast<std::size_t>(k)];
      qp.upper(v) = targets[i].upper[static_cast<std::size_t>(k)];
    }
  }

  // Aggregation potential over linked consecutive pairs:
  //   (v.d - l)^2 + (v.n)^2,  v = x_j - x_i,  n = perp(d).
  std::array<std::pair<Eigen::Index, double>, 4> row{};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!swarm.linked(i)) { continue; }
    const std::size_t j = i + 1;
    const Vec2 d = radial_direction(swarm.agents[i], swarm.agents[j], targets[i].point, targets[j].point);
    const Vec2 axial_dir = perp(d);
    const Vec2 v0        = targets[j].point - targets[i].point;
    const Frame fi       = frame(i);
    const Frame fj       = frame(j);

    for (int term = 0; term < 2; ++term) {
      const Vec2 & u   = term == 0 ? d : axial_dir;
      const double r0  = v0.dot(u) - (term == 0 ? swarm.spacing : 0.0);
      std::size_t nnz  = 0;
      for (int k = 0; k < fi.count; ++k) { row[nnz++] = {out.offsets[i] + k, -u.dot(fi.cols[static_cast<std::size_t>(k)])}; }
      for (int k = 0; k < fj.count; ++k) { row[nnz++] = {out.offsets[j] + k, u.dot(fj.cols[static_cast<std::size_t>(k)])}; }
      for (std::size_t a = 0; a < nnz; ++a) {
        qp.linear(row[a].first) += 2.0 * r0 * row[a].second;
        for (std::size_t b = 0; b < nnz; ++b) {
          trip.emplace_back(row[a].first, row[b].first, 2.0 * row[a].second * row[b].second);
        }
      }
      qp.constant += r0 * r0;
    }
  }

  qp.quadratic.resize(dim, dim);
  qp.quadratic.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Vec2 displaced_position(const Agent & agent, const AgentTarget & target, const PartSlice & slice,
                        const Eigen::Ref<const Eigen::VectorXd> & z, Eigen::Index offset,
                        std::optional<BoundaryCursor> * cursor_out)
{
  if (agent.is_boundary()) {
    const BoundaryCursor c = cursor_advance(slice, *target.cursor, z(offset));
    if (cursor_out != nullptr) { *cursor_out = c; }
    return slice.to_point(c);
  }
  if (cursor_out != nullptr) { cursor_out->reset(); }
  return target.point + z(offset) * target.axial + z(offset + 1) * target.radial;
}

namespace {

Eigen::VectorXd warm_start(const Swarm & swarm, const AssembledQp & a)
{
  Eigen::VectorXd x(a.qp.dim());
  for (std::size_t i = 0; i < swarm.agents.size(); ++i) {
    const Agent & agent = swarm.agents[i];
    x(a.offsets[i]) = agent.last_offset.x();
    if (!agent.is_boundary()) { x(a.offsets[i] + 1) = agent.last_offset.y(); }
  }
  return x;
}

Swarm apply_solution(
  const Swarm & swarm, const std::vector<AgentTarget> & targets, const AssembledQp & assembled,
  const Eigen::VectorXd & z, const PartSlice & slice, const StressField & field)
{
  Swarm next = swarm;
  for (std::size_t i = 0; i < next.agents.size(); ++i) {
    Agent & agent = next.agents[i];
    const Eigen::Index off = assembled.offsets[i];
    std::optional<BoundaryCursor> cursor;
    const Vec2 pos = displaced_position(agent, targets[i], slice, z, off, &cursor);
    agent.prev_pos = agent.pos;
    agent.pos      = pos;
    if (agent.is_boundary()) {
      agent.cursor      = cursor;
      agent.last_offset = {z(off), 0.0};
      agent.travelled += (agent.pos - agent.prev_pos).norm();
    } else {
      agent.last_offset = {z(off), z(off + 1)};
    }
    agent.mass = refresh_mass(field, agent.pos, agent.mass);
  }
  ++next.iteration;
  return next;
}

QpSolution<double> solve_scenario(
  const Swarm & swarm, const AssembledQp & assembled, const QpSettings & settings)
{
  const Eigen::VectorXd x0 = warm_start(swarm, assembled);
  return solve(assembled.qp, settings, &x0);
}

}  // namespace

Swarm reposition(
  const Swarm & swarm, const std::vector<AgentTarget> & targets, const PartSlice & slice, const StressField & field,
  const QpSettings & settings)
{
  const AssembledQp assembled = assemble_qp(swarm, targets);
  const auto sol              = solve_scenario(swarm, assembled, settings);
  return apply_solution(swarm, targets, assembled, sol.x, slice, field);
}

Selection spawn_kill_select(
  const Swarm & swarm, const std::vector<AgentTarget> & targets, const PartSlice & slice, const StressField & field,
  const EngineConfig & config, PhaseTimes * times)
{
  const double l      = swarm.spacing;
  const std::size_t n = swarm.agents.size();
  double * t_assembly = times != nullptr ? &times->assembly : nullptr;
  double * t_solve    = times != nullptr ? &times->solve : nullptr;

  struct Scenario
  {
    Swarm swarm;
    std::vector<AgentTarget> targets;
    QpSolution<double> solution;
    double normalized = std::numeric_limits<double>::quiet_NaN();
    int changed_index = -1;
    Vec2 changed_position = Vec2::Zero();
  };

  auto evaluate = [&](Scenario & s) {
    AssembledQp assembled;
    {
      ScopedTimer timer(t_assembly);
      assembled = assemble_qp(s.swarm, s.targets);
    }
    ScopedTimer timer(t_solve);
    s.solution   = solve_scenario(s.swarm, assembled, config.qp);
    s.normalized = s.solution.objective / static_cast<double>(s.swarm.agents.size());
  };

  // Radial gaps of linked pairs, measured between targets.
  double min_gap = std::numeric_limits<double>::infinity();
  double max_gap = -std::numeric_limits<double>::infinity();
  std::size_t min_pair = n;
  std::size_t max_pair = n;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!swarm.linked(i)) { continue; }
    const Agent & a = swarm.agents[i];
    const Agent & b = swarm.agents[i + 1];
    const Vec2 d    = radial_direction(a, b, targets[i].point, targets[i + 1].point);
    const double gap = (targets[i + 1].point - targets[i].point).dot(d);
    if ((!a.is_boundary() || !b.is_boundary()) && gap < min_gap) {
      min_gap  = gap;
      min_pair = i;
    }
    if (gap > max_gap) {
      max_gap  = gap;
      max_pair = i;
    }
  }

  Scenario keep{swarm, targets, {}, std::numeric_limits<double>::quiet_NaN(), -1, Vec2::Zero()};
  evaluate(keep);

  std::optional<Scenario> kill;
  if (min_pair < n && min_gap < config.kill_gap * l) {
    const Agent & a = swarm.agents[min_pair];
    const Agent & b = swarm.agents[min_pair + 1];
    std::size_t victim;
    if (a.is_boundary()) {
      victim = min_pair + 1;
    } else if (b.is_boundary()) {
      victim = min_pair;
    } else {
      victim = b.mass < a.mass ? min_pair + 1 : min_pair;
    }
    Scenario s{swarm, targets, {}, std::numeric_limits<double>::quiet_NaN(), static_cast<int>(victim),
               swarm.agents[victim].pos};
    s.swarm.agents.erase(s.swarm.agents.begin() + static_cast<std::ptrdiff_t>(victim));
    s.targets.erase(s.targets.begin() + static_cast<std::ptrdiff_t>(victim));
    evaluate(s);
    kill = std::move(s);
  }

  std::optional<Scenario> spawn;
  if (max_pair < n && max_gap > config.spawn_gap * l) {
    const Agent & a = swarm.agents[max_pair];
    const Agent & b = swarm.agents[max_pair + 1];
    Agent born;
    born.kind     = AgentKind::Interior;
    born.pos      = 0.5 * (a.pos + b.pos);
    born.prev_pos = 0.5 * (a.prev_pos + b.prev_pos);
    if (contains(slice, born.pos) && field.in_domain(born.pos) && (born.pos - born.prev_pos).norm() > 0.0) {
      born.mass = refresh_mass(field, born.pos, 1.0);
      born.last_offset = 0.5 * (a.last_offset + b.last_offset);
      if (a.is_boundary() || b.is_boundary()) { born.last_offset.setZero(); }
      const AgentTarget bt = compute_target(born, swarm, slice, field);
      const Vec2 chord     = b.pos - a.pos;
      const bool forward   = chord.norm() == 0.0 || bt.axial.dot(perp(chord.normalized())) >= config.retrograde_cos;
      if (!bt.exits && forward) {
        const auto at = static_cast<std::ptrdiff_t>(max_pair + 1);
        Scenario s{swarm, targets, {}, std::numeric_limits<double>::quiet_NaN(), static_cast<int>(max_pair + 1),
                   born.pos};
        s.swarm.agents.insert(s.swarm.agents.begin() + at, born);
        s.targets.insert(s.targets.begin() + at, bt);
        evaluate(s);
        spawn = std::move(s);
      }
    }
  }

  Scenario * best = &keep;
  int choice      = 0;
  if (kill && kill->normalized < best->normalized) {
    best   = &*kill;
    choice = -1;
  }
  if (spawn && spawn->normalized < best->normalized) {
    best   = &*spawn;
    choice = 1;
  }

  Selection sel;
  sel.choice           = choice;
  sel.normalized       = {kill ? kill->normalized : std::numeric_limits<double>::quiet_NaN(), keep.normalized,
                          spawn ? spawn->normalized : std::numeric_limits<double>::quiet_NaN()};
  sel.changed_index    = best->changed_index;
  sel.changed_position = best->changed_position;
  sel.swarm            = std::move(best->swarm);
  sel.targets          = std::move(best->targets);
  sel.solution         = std::move(best->solution);
  return sel;
}

HoleUpdate handle_holes(
  Swarm & swarm, std::vector<AgentTarget> & targets, const PartSlice & slice, const StressField & field,
  std::vector<int> & hole_state, int & next_uid, int & next_pair)
{
  HoleUpdate update;
  const double l = swarm.spacing;
  const double h = swarm.step;

  // Inner boundary pairs that met past their hole leave the swarm.
  for (std::size_t i = 0; i + 1 < swarm.agents.size(); ++i) {
    const Agent & left  = swarm.agents[i];
    const Agent & right = swarm.agents[i + 1];
    if (left.kind != AgentKind::InnerBoundary || right.kind != AgentKind::InnerBoundary
        || left.hole_pair != right.hole_pair) {
      continue;
    }
    const std::size_t loop = left.cursor->loop_id;
    const double perimeter = slice.perimeter(loop);
    double remaining = std::fmod(left.loop_direction * (right.cursor->arc_length - left.cursor->arc_length), perimeter);
    if (remaining < 0.0) { remaining += perimeter; }
    const bool met     = remaining < l;
    const bool crossed = left.travelled + right.travelled > 0.5 * perimeter && remaining > 0.5 * perimeter;
    if (!met && !crossed) { continue; }
    update.events.push_back({swarm.iteration, EventKind::InnerBoundaryRemove, static_cast<int>(i), left.pos});
    update.events.push_back({swarm.iteration, EventKind::InnerBoundaryRemove, static_cast<int>(i + 1), right.pos});
    swarm.agents.erase(swarm.agents.begin() + static_cast<std::ptrdiff_t>(i), swarm.agents.begin() + static_cast<std::ptrdiff_t>(i + 2));
    targets.erase(targets.begin() + static_cast<std::ptrdiff_t>(i), targets.begin() + static_cast<std::ptrdiff_t>(i + 2));
    hole_state.at(loop - 1) = 2;
    if (i > 0) { --i; }
  }

  // First contact with an untouched hole splits the swarm around it.
  for (std::size_t hole = 0; hole < slice.hole_count(); ++hole) {
    if (hole_state.at(hole) != 0) { continue; }
    const std::size_t loop = hole + 1;
    const std::size_t n    = swarm.agents.size();

    std::optional<SegmentHit> hit;
    std::size_t left = 0, right = 0;
    bool remove_middle = false;
    for (std::size_t i = 0; i < n && !hit; ++i) {
      if (!swarm.agents[i].is_boundary()) {
        if (auto step_hit = segment_hits_loop(slice, loop, swarm.agents[i].pos, targets[i].point)) {
          if (i == 0 || i + 1 >= n) { continue; }
          hit           = step_hit;
          left          = i - 1;
          right         = i + 1;
          remove_middle = true;
          break;
        }
      }
      if (i + 1 < n && swarm.linked(i)) {
        if (auto pair_hit = segment_hits_loop(slice, loop, targets[i].point, targets[i + 1].point)) {
          hit   = pair_hit;
          left  = i;
          right = i + 1;
        }
      }
    }
    if (!hit) { continue; }

    if (slice.perimeter(loop) < 4.0 * l) {
      throw HoleTooSmall(
        "swarm_engine::handle_holes", "hole " + std::to_string(hole) + " perimeter " + std::to_string(slice.perimeter(loop))
                                        + " mm is below 4 l");
    }

    const Vec2 left_pos  = swarm.agents[left].pos;
    const Vec2 right_pos = swarm.agents[right].pos;
    const BoundaryCursor center = project_to_loop(slice, loop, hit->point).first;
    const Vec2 plus  = slice.to_point(cursor_advance(slice, center, 0.5 * l));
    const Vec2 minus = slice.to_point(cursor_advance(slice, center, -0.5 * l));
    const int toward_left = (plus - minus).dot(left_pos - right_pos) >= 0.0 ? 1 : -1;

    const int pair = next_pair++;
    auto make_inner = [&](int direction) {
      Agent agent;
      agent.kind           = AgentKind::InnerBoundary;
      agent.cursor         = cursor_advance(slice, center, direction * 0.5 * l);
      agent.pos            = slice.to_point(*agent.cursor);
      agent.prev_pos       = slice.to_point(cursor_advance(slice, *agent.cursor, -direction * h));
      agent.hole_pair      = pair;
      agent.loop_direction = direction;
      agent.uid            = next_uid++;
      agent.mass           = refresh_mass(field, agent.pos, 1.0);
      return agent;
    };
    Agent inner_left  = make_inner(toward_left);
    Agent inner_right = make_inner(-toward_left);
    const AgentTarget t_left  = compute_target(inner_left, swarm, slice, field);
    const AgentTarget t_right = compute_target(inner_right, swarm, slice, field);

    std::size_t insert_at = right;
    if (remove_middle) {
      const std::size_t middle = left + 1;
      update.closed_traces.push_back(swarm.agents[middle].trace_id);
      swarm.agents.erase(swarm.agents.begin() + static_cast<std::ptrdiff_t>(middle));
      targets.erase(targets.begin() + static_cast<std::ptrdiff_t>(middle));
      insert_at = middle;
    }
    const auto at = static_cast<std::ptrdiff_t>(insert_at);
    swarm.agents.insert(swarm.agents.begin() + at, {inner_left, inner_right});
    targets.insert(targets.begin() + at, {t_left, t_right});
    update.events.push_back({swarm.iteration, EventKind::InnerBoundaryAdd, static_cast<int>(insert_at), inner_left.pos});
    update.events.push_back(
      {swarm.iteration, EventKind::InnerBoundaryAdd, static_cast<int>(insert_at + 1), inner_right.pos});
    hole_state.at(hole) = 1;
  }
  return update;
}

std::vector<bool> retrograde_agents(const Swarm & swarm, const std::vector<AgentTarget> & targets, double min_cos)
{
  const std::size_t n = swarm.agents.size();
  std::vector<bool> out(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (swarm.agents[i].is_boundary()) { continue; }
    const Vec2 & left  = i > 0 && swarm.linked(i - 1) ? swarm.agents[i - 1].pos : swarm.agents[i].pos;
    const Vec2 & right = i + 1 < n && swarm.linked(i) ? swarm.agents[i + 1].pos : swarm.agents[i].pos;
    const Vec2 chord   = right - left;
    if (chord.norm() == 0.0) { continue; }
    // List order runs to the right of travel, so the front advances along perp(chord).
    const Vec2 forward = perp(chord.normalized());
    out[i]             = targets[i].axial.dot(forward) < min_cos;
  }
  return out;
}

Segment default_seed_edge(const PartSlice & slice, const StressField & field, double spacing)
{
  const Polyline & outer = slice.outer();
  const std::size_t n    = outer.size();
  std::optional<std::size_t> best;
  double best_len = 0.0, best_mag = 0.0;
  constexpr double kRel = 1e-9;
  for (std::size_t e = 0; e < n; ++e) {
    const Vec2 & a   = outer[e];
    const Vec2 & b   = outer[(e + 1) % n];
    const double len = (b - a).norm();
    if (len < 2.0 * spacing) { continue; }
    const Vec2 mid   = 0.5 * (a + b);
    const double mag = field.in_domain(mid) ? field.sample(mid).magnitude : 0.0;
    bool better      = !best;
    if (best) {
      if (len < best_len * (1.0 - kRel)) {
        better = true;
      } else if (len <= best_len * (1.0 + kRel) && mag > best_mag * (1.0 + kRel)) {
        better = true;
      }
    }
    if (better) {
      best     = e;
      best_len = len;
      best_mag = mag;
    }
  }
  if (!best) { throw SeedTooShort("swarm_engine::default_seed_edge", "no outer edge is at least 2 l long"); }
  return {outer[*best], outer[(*best + 1) % n]};
}

// ---------------------------------------------------------------------------

namespace {

class Generator
{
public:
  Generator(const PartSlice & slice, const StressField & field, const EngineConfig & config)
      : slice_(slice), field_(field), config_(config)
  {}

  RunResult run()
  {
    const auto start = Clock::now();
    const std::string where = "swarm_engine::run";
    if (!(config_.spacing > 0.0)) { throw ValidationError(where, "spacing must be > 0"); }
    if (!(config_.weight > 0.0)) { throw ValidationError(where, "K must be > 0"); }
    if (config_.max_iterations < 1) { throw ValidationError(where, "max_iterations must be >= 1"); }
    for (std::size_t hole = 0; hole < slice_.hole_count(); ++hole) {
      if (slice_.perimeter(hole + 1) < 4.0 * config_.spacing) {
        throw HoleTooSmall(where, "hole " + std::to_string(hole) + " is too small for spacing "
                                    + std::to_string(config_.spacing) + " mm");
      }
    }

    {
      ScopedTimer timer(&times_.sampling);
      swarm_ = init_swarm(slice_, field_, config_.seed_edge, config_.spacing, config_.weight);
    }
    for (auto & agent : swarm_.agents) {
      agent.uid = next_uid_++;
      if (!agent.is_boundary()) { agent.trace_id = open_trace(agent.pos); }
    }
    record_successors_initial();
    hole_state_.assign(slice_.hole_count(), 0);

    bool incomplete = false;
    while (true) {
      if (swarm_.iteration >= config_.max_iterations) {
        incomplete = true;
        break;
      }
      if (!iterate()) { break; }
    }

    close_all();
    RunResult result;
    result.trajectories.events = std::move(events_);
    finalize(result.trajectories);
    result.trajectories.info = {config_.spacing, config_.weight, config_.seed_edge, config_.max_iterations,
                                swarm_.iteration, incomplete};
    times_.total = std::chrono::duration<double>(Clock::now() - start).count();
    result.times = times_;
    return result;
  }

private:
  int open_trace(const Vec2 & first)
  {
    Trace t;
    t.id        = static_cast<int>(traces_.size());
    t.born_iter = swarm_.iteration;
    t.died_iter = -1;
    t.points.push_back(first);
    t.successors.push_back(-1);
    traces_.push_back(std::move(t));
    return traces_.back().id;
  }

  void close_trace(int id)
  {
    if (id >= 0 && traces_[static_cast<std::size_t>(id)].died_iter < 0) {
      traces_[static_cast<std::size_t>(id)].died_iter = swarm_.iteration;
    }
  }

  int successor_of(const Swarm & s, std::size_t i) const
  {
    if (i + 1 >= s.agents.size() || !s.linked(i)) { return -1; }
    const Agent & next = s.agents[i + 1];
    return next.is_boundary() ? -1 : next.trace_id;
  }

  void record_successors_initial()
  {
    for (std::size_t i = 0; i < swarm_.agents.size(); ++i) {
      const Agent & a = swarm_.agents[i];
      if (!a.is_boundary()) { traces_[static_cast<std::size_t>(a.trace_id)].successors.back() = successor_of(swarm_, i); }
    }
  }

  void remove_agents(std::vector<AgentTarget> & targets, const std::vector<bool> & drop)
  {
    std::vector<Agent> agents;
    std::vector<AgentTarget> kept;
    for (std::size_t i = 0; i < swarm_.agents.size(); ++i) {
      if (drop[i]) { continue; }
      agents.push_back(std::move(swarm_.agents[i]));
      kept.push_back(std::move(targets[i]));
    }
    swarm_.agents = std::move(agents);
    targets       = std::move(kept);
  }

  // One pass of the loop; false once the part is covered.
  bool iterate()
  {
    std::vector<AgentTarget> targets;
    {
      ScopedTimer timer(&times_.sampling);
      targets = compute_targets(swarm_, slice_, field_);
    }

    {
      ScopedTimer timer(&times_.geometry);
      // Agents whose whole box lies outside the part have reached the far boundary.
      std::vector<bool> exits(swarm_.agents.size(), false);
      std::size_t interior = 0, exiting = 0;
      for (std::size_t i = 0; i < swarm_.agents.size(); ++i) {
        if (swarm_.agents[i].is_boundary()) { continue; }
        ++interior;
        if (targets[i].exits) {
          exits[i] = true;
          ++exiting;
        }
      }
      if (interior == 0 || exiting == interior) { return false; }
      if (exiting > 0) {
        for (std::size_t i = 0; i < swarm_.agents.size(); ++i) {
          if (exits[i]) { close_trace(swarm_.agents[i].trace_id); }
        }
        remove_agents(targets, exits);
      }

      // Agents whose step runs back through their own front would fold their
      // line over its neighbours; they leave the swarm.
      const std::vector<bool> back = retrograde_agents(swarm_, targets, config_.retrograde_cos);
      if (std::find(back.begin(), back.end(), true) != back.end()) {
        for (std::size_t i = 0; i < swarm_.agents.size(); ++i) {
          if (!back[i]) { continue; }
          close_trace(swarm_.agents[i].trace_id);
          events_.push_back({swarm_.iteration, EventKind::Kill, static_cast<int>(i), swarm_.agents[i].pos});
        }
        remove_agents(targets, back);
        if (swarm_.interior_count() == 0) { return false; }
      }

      HoleUpdate update = handle_holes(swarm_, targets, slice_, field_, hole_state_, next_uid_, next_pair_);
      for (int id : update.closed_traces) { close_trace(id); }
      for (auto & e : update.events) { events_.push_back(e); }
      if (swarm_.interior_count() == 0) { return false; }
    }

    Selection sel = spawn_kill_select(swarm_, targets, slice_, field_, config_, &times_);
    if (sel.choice == -1) {
      close_trace(swarm_.agents[static_cast<std::size_t>(sel.changed_index)].trace_id);
      events_.push_back({swarm_.iteration, EventKind::Kill, sel.changed_index, sel.changed_position});
    } else if (sel.choice == 1) {
      Agent & born  = sel.swarm.agents[static_cast<std::size_t>(sel.changed_index)];
      born.uid      = next_uid_++;
      born.trace_id = open_trace(born.pos);
      traces_.back().successors.back() = successor_of(sel.swarm, static_cast<std::size_t>(sel.changed_index));
      events_.push_back({swarm_.iteration, EventKind::Spawn, sel.changed_index, sel.changed_position});
    }

    // Reposition with the selected scenario's optimum.
    AssembledQp assembled;
    {
      ScopedTimer timer(&times_.assembly);
      assembled = assemble_qp(sel.swarm, sel.targets);
    }
    {
      ScopedTimer timer(&times_.sampling);
      swarm_ = apply_solution(sel.swarm, sel.targets, assembled, sel.solution.x, slice_, field_);
    }

    ScopedTimer timer(&times_.geometry);
    const double h = swarm_.step;
    std::vector<bool> outside(swarm_.agents.size(), false);
    bool any_outside = false;
    for (std::size_t i = 0; i < swarm_.agents.size(); ++i) {
      const Agent & a = swarm_.agents[i];
      if (a.is_boundary()) { continue; }
      Trace & trace = traces_[static_cast<std::size_t>(a.trace_id)];
      const int succ = successor_of(swarm_, i);
      if (contains(slice_, a.pos)) {
        trace.points.push_back(a.pos);
        trace.successors.push_back(succ);
        continue;
      }
      // Left the part: end the trace where the step crosses the boundary.
      outside[i]  = true;
      any_outside = true;
      if (auto hit = segment_hits(slice_, a.pos, a.prev_pos)) {
        if ((hit->point - trace.points.back()).norm() >= 0.5 * h) {
          trace.points.push_back(hit->point);
          trace.successors.push_back(succ);
        }
      }
      close_trace(a.trace_id);
    }
    if (any_outside) {
      std::vector<AgentTarget> dummy(swarm_.agents.size());
      remove_agents(dummy, outside);
    }
    return swarm_.interior_count() > 0;
  }

  void close_all()
  {
    for (auto & t : traces_) {
      if (t.died_iter < 0) { t.died_iter = swarm_.iteration; }
    }
  }

  void finalize(TrajectorySet & out)
  {
    std::vector<bool> keep(traces_.size());
    for (std::size_t i = 0; i < traces_.size(); ++i) { keep[i] = traces_[i].points.size() >= 2; }
    for (std::size_t i = 0; i < traces_.size(); ++i) {
      if (!keep[i]) { continue; }
      Trace t = std::move(traces_[i]);
      for (int & s : t.successors) {
        if (s >= 0 && !keep[static_cast<std::size_t>(s)]) { s = -1; }
      }
      t.masses.reserve(t.points.size());
      for (const auto & p : t.points) { t.masses.push_back(refresh_mass(field_, p, kMinVirtualMass)); }
      out.traces.push_back(std::move(t));
    }
    compute_directions(out);
  }

  const PartSlice & slice_;
  const StressField & field_;
  const EngineConfig & config_;
  Swarm swarm_;
  std::vector<Trace> traces_;
  std::vector<SwarmEvent> events_;
  std::vector<int> hole_state_;
  PhaseTimes times_;
  int next_uid_  = 0;
  int next_pair_ = 0;
};

}  // namespace

RunResult run(const PartSlice & slice, const StressField & field, const EngineConfig & config)
{
  return Generator(slice, field, config).run();
}

}  // namespace swarmpath
