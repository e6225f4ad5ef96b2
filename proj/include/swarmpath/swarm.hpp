#pragma once

#include "swarmpath/geometry.hpp"
#include "swarmpath/qp_solver.hpp"
#include "swarmpath/stress_field.hpp"

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace swarmpath {

enum class AgentKind { Interior, OuterBoundary, InnerBoundary };

/// One member of the swarm. Boundary kinds slide along a loop and always sit
/// at `to_point(*cursor)`.
struct Agent
{
  Vec2 pos      = Vec2::Zero();
  Vec2 prev_pos = Vec2::Zero();
  AgentKind kind = AgentKind::Interior;
  std::optional<BoundaryCursor> cursor;
  double mass  = 1.0;
  int trace_id = -1;
  int uid      = -1;

  // Inner boundary agents only.
  int hole_pair      = -1;   ///< shared by the two agents inserted together
  int loop_direction = 0;    ///< +1 / -1: direction of travel along the hole loop at insertion
  double travelled   = 0.0;  ///< arc covered since insertion

  /// Last QP displacement in the agent's frame, reused as a warm start.
  Vec2 last_offset = Vec2::Zero();

  bool is_boundary() const { return kind != AgentKind::Interior; }
};

/// Ordered agents; adjacency is list order. The link between agents i and
/// i+1 is broken only between the two inner boundary agents of one hole.
struct Swarm
{
  std::vector<Agent> agents;
  double spacing = 0.4;  ///< desired radial distance l, mm
  double step    = 0.4;  ///< step size h, mm (always equal to spacing)
  double weight  = 5.0;  ///< K
  int iteration  = 0;

  bool linked(std::size_t i) const;
  std::size_t interior_count() const;
};

/// Where an agent would like to be after the next step, plus the box around
/// it expressed in the agent's own frame.
///
/// Interior agents: x = point + z0 * axial + z1 * radial, axial = mu * s_hat.
/// Boundary agents: x ~= point + z0 * tangent (arc-length offset z0).
struct AgentTarget
{
  Vec2 point   = Vec2::Zero();
  Vec2 axial   = Vec2::UnitX();
  Vec2 radial  = Vec2::UnitY();
  std::optional<BoundaryCursor> cursor;
  Vec2 tangent = Vec2::UnitX();
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{0.0, 0.0};
  /// Interior only: the whole box lies outside the part.
  bool exits = false;
};

enum class EventKind { Spawn, Kill, InnerBoundaryAdd, InnerBoundaryRemove };

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view name);

struct SwarmEvent
{
  int iter = 0;
  EventKind kind = EventKind::Spawn;
  int agent_index = 0;
  Vec2 position   = Vec2::Zero();
};

/// One print line: the path of a single interior agent over its lifetime.
struct Trace
{
  int id = 0;
  Polyline points;
  std::vector<Vec2> directions;  ///< unit print direction per point
  std::vector<double> masses;    ///< virtual mass per point
  std::vector<int> successors;   ///< id of the neighbouring ("following") trace per point, -1 if none
  int born_iter = 0;
  int died_iter = 0;
};

struct GenerationInfo
{
  double spacing = 0.0;
  double weight  = 0.0;
  Segment seed_edge{Vec2::Zero(), Vec2::Zero()};
  int max_iterations = 0;
  int iterations     = 0;
  bool incomplete    = false;
};

struct TrajectorySet
{
  std::vector<Trace> traces;
  std::vector<SwarmEvent> events;
  GenerationInfo info;
};

/// Fills per-point print directions (normalized mean of incident chord
/// directions) for every trace.
void compute_directions(TrajectorySet & traj);

struct EngineConfig
{
  double spacing = 0.4;
  double weight  = 5.0;
  Segment seed_edge{Vec2::Zero(), Vec2::Zero()};
  int max_iterations = 1000;
  QpSettings qp{};
  /// kill candidate considered when the smallest radial gap < kill_gap * l
  double kill_gap = 0.75;
  /// spawn candidate considered when the largest radial gap > spawn_gap * l
  double spawn_gap = 1.5;
  /// interior agents whose ideal step makes a cosine below this with their
  /// local front direction are retired
  double retrograde_cos = 0.7;
};

/// Wall-clock seconds spent per phase of the generation loop.
struct PhaseTimes
{
  double sampling = 0.0;
  double assembly = 0.0;
  double solve    = 0.0;
  double geometry = 0.0;
  double total    = 0.0;
};

struct RunResult
{
  TrajectorySet trajectories;
  PhaseTimes times;
};

// Operations ----------------------------------------------------------------

/// Places floor(len / l) - 1 interior agents along `seed_edge` at spacing l,
/// with boundary agents at both endpoints. Agents are ordered along the outer
/// loop direction, and every prev_pos sits one step behind along the inward
/// normal. Throws SeedTooShort or ValidationError (edge not on the outer loop).
Swarm init_swarm(
  const PartSlice & slice, const StressField & field, const Segment & seed_edge, double spacing, double weight);

/// t = pos + mu * s_hat * h with mu = +1 iff s_hat . (pos - prev_pos) >= 0.
/// A zero-magnitude sample falls back to the previous heading; throws
/// StalledAgent when that is undefined too.
Vec2 ideal_step(const Agent & agent, const StressField & field, double step);

/// Cursor advanced by +h or -h along the agent's loop, whichever chord agrees
/// best with the previous displacement.
BoundaryCursor boundary_ideal_step(const Agent & agent, const PartSlice & slice, double step);

/// Ideal targets and feasibility boxes for every agent.
std::vector<AgentTarget> compute_targets(const Swarm & swarm, const PartSlice & slice, const StressField & field);
AgentTarget compute_target(const Agent & agent, const Swarm & swarm, const PartSlice & slice, const StressField & field);

/// Unit radial direction d_hat for the pair (i, i+1), frozen from the
/// displacements of the previous iteration.
Vec2 radial_direction(const Agent & left, const Agent & right, const Vec2 & left_target, const Vec2 & right_target);

struct AssembledQp
{
  BoxQp<double> qp;
  /// first decision variable of each agent
  std::vector<Eigen::Index> offsets;
};

/// P_a + K * P_e over the stacked frame offsets of all agents.
AssembledQp assemble_qp(const Swarm & swarm, const std::vector<AgentTarget> & targets);

/// Agent position implied by a solved offset vector.
Vec2 displaced_position(const Agent & agent, const AgentTarget & target, const PartSlice & slice,
                        const Eigen::Ref<const Eigen::VectorXd> & z, Eigen::Index offset,
                        std::optional<BoundaryCursor> * cursor_out = nullptr);

/// Moves every agent to its optimized location, shifts prev_pos, refreshes
/// masses and increments the iteration counter. Throws SolverFailure.
Swarm reposition(
  const Swarm & swarm, const std::vector<AgentTarget> & targets, const PartSlice & slice, const StressField & field,
  const QpSettings & settings = {});

/// Scenario chosen by spawn/kill selection.
struct Selection
{
  int choice = 0;  ///< -1 kill, 0 keep, +1 spawn
  Swarm swarm;
  std::vector<AgentTarget> targets;
  QpSolution<double> solution;
  /// optimized potential / agent count for q = -1, 0, +1 (NaN when not evaluated)
  std::array<double, 3> normalized{};
  int changed_index = -1;  ///< list index of the killed or spawned agent
  Vec2 changed_position = Vec2::Zero();
};

/// Evaluates the current swarm and, when gaps warrant it, one kill and one
/// spawn alternative; keeps the one with the lowest potential per agent.
Selection spawn_kill_select(
  const Swarm & swarm, const std::vector<AgentTarget> & targets, const PartSlice & slice, const StressField & field,
  const EngineConfig & config, PhaseTimes * times = nullptr);

/// Result of hole handling for one iteration.
struct HoleUpdate
{
  std::vector<SwarmEvent> events;
  std::vector<int> closed_traces;  ///< agents removed in favour of inner boundary agents
};

/// Hole lifecycle on the swarm in place. `hole_state` holds one entry per
/// hole: 0 untouched, 1 split by inner boundary agents, 2 passed.
HoleUpdate handle_holes(
  Swarm & swarm, std::vector<AgentTarget> & targets, const PartSlice & slice, const StressField & field,
  std::vector<int> & hole_state, int & next_uid, int & next_pair);

/// Full generation loop. An iteration cap yields a partial result flagged
/// `info.incomplete`.
RunResult run(const PartSlice & slice, const StressField & field, const EngineConfig & config);

/// Flags interior agents whose ideal step points back through the swarm
/// front: cos(step, front direction) < min_cos. The front direction is
/// perpendicular to the chord between the agent's linked neighbours.
std::vector<bool> retrograde_agents(const Swarm & swarm, const std::vector<AgentTarget> & targets, double min_cos);

/// Seed edge heuristic: among outer edges at least 2l long, the shortest; ties
/// go to the higher field magnitude at the edge midpoint, then the lower index.
Segment default_seed_edge(const PartSlice & slice, const StressField & field, double spacing);

}  // namespace swarmpath
