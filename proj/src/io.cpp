#include "swarmpath/io.hpp"

#include "swarmpath/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace swarmpath {

using nlohmann::json;

namespace {

json point_json(const Vec2 & p) { return json::array({p.x(), p.y()}); }

Vec2 point_from(const json & j, const std::string & where, const std::string & what)
{
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(where, what + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Polyline polyline_from(const json & j, const std::string & where, const std::string & what)
{
  if (!j.is_array()) { throw ParseError(where, what + ": expected an array of points"); }
  Polyline out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) { out.push_back(point_from(j[i], where, what + "[" + std::to_string(i) + "]")); }
  return out;
}

json polyline_json(const Polyline & pts)
{
  json arr = json::array();
  for (const auto & p : pts) { arr.push_back(point_json(p)); }
  return arr;
}

std::ofstream open_out(const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw std::runtime_error("cannot open " + path.string() + " for writing: " + std::strerror(errno)); }
  return out;
}

void finish(std::ofstream & out, const std::filesystem::path & path)
{
  out.flush();
  if (!out) { throw std::runtime_error("write to " + path.string() + " failed: " + std::strerror(errno)); }
}

// printf-style formatting for the text exporters.
template<typename... Args>
std::string fmt(const char * pattern, Args... args)
{
  char buf[256];
  const int n = std::snprintf(buf, sizeof buf, pattern, args...);
  return std::string(buf, static_cast<std::size_t>(std::max(0, std::min<int>(n, sizeof buf - 1))));
}

}  // namespace

// Parts ------------------------------------------------------------------------

PartSlice part_from_json(const json & j)
{
  const std::string where = "toolpath_io::load_part";
  if (!j.is_object() || !j.contains("outer")) { throw ParseError(where, "missing \"outer\" loop"); }
  Polyline outer = polyline_from(j.at("outer"), where, "outer");
  std::vector<Polyline> holes;
  if (j.contains("holes")) {
    const json & hs = j.at("holes");
    if (!hs.is_array()) { throw ParseError(where, "\"holes\" must be an array of loops"); }
    for (std::size_t h = 0; h < hs.size(); ++h) { holes.push_back(polyline_from(hs[h], where, "holes[" + std::to_string(h) + "]")); }
  }
  return PartSlice::from_loops(std::move(outer), std::move(holes));
}

json part_to_json(const PartSlice & slice)
{
  json holes = json::array();
  for (std::size_t h = 0; h < slice.hole_count(); ++h) { holes.push_back(polyline_json(slice.loop(h + 1))); }
  return {{"outer", polyline_json(slice.outer())}, {"holes", holes}};
}

PartSlice load_part(const std::filesystem::path & path) { return part_from_json(read_json_file(path)); }

void save_part(const PartSlice & slice, const std::filesystem::path & path) { write_json_file(part_to_json(slice), path); }

// Field sources ------------------------------------------------------------------

std::shared_ptr<StressField> make_field(const FieldSource & source)
{
  return std::visit(
    [](const auto & s) -> std::shared_ptr<StressField> {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, GridFileSource>) {
        return std::make_shared<GridField>(load_grid_field(s.path));
      } else if constexpr (std::is_same_v<T, KirschSource>) {
        return std::make_shared<KirschField>(s.far_stress, s.hole_radius, s.hole_center);
      } else {
        return std::make_shared<UniformField>(s.vector);
      }
    },
    source);
}

json field_source_to_json(const FieldSource & source)
{
  return std::visit(
    [](const auto & s) -> json {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, GridFileSource>) {
        return {{"type", "grid"}, {"path", s.path.string()}};
      } else if constexpr (std::is_same_v<T, KirschSource>) {
        return {{"type", "kirsch"}, {"far_stress", s.far_stress}, {"hole_radius", s.hole_radius},
                {"hole_center", point_json(s.hole_center)}};
      } else {
        return {{"type", "uniform"}, {"vector", point_json(s.vector)}};
      }
    },
    source);
}

FieldSource field_source_from_json(const json & j)
{
  const std::string where = "toolpath_io::field_source";
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "grid") { return GridFileSource{j.at("path").get<std::string>()}; }
    if (type == "kirsch") {
      return KirschSource{j.at("far_stress").get<double>(), j.at("hole_radius").get<double>(),
                          point_from(j.at("hole_center"), where, "hole_center")};
    }
    if (type == "uniform") { return UniformSource{point_from(j.at("vector"), where, "vector")}; }
    throw ParseError(where, "unknown field type \"" + type + "\"");
  } catch (const json::exception & e) {
    throw ParseError(where, e.what());
  }
}

// Run configuration ----------------------------------------------------------------

void RunConfig::validate() const
{
  const std::string where = "toolpath_io::run_config";
  if (!(spacing > 0.0)) { throw ValidationError(where, "spacing must be > 0"); }
  if (!(weight > 0.0)) { throw ValidationError(where, "K must be > 0"); }
  if (max_iterations && *max_iterations < 1) { throw ValidationError(where, "max_iterations must be >= 1"); }
}

int default_max_iterations(const PartSlice & slice, double step)
{
  const double length = slice.bounds().sizes().maxCoeff();
  return std::max(1, static_cast<int>(std::ceil(10.0 * length / step)));
}

EngineConfig engine_config(const RunConfig & config, const PartSlice & slice, const StressField & field)
{
  config.validate();
  EngineConfig ec;
  ec.spacing        = config.spacing;
  ec.weight         = config.weight;
  ec.seed_edge      = config.seed_edge ? *config.seed_edge : default_seed_edge(slice, field, config.spacing);
  ec.max_iterations = config.max_iterations ? *config.max_iterations : default_max_iterations(slice, config.spacing);
  return ec;
}

// Trajectory JSON ---------------------------------------------------------------------

json trajectories_to_json(const TrajectorySet & traj, const json & config)
{
  const GenerationInfo & info = traj.info;
  json generation = {
    {"spacing", info.spacing},
    {"weight", info.weight},
    {"seed_edge", json::array({point_json(info.seed_edge.a), point_json(info.seed_edge.b)})},
    {"max_iterations", info.max_iterations},
    {"iterations", info.iterations},
    {"incomplete", info.incomplete}};

  json traces = json::array();
  for (const auto & t : traj.traces) {
    traces.push_back({{"id", t.id},
                      {"points", polyline_json(t.points)},
                      {"born_iter", t.born_iter},
                      {"died_iter", t.died_iter},
                      {"masses", t.masses},
                      {"successors", t.successors}});
  }
  json events = json::array();
  for (const auto & e : traj.events) {
    events.push_back({{"iter", e.iter},
                      {"event", std::string(to_string(e.kind))},
                      {"agent_index", e.agent_index},
                      {"position", point_json(e.position)}});
  }
  return {{"config", config}, {"generation", generation}, {"traces", traces}, {"events", events}};
}

TrajectoryFile trajectories_from_json(const json & j)
{
  const std::string where = "toolpath_io::import_json";
  TrajectoryFile file;
  try {
    file.config = j.value("config", json::object());
    TrajectorySet & traj = file.trajectories;
    if (j.contains("generation")) {
      const json & g  = j.at("generation");
      GenerationInfo & info = traj.info;
      info.spacing        = g.at("spacing").get<double>();
      info.weight         = g.at("weight").get<double>();
      info.seed_edge      = {point_from(g.at("seed_edge").at(0), where, "seed_edge"),
                             point_from(g.at("seed_edge").at(1), where, "seed_edge")};
      info.max_iterations = g.at("max_iterations").get<int>();
      info.iterations     = g.at("iterations").get<int>();
      info.incomplete     = g.at("incomplete").get<bool>();
    }
    for (const json & jt : j.at("traces")) {
      Trace t;
      t.id        = jt.at("id").get<int>();
      t.points    = polyline_from(jt.at("points"), where, "trace " + std::to_string(t.id));
      t.born_iter = jt.at("born_iter").get<int>();
      t.died_iter = jt.at("died_iter").get<int>();
      t.masses     = jt.value("masses", std::vector<double>(t.points.size(), 1.0));
      t.successors = jt.value("successors", std::vector<int>(t.points.size(), -1));
      if (t.masses.size() != t.points.size() || t.successors.size() != t.points.size()) {
        throw ParseError(where, "trace " + std::to_string(t.id) + ": per-point arrays differ in length");
      }
      traj.traces.push_back(std::move(t));
    }
    for (const json & je : j.value("events", json::array())) {
      const std::string name = je.at("event").get<std::string>();
      const auto kind        = event_kind_from_string(name);
      if (!kind) { throw ParseError(where, "unknown event \"" + name + "\""); }
      traj.events.push_back(
        {je.at("iter").get<int>(), *kind, je.at("agent_index").get<int>(), point_from(je.at("position"), where, "event position")});
    }
  } catch (const json::exception & e) {
    throw ParseError(where, e.what());
  }
  compute_directions(file.trajectories);
  return file;
}

void export_json(const TrajectorySet & traj, const json & config, const std::filesystem::path & path)
{
  write_json_file(trajectories_to_json(traj, config), path);
}

TrajectoryFile import_json(const std::filesystem::path & path) { return trajectories_from_json(read_json_file(path)); }

// SVG -------------------------------------------------------------------------------------

void write_svg(std::ostream & out, const TrajectorySet & traj, const PartSlice & slice, const SvgOptions & options)
{
  const Box2 & box    = slice.bounds();
  const double margin = 0.05 * box.sizes().maxCoeff();
  const double x0     = box.min().x() - margin;
  const double y0     = -(box.max().y() + margin);  // y axis points down in SVG
  const double w      = box.sizes().x() + 2.0 * margin;
  const double h      = box.sizes().y() + 2.0 * margin;
  auto xy = [](const Vec2 & p) { return fmt("%.4f,%.4f", p.x(), -p.y()); };
  auto loop_path = [&](const Polyline & pts) {
    std::string d;
    for (std::size_t i = 0; i < pts.size(); ++i) { d += (i == 0 ? "M" : " L") + xy(pts[i]); }
    return d + " Z";
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.4fmm\" height=\"%.4fmm\" viewBox=\"%.4f %.4f %.4f %.4f\">\n",
             w, h, x0, y0, w, h);
  out << fmt("<g fill=\"none\" stroke-linejoin=\"round\" stroke-linecap=\"round\" stroke-width=\"%.4f\">\n",
             options.stroke_width);
  out << "<path class=\"outer\" stroke=\"black\" d=\"" << loop_path(slice.outer()) << "\"/>\n";
  for (std::size_t hole = 0; hole < slice.hole_count(); ++hole) {
    out << "<path class=\"hole\" stroke=\"black\" d=\"" << loop_path(slice.loop(hole + 1)) << "\"/>\n";
  }
  for (const auto & t : traj.traces) {
    out << "<polyline class=\"trace\" stroke=\"#1f5fbf\" points=\"";
    for (std::size_t i = 0; i < t.points.size(); ++i) { out << (i == 0 ? "" : " ") << xy(t.points[i]); }
    out << "\"/>\n";
  }
  if (options.markers) {
    const double r = 2.0 * options.stroke_width;
    for (const auto & e : traj.events) {
      const Vec2 & p = e.position;
      if (e.kind == EventKind::Spawn) {
        out << fmt("<circle class=\"spawn\" stroke=\"green\" cx=\"%.4f\" cy=\"%.4f\" r=\"%.4f\"/>\n", p.x(), -p.y(), r);
      } else if (e.kind == EventKind::Kill) {
        out << "<path class=\"kill\" stroke=\"red\" d=\"M" << xy(p + Vec2(-r, -r)) << " L" << xy(p + Vec2(r, r)) << " M"
            << xy(p + Vec2(-r, r)) << " L" << xy(p + Vec2(r, -r)) << "\"/>\n";
      }
    }
  }
  out << "</g>\n</svg>\n";
}

void export_svg(const TrajectorySet & traj, const PartSlice & slice, const std::filesystem::path & path,
                const SvgOptions & options)
{
  auto out = open_out(path);
  write_svg(out, traj, slice, options);
  finish(out, path);
}

// G-code ---------------------------------------------------------------------------------

void GcodeParams::validate() const
{
  if (!(feed_rate > 0.0 && travel_rate > 0.0 && layer_height > 0.0 && filament_diameter > 0.0
        && extrusion_width > 0.0)) {
    throw ValidationError("toolpath_io::export_gcode", "G-code parameters must all be > 0");
  }
}

double GcodeParams::extrusion_per_mm() const
{
  const double radius = 0.5 * filament_diameter;
  return extrusion_width * layer_height / (std::numbers::pi * radius * radius);
}

void write_gcode(std::ostream & out, const TrajectorySet & traj, const GcodeParams & params)
{
  params.validate();
  const double per_mm = params.extrusion_per_mm();
  out << "; swarmpath toolpath, single layer\n";
  out << "; traces: " << traj.traces.size() << "\n";
  out << fmt("; line width %.4f mm, layer height %.4f mm, filament %.4f mm\n", params.extrusion_width,
             params.layer_height, params.filament_diameter);
  out << "; heating, homing and priming are left to the printer's start script\n";
  out << "G21 ; millimetres\n";
  out << "G90 ; absolute coordinates\n";
  out << "M83 ; relative extrusion\n";
  for (const auto & t : traj.traces) {
    if (t.points.empty()) { continue; }
    out << fmt("G0 F%.0f X%.6f Y%.6f\n", params.travel_rate, t.points.front().x(), t.points.front().y());
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      const double e = (t.points[i] - t.points[i - 1]).norm() * per_mm;
      if (i == 1) {
        out << fmt("G1 F%.0f X%.6f Y%.6f E%.12f\n", params.feed_rate, t.points[i].x(), t.points[i].y(), e);
      } else {
        out << fmt("G1 X%.6f Y%.6f E%.12f\n", t.points[i].x(), t.points[i].y(), e);
      }
    }
  }
  out << "; end of toolpath\n";
}

void export_gcode(const TrajectorySet & traj, const GcodeParams & params, const std::filesystem::path & path)
{
  params.validate();
  auto out = open_out(path);
  write_gcode(out, traj, params);
  finish(out, path);
}

// Reports ---------------------------------------------------------------------------------

QualityReport evaluate(const TrajectorySet & traj, const PartSlice & slice, const StressField * field, double spacing)
{
  QualityReport r;
  r.trace_count = traj.traces.size();
  for (const auto & t : traj.traces) { r.point_count += t.points.size(); }
  if (field != nullptr && r.point_count > 0) { r.alignment = alignment_beta(traj, *field); }
  if (traj.traces.size() >= 2) {
    try {
      r.spacing = spacing_report(traj, spacing);
    } catch (const SingleTrace &) {
      r.spacing.reset();
    }
  }
  r.crossings    = crossing_count(traj);
  r.coverage     = coverage(traj, slice, 1.5 * spacing);
  r.max_turn_deg = max_turn_angle_deg(traj);
  return r;
}

json report_to_json(const QualityReport & report, const TrajectorySet & traj)
{
  json j;
  j["traces"]       = report.trace_count;
  j["points"]       = report.point_count;
  j["beta_bar"]     = report.alignment ? json(report.alignment->beta_bar) : json(nullptr);
  if (report.spacing) {
    const SpacingReport & s = *report.spacing;
    j["spacing"] = {{"variance", s.variance},
                    {"mean", s.mean},
                    {"count", s.normalized_distances.size()},
                    {"histogram", {{"lower", s.histogram.lower}, {"width", s.histogram.width}, {"counts", s.histogram.counts}}}};
  } else {
    j["spacing"] = nullptr;
  }
  j["crossings"] = report.crossings;
  j["coverage"]  = {{"fraction", report.coverage.fraction},
                    {"samples", report.coverage.samples},
                    {"covered", report.coverage.covered}};
  j["max_turn_deg"] = report.max_turn_deg;
  json counts       = json::object();
  for (auto k : {EventKind::Spawn, EventKind::Kill, EventKind::InnerBoundaryAdd, EventKind::InnerBoundaryRemove}) {
    counts[std::string(to_string(k))] = 0;
  }
  for (const auto & e : traj.events) { counts[std::string(to_string(e.kind))] = counts[std::string(to_string(e.kind))].get<int>() + 1; }
  j["events"]     = counts;
  j["iterations"] = traj.info.iterations;
  j["incomplete"] = traj.info.incomplete;
  return j;
}

void write_histogram_csv(std::ostream & out, const Histogram & histogram)
{
  out << "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    const double left = histogram.lower + static_cast<double>(i) * histogram.width;
    out << fmt("%.4f,%.4f,", left, left + histogram.width) << histogram.counts[i] << "\n";
  }
}

json benchmark_to_json(const BenchmarkReport & report)
{
  return {{"samples_s", report.samples},
          {"median_s", report.median},
          {"min_s", report.min},
          {"max_s", report.max},
          {"phases_median_s",
           {{"sampling", report.phases.sampling},
            {"assembly", report.phases.assembly},
            {"solve", report.phases.solve},
            {"geometry", report.phases.geometry},
            {"total", report.phases.total}}},
          {"solve_fraction", report.solve_fraction}};
}

void write_json_file(const json & j, const std::filesystem::path & path)
{
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  finish(out, path);
}

json read_json_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno)); }
  try {
    return json::parse(in);
  } catch (const json::parse_error & e) {
    throw ParseError("toolpath_io::read_json", path.string() + ": " + e.what());
  }
}

}  // namespace swarmpath
