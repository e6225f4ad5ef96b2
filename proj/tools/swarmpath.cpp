// Command-line front end: generate, baseline, metrics, bench, sweep, specimen.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error. Diagnostics go to
// standard error; results are written to files only.

#include "swarmpath/analysis.hpp"
#include "swarmpath/errors.hpp"
#include "swarmpath/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace swarmpath;
using nlohmann::json;

namespace {

constexpr int kUsageError   = 1;
constexpr int kRuntimeError = 2;

struct FieldOptions
{
  std::string grid;
  std::vector<double> kirsch;
  std::vector<double> uniform;
  CLI::Option * grid_opt    = nullptr;
  CLI::Option * kirsch_opt  = nullptr;
  CLI::Option * uniform_opt = nullptr;

  void add(CLI::App & app)
  {
    grid_opt = app.add_option("--field", grid, "principal stress CSV (x,y,sx,sy)")->check(CLI::ExistingFile);
    kirsch_opt = app.add_option("--kirsch", kirsch, "analytic open-hole field: far_stress,radius,cx,cy")
                   ->delimiter(',')
                   ->expected(4);
    uniform_opt = app.add_option("--uniform", uniform, "constant field: sx,sy")->delimiter(',')->expected(2);
    grid_opt->excludes(kirsch_opt)->excludes(uniform_opt);
    kirsch_opt->excludes(uniform_opt);
  }

  bool given() const { return grid_opt->count() + kirsch_opt->count() + uniform_opt->count() > 0; }

  FieldSource source() const
  {
    if (grid_opt->count() > 0) { return GridFileSource{fs::absolute(grid)}; }
    if (kirsch_opt->count() > 0) { return KirschSource{kirsch[0], kirsch[1], Vec2(kirsch[2], kirsch[3])}; }
    return UniformSource{Vec2(uniform[0], uniform[1])};
  }
};

struct GcodeOptions
{
  GcodeParams params;
  std::optional<double> width;

  void add(CLI::App & app)
  {
    app.add_option("--feed", params.feed_rate, "print feed rate, mm/min")->check(CLI::PositiveNumber);
    app.add_option("--layer-height", params.layer_height, "layer height, mm")->check(CLI::PositiveNumber);
    app.add_option("--filament", params.filament_diameter, "filament diameter, mm")->check(CLI::PositiveNumber);
    app.add_option("--line-width", width, "extrusion width, mm (default: spacing)")->check(CLI::PositiveNumber);
  }

  GcodeParams resolve(double spacing) const
  {
    GcodeParams p      = params;
    p.extrusion_width = width.value_or(spacing);
    return p;
  }
};

std::set<OutputFormat> parse_formats(const std::vector<std::string> & names)
{
  std::set<OutputFormat> out;
  for (const auto & n : names) {
    if (n == "json") {
      out.insert(OutputFormat::Json);
    } else if (n == "svg") {
      out.insert(OutputFormat::Svg);
    } else if (n == "gcode") {
      out.insert(OutputFormat::Gcode);
    } else {
      throw CLI::ValidationError("--formats", "unknown format \"" + n + "\" (json, svg, gcode)");
    }
  }
  return out;
}

struct Outputs
{
  fs::path dir;
  std::set<OutputFormat> formats;
  GcodeParams gcode;
  bool markers = true;
};

// Writes the requested trajectory files plus report.json and histogram.csv;
// returns the report.
json write_outputs(const TrajectorySet & traj, const json & config, const PartSlice & slice,
                   const StressField * field, double spacing, const Outputs & out)
{
  fs::create_directories(out.dir);
  if (out.formats.count(OutputFormat::Json) > 0) { export_json(traj, config, out.dir / "trajectories.json"); }
  if (out.formats.count(OutputFormat::Svg) > 0) {
    export_svg(traj, slice, out.dir / "trajectories.svg", SvgOptions{out.markers, 0.2 * spacing / 0.4});
  }
  if (out.formats.count(OutputFormat::Gcode) > 0) { export_gcode(traj, out.gcode, out.dir / "trajectories.gcode"); }

  const QualityReport quality = evaluate(traj, slice, field, spacing);
  const json report           = report_to_json(quality, traj);
  write_json_file(report, out.dir / "report.json");
  if (quality.spacing) {
    std::ofstream csv(out.dir / "histogram.csv", std::ios::binary);
    if (!csv) { throw std::runtime_error("cannot write " + (out.dir / "histogram.csv").string()); }
    write_histogram_csv(csv, quality.spacing->histogram);
  }
  return report;
}

json swarm_config_json(const PartSlice & slice, const FieldSource & source, const EngineConfig & ec)
{
  return {{"kind", "swarm"},
          {"part", part_to_json(slice)},
          {"field", field_source_to_json(source)},
          {"spacing", ec.spacing},
          {"k", ec.weight},
          {"seed_edge", json::array({json::array({ec.seed_edge.a.x(), ec.seed_edge.a.y()}),
                                     json::array({ec.seed_edge.b.x(), ec.seed_edge.b.y()})})},
          {"max_iterations", ec.max_iterations}};
}

std::string format_k(double k)
{
  std::ostringstream s;
  s << k;
  return s.str();
}

void log_summary(const std::string & label, const json & report)
{
  std::cerr << label << ": " << report["traces"] << " traces, beta_bar " << report["beta_bar"] << ", spacing variance "
            << (report["spacing"].is_null() ? json(nullptr) : report["spacing"]["variance"]) << ", crossings "
            << report["crossings"] << ", coverage " << report["coverage"]["fraction"] << "\n";
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"swarmpath: stress-aligned print trajectories from a particle swarm"};
  app.require_subcommand(1);

  // Shared run settings.
  std::string part_path;
  std::map<const CLI::App *, FieldOptions> field_by_cmd;
  double spacing = 0.4;
  double weight  = 5.0;
  std::vector<double> seed;
  int max_iter = 0;
  std::vector<std::string> format_names{"json", "svg"};
  std::string out_dir = ".";
  bool no_markers     = false;
  GcodeOptions gcode_opts;

  auto add_run_options = [&](CLI::App * cmd) {
    cmd->add_option("--part", part_path, "part JSON with outer and hole loops")->required()->check(CLI::ExistingFile);
    field_by_cmd[cmd].add(*cmd);
    cmd->add_option("--spacing", spacing, "line spacing l, mm")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out_dir, "output directory");
  };
  auto add_engine_options = [&](CLI::App * cmd) {
    cmd->add_option("--seed", seed, "seed edge x1,y1,x2,y2 on the outer loop")->delimiter(',')->expected(4);
    cmd->add_option("--max-iter", max_iter, "iteration cap (default 10 * length / l)")->check(CLI::PositiveNumber);
  };
  auto add_output_options = [&](CLI::App * cmd) {
    cmd->add_option("--formats", format_names, "subset of json,svg,gcode")->delimiter(',');
    cmd->add_flag("--no-markers", no_markers, "omit spawn/kill markers from the SVG");
    gcode_opts.add(*cmd);
  };

  CLI::App * generate = app.add_subcommand("generate", "run the swarm on a part");
  add_run_options(generate);
  generate->add_option("--k", weight, "environment weight K")->check(CLI::PositiveNumber);
  add_engine_options(generate);
  add_output_options(generate);

  std::vector<double> sweep_k;
  CLI::App * sweep = app.add_subcommand("sweep", "repeat generate over several K values");
  add_run_options(sweep);
  sweep->add_option("--k", sweep_k, "comma-separated K values")->required()->delimiter(',')->check(CLI::PositiveNumber);
  add_engine_options(sweep);
  add_output_options(sweep);

  std::string pattern = "aligned";
  double angle        = 45.0;
  CLI::App * baseline = app.add_subcommand("baseline", "slicer-style parallel infill for comparison");
  add_run_options(baseline);
  baseline->add_option("--pattern", pattern, "aligned | crosshatch")->check(CLI::IsMember({"aligned", "crosshatch"}));
  baseline->add_option("--angle", angle, "cross-hatch angle, degrees");
  add_output_options(baseline);

  std::string input;
  CLI::App * metrics = app.add_subcommand("metrics", "recompute the report of a saved trajectories.json");
  metrics->add_option("--input", input, "trajectories.json")->required()->check(CLI::ExistingFile);
  metrics->add_option("--out", out_dir, "output directory (default: next to the input)");

  int reps = 5;
  CLI::App * bench = app.add_subcommand("bench", "time the generation loop");
  add_run_options(bench);
  bench->add_option("--k", weight, "environment weight K")->check(CLI::PositiveNumber);
  add_engine_options(bench);
  bench->add_option("--reps", reps, "repetitions (>= 3)")->check(CLI::Range(3, 1000));

  double spec_length = 150.0, spec_width = 36.0, spec_hole = 6.0;
  std::string spec_out = "specimen.json";
  CLI::App * specimen  = app.add_subcommand("specimen", "write the open-hole tensile specimen as a part file");
  specimen->add_option("--length", spec_length, "mm")->check(CLI::PositiveNumber);
  specimen->add_option("--width", spec_width, "mm")->check(CLI::PositiveNumber);
  specimen->add_option("--hole-diameter", spec_hole, "mm")->check(CLI::PositiveNumber);
  specimen->add_option("--out", spec_out, "output part file");

  std::set<OutputFormat> formats;
  FieldOptions * active_field = nullptr;
  try {
    app.parse(argc, argv);
    for (auto & [cmd, opts] : field_by_cmd) {
      if (cmd->parsed()) { active_field = &opts; }
    }
    formats = parse_formats(format_names);
    const bool needs_field = generate->parsed() || sweep->parsed() || bench->parsed();
    if (needs_field && (active_field == nullptr || !active_field->given())) {
      throw CLI::RequiredError("a field source: --field, --kirsch or --uniform");
    }
  } catch (const CLI::ParseError & e) {
    if (e.get_exit_code() == 0) { return app.exit(e, std::cout, std::cerr); }
    app.exit(e, std::cerr, std::cerr);
    std::cerr << "\n" << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kUsageError;
  }

  try {
    if (specimen->parsed()) {
      save_part(make_open_hole_specimen(spec_length, spec_width, spec_hole), spec_out);
      std::cerr << "wrote " << spec_out << "\n";
      return 0;
    }

    if (metrics->parsed()) {
      const TrajectoryFile file = import_json(input);
      const json & cfg          = file.config;
      const PartSlice slice     = part_from_json(cfg.at("part"));
      std::shared_ptr<StressField> field;
      if (cfg.contains("field") && !cfg.at("field").is_null()) { field = make_field(field_source_from_json(cfg.at("field"))); }
      const double l = cfg.at("spacing").get<double>();
      const fs::path dir = metrics->get_option("--out")->count() > 0 ? fs::path(out_dir) : fs::path(input).parent_path();
      Outputs out{dir.empty() ? fs::path(".") : dir, {}, GcodeParams{}, true};
      log_summary("metrics", write_outputs(file.trajectories, cfg, slice, field.get(), l, out));
      return 0;
    }

    const PartSlice slice = load_part(part_path);
    const Outputs outputs{out_dir, formats, gcode_opts.resolve(spacing), !no_markers};

    if (baseline->parsed()) {
      BaselineKind kind;
      kind.pattern   = pattern == "crosshatch" ? BaselineKind::Pattern::CrossHatch : BaselineKind::Pattern::AlignedRectilinear;
      kind.angle_deg = angle;
      kind.spacing   = spacing;
      const TrajectorySet traj = generate_baseline(slice, kind);
      std::shared_ptr<StressField> field;
      json config = {{"kind", "baseline"}, {"pattern", pattern}, {"angle", angle}, {"part", part_to_json(slice)},
                     {"field", nullptr}, {"spacing", spacing}};
      if (active_field != nullptr && active_field->given()) {
        field           = make_field(active_field->source());
        config["field"] = field_source_to_json(active_field->source());
      }
      log_summary("baseline " + pattern, write_outputs(traj, config, slice, field.get(), spacing, outputs));
      return 0;
    }

    RunConfig rc;
    rc.part_path    = part_path;
    rc.field_source = active_field->source();
    rc.spacing      = spacing;
    rc.weight       = weight;
    if (!seed.empty()) { rc.seed_edge = Segment{Vec2(seed[0], seed[1]), Vec2(seed[2], seed[3])}; }
    if (max_iter > 0) { rc.max_iterations = max_iter; }
    rc.formats    = formats;
    rc.output_dir = out_dir;
    const auto field = make_field(rc.field_source);

    if (bench->parsed()) {
      const EngineConfig ec        = engine_config(rc, slice, *field);
      const BenchmarkReport report = benchmark(slice, *field, ec, reps);
      fs::create_directories(out_dir);
      write_json_file(benchmark_to_json(report), fs::path(out_dir) / "bench.json");
      std::cerr << "bench: median " << report.median * 1e3 << " ms over " << reps << " runs, QP solve "
                << 100.0 * report.solve_fraction << "% of total\n";
      return 0;
    }

    auto generate_one = [&](double k, const fs::path & dir) {
      RunConfig local = rc;
      local.weight    = k;
      const EngineConfig ec = engine_config(local, slice, *field);
      const RunResult result = run(slice, *field, ec);
      if (result.trajectories.info.incomplete) {
        std::cerr << "warning: iteration cap " << ec.max_iterations << " reached; result is incomplete\n";
      }
      Outputs out = outputs;
      out.dir     = dir;
      return write_outputs(result.trajectories, swarm_config_json(slice, rc.field_source, ec), slice, field.get(),
                           ec.spacing, out);
    };

    if (generate->parsed()) {
      log_summary("generate", generate_one(weight, out_dir));
      return 0;
    }

    if (sweep->parsed()) {
      json runs = json::array();
      for (double k : sweep_k) {
        const fs::path dir = fs::path(out_dir) / ("k_" + format_k(k));
        const json report  = generate_one(k, dir);
        log_summary("K = " + format_k(k), report);
        runs.push_back({{"k", k},
                        {"directory", dir.filename().string()},
                        {"beta_bar", report["beta_bar"]},
                        {"variance", report["spacing"].is_null() ? json(nullptr) : report["spacing"]["variance"]},
                        {"crossings", report["crossings"]},
                        {"coverage", report["coverage"]["fraction"]},
                        {"traces", report["traces"]},
                        {"events", report["events"]}});
      }
      write_json_file({{"runs", runs}}, fs::path(out_dir) / "combined_report.json");
      return 0;
    }
  } catch (const Error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
