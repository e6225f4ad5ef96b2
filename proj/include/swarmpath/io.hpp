#pragma once

#include "swarmpath/analysis.hpp"
#include "swarmpath/geometry.hpp"
#include "swarmpath/stress_field.hpp"
#include "swarmpath/swarm.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>

namespace swarmpath {

// Parts ----------------------------------------------------------------------

/// Part file: `{"outer": [[x, y], ...], "holes": [[[x, y], ...], ...]}`, mm.
/// Throws ParseError for malformed files and ValidationError for bad loops.
PartSlice load_part(const std::filesystem::path & path);
PartSlice part_from_json(const nlohmann::json & j);
nlohmann::json part_to_json(const PartSlice & slice);
void save_part(const PartSlice & slice, const std::filesystem::path & path);

// Field sources ----------------------------------------------------------------

struct GridFileSource
{
  std::filesystem::path path;
};

struct KirschSource
{
  double far_stress  = 1.0;
  double hole_radius = 3.0;
  Vec2 hole_center   = Vec2::Zero();
};

struct UniformSource
{
  Vec2 vector = Vec2::UnitX();
};

using FieldSource = std::variant<GridFileSource, KirschSource, UniformSource>;

std::shared_ptr<StressField> make_field(const FieldSource & source);
nlohmann::json field_source_to_json(const FieldSource & source);
FieldSource field_source_from_json(const nlohmann::json & j);

// Run configuration ------------------------------------------------------------

enum class OutputFormat { Json, Svg, Gcode };

struct RunConfig
{
  std::filesystem::path part_path;
  FieldSource field_source = KirschSource{};
  double spacing = 0.4;
  double weight  = 5.0;
  std::optional<Segment> seed_edge;   ///< default_seed_edge when unset
  std::optional<int> max_iterations;  ///< 10 * part length / h when unset
  std::set<OutputFormat> formats{OutputFormat::Json, OutputFormat::Svg};
  std::filesystem::path output_dir = ".";

  /// Throws ValidationError unless l > 0, K > 0 and max_iterations >= 1.
  void validate() const;
};

/// Default iteration cap: 10 * (longest side of the part's bounding box) / h.
int default_max_iterations(const PartSlice & slice, double step);

/// Engine settings for `config` on `slice` with defaults resolved.
EngineConfig engine_config(const RunConfig & config, const PartSlice & slice, const StressField & field);

// Trajectory JSON ----------------------------------------------------------------

/// Provenance written alongside the traces.
struct TrajectoryFile
{
  TrajectorySet trajectories;
  nlohmann::json config;  ///< part, field source and engine settings
};

nlohmann::json trajectories_to_json(const TrajectorySet & traj, const nlohmann::json & config);
TrajectoryFile trajectories_from_json(const nlohmann::json & j);

/// Schema `{config, generation, traces: [...], events: [...]}`. Doubles are
/// written with round-trip precision, so import reproduces every bit.
void export_json(const TrajectorySet & traj, const nlohmann::json & config, const std::filesystem::path & path);
TrajectoryFile import_json(const std::filesystem::path & path);

// SVG ----------------------------------------------------------------------------

struct SvgOptions
{
  bool markers        = true;  ///< spawn circles and kill crosses
  double stroke_width = 0.2;   ///< mm
};

void write_svg(std::ostream & out, const TrajectorySet & traj, const PartSlice & slice, const SvgOptions & options = {});
void export_svg(const TrajectorySet & traj, const PartSlice & slice, const std::filesystem::path & path,
                const SvgOptions & options = {});

// G-code ---------------------------------------------------------------------------

struct GcodeParams
{
  double feed_rate         = 3150.0;  ///< mm/min, printing moves
  double travel_rate       = 6000.0;  ///< mm/min, travel moves
  double layer_height      = 0.2;     ///< mm
  double filament_diameter = 1.75;    ///< mm
  double extrusion_width   = 0.4;     ///< mm

  /// Throws ValidationError unless every field is > 0.
  void validate() const;
  /// Filament length fed per mm of printed line.
  double extrusion_per_mm() const;
};

void write_gcode(std::ostream & out, const TrajectorySet & traj, const GcodeParams & params);
void export_gcode(const TrajectorySet & traj, const GcodeParams & params, const std::filesystem::path & path);

// Reports ---------------------------------------------------------------------------

/// Quality metrics of one trajectory set. Timing is deliberately left out so a
/// report recomputed from a saved file matches the original exactly.
struct QualityReport
{
  std::optional<AlignmentReport> alignment;  ///< absent when no field is available
  std::optional<SpacingReport> spacing;      ///< absent for fewer than two traces
  std::size_t crossings = 0;
  CoverageReport coverage;
  double max_turn_deg = 0.0;
  std::size_t trace_count = 0;
  std::size_t point_count = 0;
};

QualityReport evaluate(const TrajectorySet & traj, const PartSlice & slice, const StressField * field, double spacing);
nlohmann::json report_to_json(const QualityReport & report, const TrajectorySet & traj);
void write_histogram_csv(std::ostream & out, const Histogram & histogram);
nlohmann::json benchmark_to_json(const BenchmarkReport & report);

/// Writes `j` pretty-printed with a trailing newline. Throws std::runtime_error
/// carrying the OS message on I/O failure.
void write_json_file(const nlohmann::json & j, const std::filesystem::path & path);
nlohmann::json read_json_file(const std::filesystem::path & path);

}  // namespace swarmpath
