#pragma once

// Configuration text, run manifests, CSV/SVG writers and the subcommand
// dispatcher behind the `smx` tool.
//
// Configuration is flat `key = value` text; `#` starts a comment. Keys:
//   scheme nx ny nz lx ly lz dt t_end lambda1 lambda2 noise_mode trunc_m
//   trunc_l paths seed solver_tol mode out_dir workers snapshot_every
//   record_msymp dt_list dt_ref p_list
// dt_list and p_list take comma-separated values.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "smx/ensemble.hpp"
#include "smx/errors.hpp"

namespace smx {

/// Stable column layout of every CSV; bumped whenever a layout changes.
inline constexpr int kCsvSchemaVersion = 1;

const char* software_version();

/// Parses configuration text on top of the defaults. `seen` (optional)
/// receives the keys that were set explicitly. Throws ConfigError naming
/// the key and line for unknown keys, malformed values, duplicates and
/// violated invariants.
ExperimentConfig parse_config(std::string_view text, std::set<std::string>* seen = nullptr);
ExperimentConfig load_config(const std::filesystem::path& file,
                             std::set<std::string>* seen = nullptr);

/// Canonical text for `config`; parse_config(config_to_text(c)) == c.
std::string config_to_text(const ExperimentConfig& config);

struct RunManifest {
  std::string subcommand;
  ExperimentConfig config;
  std::string wall_clock_utc;
  double elapsed_seconds = 0.0;
  std::vector<std::string> files;

  /// Comment header plus the config echo; loadable with load_config.
  std::string to_text() const;
};

// CSV writers (full round-trip precision).
void write_energy_csv(std::ostream& out, const EnsembleStats& stats);
void write_divergence_csv(std::ostream& out, const EnsembleStats& stats);
void write_msymp_csv(std::ostream& out, const std::vector<MsympRow>& rows);
void write_msconv_csv(std::ostream& out, const ConvergenceTable& table);
void write_pathsweep_csv(std::ostream& out, const std::vector<PathSweepRow>& rows);
void write_noise_info_csv(std::ostream& out, const SpectralBasis& basis);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Self-contained SVG line chart. Non-positive values are dropped on log axes.
void write_svg_chart(std::ostream& out, const ChartSpec& spec, const std::vector<ChartSeries>& series);

struct CliOptions {
  std::string subcommand;
  std::optional<std::filesystem::path> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> paths;
  bool svg = false;
};

inline constexpr const char* kSubcommands[] = {"simulate",  "energy",     "divergence", "pathsweep",
                                               "msconv",    "symplectic", "noise-info"};

/// Runs one subcommand. Returns 0 on success; on failure prints a one-line
/// diagnostic to `err` and returns nonzero (2 for configuration problems,
/// 3 for a failed structure check, 1 otherwise).
int dispatch(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace smx
