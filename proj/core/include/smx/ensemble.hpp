#pragma once

// Monte-Carlo ensembles over independent noise paths, and the three study
// protocols built on them: energy/divergence statistics, mean-square
// convergence against a fine reference, and the oracle-only path sweep.
//
// Paths run in lockstep (all paths advance one step, then statistics are
// reduced in a fixed order), so results do not depend on the worker count.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smx/em_state.hpp"
#include "smx/integrators.hpp"
#include "smx/mesh_ops.hpp"
#include "smx/noise_field.hpp"
#include "smx/structure_diag.hpp"

namespace smx {

struct ExperimentConfig {
  SchemeId scheme = SchemeId::method3;
  GridSpec grid{100, 75, 1, 2.0 / 3.0, 0.5, 1.0};
  double dt = 0.001;
  double t_end = 1.0;
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  SpectralBasis noise;
  FieldMode mode = FieldMode::tm;
  std::uint64_t paths = 100;
  std::uint64_t seed = 20240611;
  double solver_tol = 1e-12;
  std::string out_dir = "smx_out";

  unsigned workers = 0;             ///< 0: one per hardware thread
  std::uint64_t snapshot_every = 0;  ///< path-0 snapshots every k steps (0: none)
  bool record_msymp = false;         ///< evolve a fixed tangent pair alongside
  std::vector<double> dt_list;       ///< mean-square study step sizes
  double dt_ref = 1.0 / 512.0;       ///< mean-square study reference step
  std::vector<std::uint64_t> p_list;  ///< path-sweep path counts

  /// round(t_end / dt); throws std::invalid_argument unless integral.
  std::uint64_t steps() const;
  CouplingVector coupling() const { return CouplingVector::for_mode(mode, lambda1, lambda2); }
  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

struct EnergyRow {
  std::uint64_t step = 0;
  double time = 0.0;
  double mean = 0.0;
  double var = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct DivergenceRow {
  std::uint64_t step = 0;
  double time = 0.0;
  double err_div_h = 0.0;
  double err_div_e = 0.0;
};

struct MsympRow {
  std::uint64_t step = 0;
  double max_residual = 0.0;  ///< relative
};

struct Snapshot {
  std::uint64_t step = 0;
  FieldState state;
};

struct EnsembleStats {
  SchemeId scheme = SchemeId::method3;
  std::uint64_t paths = 0;
  std::vector<EnergyRow> energy;
  std::vector<DivergenceRow> divergence;
  std::vector<MsympRow> msymp;
  std::vector<Snapshot> snapshots;

  LinearFit mean_fit;          ///< OLS of mean energy vs time
  double slope_se = 0.0;       ///< sd of per-path slopes / sqrt(P)
  double predicted_rate = 0.0;  ///< sum_c c^2 * Vbar (Theta volume for time_only)

  double max_energy_identity_residual = 0.0;  ///< relative, over all paths and steps
  double max_div_identity_residual = 0.0;     ///< max-norm, over all paths and steps
  double max_tm_residual = 0.0;
  std::vector<std::string> warnings;

  double predicted_energy(double t) const;
};

/// Rate of E[Phi] growth: sum_c c_c^2 * Vbar(Theta) (|Theta| in time_only mode).
double predicted_energy_rate(const ExperimentConfig& config);

/// Runs config.paths paths from the TM initial data. Throws PathError if a
/// step fails, naming the path and step.
EnsembleStats run_ensemble(const ExperimentConfig& config);

/// Relative 2-form conservation residual per step for a fixed pseudo-random
/// tangent pair evolved by step_tangent (steps 0..steps-1; from 1 for
/// Method-II, whose law spans three levels).
std::vector<MsympRow> msymp_check(const ExperimentConfig& config, std::uint64_t steps);

struct ConvergenceRow {
  double dt = 0.0;
  double ms_error = 0.0;
  double local_order = 0.0;  ///< vs the previous row; NaN for the first
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double order = 0.0;  ///< 0.5 * slope of log ms_error vs log dt
  /// max over paths and dt of |W_dt(t_end) - W_ref(t_end)| (summed increments)
  double max_noise_checksum_diff = 0.0;
  std::uint64_t paths = 0;
};

/// Every dt must be dt_ref * 2^k; all runs of a path share the fine noise.
ConvergenceTable msconv_study(const ExperimentConfig& config, std::span<const double> dt_list,
                              double dt_ref, std::uint64_t paths);

struct PathSweepRow {
  std::uint64_t paths = 0;
  double err_div = 0.0;
};

/// Err-Div of the first step from the closed-form oracle only, for each
/// path count (paths 0..P-1 of the stream, so the sets are nested).
std::vector<PathSweepRow> path_count_sweep(const ExperimentConfig& config,
                                           std::span<const std::uint64_t> p_list);

/// Calls fn(i) for i in [0, count) on up to `workers` threads (0: hardware
/// concurrency). Rethrows the exception of the lowest failing index.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace smx
