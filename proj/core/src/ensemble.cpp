#include "smx/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "smx/errors.hpp"

namespace smx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> v) {
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Node-wise mean of per-path lattices, pairwise over paths.
Lattice mean_lattice(const GridSpec& grid, const std::vector<Lattice>& slots) {
  Lattice mean(grid);
  std::vector<double> col(slots.size());
  const double inv = 1.0 / static_cast<double>(slots.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    for (std::size_t p = 0; p < slots.size(); ++p) col[p] = slots[p][k];
    mean[k] = pairwise_sum(col) * inv;
  }
  return mean;
}

double relative_gap(double actual, double predicted, double scale) {
  const double s = std::max({std::abs(scale), std::abs(predicted), 1e-300});
  return std::abs(actual - predicted) / s;
}

// Deterministic tangent vector with entries uniform in (-1/2, 1/2).
FieldState tangent_seed(const GridSpec& grid, std::uint64_t seed, std::uint32_t which) {
  FieldState u(grid);
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (std::uint32_t c = 0; c < 6; ++c) {
    for (std::size_t n = 0; n < u.z[c].size(); ++n) {
      const auto r = Philox4x32::generate(
          {static_cast<std::uint32_t>(n), c, which, 0xA5A5A5A5u}, key);
      u.z[c][n] = uniform_open01(r[0], r[1]) - 0.5;
    }
  }
  return u;
}

std::string step_context(std::uint64_t path, std::uint64_t step, const std::exception& e) {
  std::ostringstream os;
  os << "path " << path << ", step " << step << ": " << e.what();
  return os.str();
}

struct PathSlot {
  FieldState prev;  // Method-II only
  FieldState curr;
  Lattice div_h;
  Lattice div_e;
  Lattice dW_prev;  // Method-II only
  std::vector<double> energy;
  double max_energy_gap = 0.0;
  double max_div_gap = 0.0;
  double max_tm = 0.0;
};

}  // namespace

std::uint64_t ExperimentConfig::steps() const {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("dt and t_end must be > 0");
  const double r = t_end / dt;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, n)) {
    std::ostringstream os;
    os << "t_end/dt must be a positive integer (t_end=" << t_end << ", dt=" << dt << ")";
    throw std::invalid_argument(os.str());
  }
  return static_cast<std::uint64_t>(n);
}

void ExperimentConfig::validate() const {
  (void)GridSpec::make(grid.nx, grid.ny, grid.nz, grid.lx, grid.ly, grid.lz);
  (void)SpectralBasis::make(noise.lx, noise.ly, noise.trunc_m, noise.trunc_l, noise.mode);
  (void)steps();
  if (paths < 1) throw std::invalid_argument("paths must satisfy P >= 1");
  if (!(solver_tol > 0.0)) throw std::invalid_argument("solver_tol must be > 0");
  if (!std::isfinite(lambda1) || !std::isfinite(lambda2)) {
    throw std::invalid_argument("lambda1 and lambda2 must be finite");
  }
  if (!(dt_ref > 0.0)) throw std::invalid_argument("dt_ref must be > 0");
}

double EnsembleStats::predicted_energy(double t) const {
  if (energy.empty()) return kNaN;
  return energy.front().mean + predicted_rate * (t - energy.front().time);
}

double predicted_energy_rate(const ExperimentConfig& config) {
  const double c2 = config.coupling().norm2();
  if (config.noise.mode == NoiseMode::time_only) return c2 * config.grid.volume();
  return c2 * discrete_trace(config.noise, config.grid).vbar;
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr err;
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------

EnsembleStats run_ensemble(const ExperimentConfig& config) {
  config.validate();
  const std::uint64_t n_steps = config.steps();
  const GridSpec& grid = config.grid;
  const CouplingVector coupling = config.coupling();
  const SchemeId scheme = config.scheme;
  const bool leapfrog = scheme == SchemeId::method2;

  const StepperPlan main_plan = plan(scheme, grid, config.dt, coupling, config.solver_tol);
  std::optional<StepperPlan> boot_plan;
  if (leapfrog) boot_plan = plan(SchemeId::method3, grid, config.dt, coupling, config.solver_tol);
  const IncrementSampler sampler(NoiseStream(config.seed, config.noise), grid);

  EnsembleStats stats;
  stats.scheme = scheme;
  stats.paths = config.paths;
  stats.warnings = main_plan.warnings;
  for (const std::string& w : initial_condition_warnings(grid)) stats.warnings.push_back(w);
  stats.predicted_rate = predicted_energy_rate(config);

  const std::size_t P = static_cast<std::size_t>(config.paths);
  const FieldState initial = initial_condition_tm(grid);
  std::vector<PathSlot> slots(P);
  std::vector<Lattice> change_h(P), change_e(P);
  const bool tm = config.mode == FieldMode::tm;

  // Energy rows start at step 0 for the one-step schemes and at step 1 for
  // the leapfrog (its energy pairs two layers).
  const std::uint64_t first_energy_step = leapfrog ? 1 : 0;

  auto record_energy = [&](PathSlot& s, double phi) { s.energy.push_back(phi); };

  // --- step 0 ---------------------------------------------------------------
  parallel_for(P, config.workers, [&](std::size_t p) {
    PathSlot& s = slots[p];
    try {
      if (leapfrog) {
        const IncrementField dW0 = sampler.sample_increment(p, 0, config.dt);
        TwoLayerState two = bootstrap_method2(*boot_plan, initial, dW0);
        s.prev = std::move(two.prev);
        s.curr = std::move(two.curr);
        s.dW_prev = dW0.values;
        record_energy(s, energy_method2(s.prev, s.curr));
        const FieldState half = half_level(s.prev, s.curr);
        s.div_h = divergence(scheme, half, FieldSelector::h);
        s.div_e = divergence(scheme, half, FieldSelector::e);
        if (tm) s.max_tm = tm_residual(s.curr);
      } else {
        s.curr = initial;
        record_energy(s, energy(scheme, s.curr));
        s.div_h = divergence(scheme, s.curr, FieldSelector::h);
        s.div_e = divergence(scheme, s.curr, FieldSelector::e);
      }
    } catch (const std::exception& e) {
      throw PathError(step_context(p, 0, e), p, 0);
    }
  });

  if (config.snapshot_every > 0) {
    stats.snapshots.push_back({0, leapfrog ? slots[0].prev : slots[0].curr});
    if (leapfrog && config.snapshot_every == 1) stats.snapshots.push_back({1, slots[0].curr});
  }

  // --- steps n -> n+1 ---------------------------------------------------------
  const std::uint64_t first_step = leapfrog ? 1 : 0;
  for (std::uint64_t n = first_step; n < n_steps; ++n) {
    parallel_for(P, config.workers, [&](std::size_t p) {
      PathSlot& s = slots[p];
      try {
        const IncrementField dW = sampler.sample_increment(p, n, config.dt);
        if (leapfrog) {
          const Lattice w_diff = s.dW_prev + dW.values;
          FieldState next = leapfrog_update(grid, coupling, config.dt, s.prev, s.curr, &w_diff);
          const double phi_old = s.energy.back();
          const double phi_new = energy_method2(s.curr, next);
          const double predicted = energy_increment_method2(coupling, s.curr, w_diff);
          s.max_energy_gap = std::max(
              s.max_energy_gap, relative_gap(phi_new - phi_old, predicted,
                                             std::max(std::abs(phi_new), std::abs(phi_old))));
          record_energy(s, phi_new);
          const FieldState half = half_level(s.curr, next);
          Lattice dh = divergence(scheme, half, FieldSelector::h);
          Lattice de = divergence(scheme, half, FieldSelector::e);
          change_h[p] = dh - s.div_h;
          change_e[p] = de - s.div_e;
          const Lattice oracle =
              div_residual_oracle(scheme, grid, coupling, FieldSelector::h, dW.values, &s.dW_prev);
          s.max_div_gap = std::max(s.max_div_gap, (change_h[p] - oracle).max_abs());
          s.div_h = std::move(dh);
          s.div_e = std::move(de);
          s.prev = std::move(s.curr);
          s.curr = std::move(next);
          s.dW_prev = dW.values;
        } else {
          FieldState next = step_one_layer(main_plan, s.curr, dW);
          const double phi_old = s.energy.back();
          const double phi_new = energy(scheme, next);
          const double predicted = energy_increment(scheme, coupling, s.curr, next, dW.values);
          s.max_energy_gap = std::max(
              s.max_energy_gap, relative_gap(phi_new - phi_old, predicted,
                                             std::max(std::abs(phi_new), std::abs(phi_old))));
          record_energy(s, phi_new);
          Lattice dh = divergence(scheme, next, FieldSelector::h);
          Lattice de = divergence(scheme, next, FieldSelector::e);
          change_h[p] = dh - s.div_h;
          change_e[p] = de - s.div_e;
          const Lattice oracle =
              div_residual_oracle(scheme, grid, coupling, FieldSelector::h, dW.values);
          s.max_div_gap = std::max(s.max_div_gap, (change_h[p] - oracle).max_abs());
          s.div_h = std::move(dh);
          s.div_e = std::move(de);
          s.curr = std::move(next);
        }
        if (tm) s.max_tm = std::max(s.max_tm, tm_residual(s.curr));
      } catch (const PathError&) {
        throw;
      } catch (const std::exception& e) {
        throw PathError(step_context(p, n, e), p, n);
      }
    });

    stats.divergence.push_back({n, static_cast<double>(n) * config.dt,
                                err_div(grid, mean_lattice(grid, change_h)),
                                err_div(grid, mean_lattice(grid, change_e))});

    if (config.snapshot_every > 0 && (n + 1) % config.snapshot_every == 0) {
      stats.snapshots.push_back({n + 1, slots[0].curr});
    }
  }

  if (config.record_msymp) stats.msymp = msymp_check(config, n_steps);

  // --- statistics -------------------------------------------------------------
  const std::size_t rows = slots.front().energy.size();
  std::vector<double> col(P), times(rows), means(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = 0; p < P; ++p) col[p] = slots[p].energy[r];
    const double m = mean_of(col);
    std::vector<double> sq(P);
    for (std::size_t p = 0; p < P; ++p) sq[p] = (col[p] - m) * (col[p] - m);
    const double var = P > 1 ? pairwise_sum(sq) / static_cast<double>(P - 1) : 0.0;
    const std::uint64_t step = first_energy_step + r;
    const double t = static_cast<double>(step) * config.dt;
    stats.energy.push_back(
        {step, t, m, var, *std::min_element(col.begin(), col.end()),
         *std::max_element(col.begin(), col.end())});
    times[r] = t;
    means[r] = m;
  }
  if (rows >= 3) {
    stats.mean_fit = fit_slope(times, means);
    if (P > 1) {
      std::vector<double> slopes(P);
      for (std::size_t p = 0; p < P; ++p) slopes[p] = fit_slope(times, slots[p].energy).slope;
      const double ms = mean_of(slopes);
      std::vector<double> sq(P);
      for (std::size_t p = 0; p < P; ++p) sq[p] = (slopes[p] - ms) * (slopes[p] - ms);
      stats.slope_se = std::sqrt(pairwise_sum(sq) / static_cast<double>(P - 1) /
                                 static_cast<double>(P));
    }
  }
  for (const PathSlot& s : slots) {
    stats.max_energy_identity_residual =
        std::max(stats.max_energy_identity_residual, s.max_energy_gap);
    stats.max_div_identity_residual = std::max(stats.max_div_identity_residual, s.max_div_gap);
    stats.max_tm_residual = std::max(stats.max_tm_residual, s.max_tm);
  }
  return stats;
}

std::vector<MsympRow> msymp_check(const ExperimentConfig& config, std::uint64_t steps) {
  const GridSpec& grid = config.grid;
  const StepperPlan p = plan(config.scheme, grid, config.dt, config.coupling(), config.solver_tol);
  std::vector<MsympRow> rows;
  FieldState u = tangent_seed(grid, config.seed, 1);
  FieldState v = tangent_seed(grid, config.seed, 2);
  if (config.scheme == SchemeId::method2) {
    const StepperPlan boot =
        plan(SchemeId::method3, grid, config.dt, config.coupling(), config.solver_tol);
    TwoLayerState tu{u, step_tangent(boot, u)};
    TwoLayerState tv{v, step_tangent(boot, v)};
    for (std::uint64_t n = 1; n < steps; ++n) {
      FieldState u_next = step_tangent(p, tu);
      FieldState v_next = step_tangent(p, tv);
      rows.push_back({n, msymp_residual_method2(config.dt, tu.prev, tu.curr, u_next, tv.prev,
                                                tv.curr, v_next)
                             .relative()});
      tu = {std::move(tu.curr), std::move(u_next)};
      tv = {std::move(tv.curr), std::move(v_next)};
    }
    return rows;
  }
  for (std::uint64_t n = 0; n < steps; ++n) {
    FieldState u_next = step_tangent(p, u);
    FieldState v_next = step_tangent(p, v);
    rows.push_back({n, msymp_residual(config.scheme, config.dt, u, u_next, v, v_next).relative()});
    u = std::move(u_next);
    v = std::move(v_next);
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

// One path of a one-step or leapfrog run driven by increments
// noise(n) for n = 0..steps-1. Returns the final state.
FieldState run_path(const StepperPlan& main_plan, const StepperPlan* boot_plan,
                    const FieldState& initial, std::uint64_t steps,
                    const std::function<IncrementField(std::uint64_t)>& noise) {
  if (main_plan.scheme != SchemeId::method2) {
    FieldState s = initial;
    for (std::uint64_t n = 0; n < steps; ++n) s = step_one_layer(main_plan, s, noise(n));
    return s;
  }
  IncrementField prev = noise(0);
  TwoLayerState two = bootstrap_method2(*boot_plan, initial, prev);
  for (std::uint64_t n = 1; n < steps; ++n) {
    IncrementField cur = noise(n);
    FieldState next = step_method2(main_plan, two, prev, cur);
    two.prev = std::move(two.curr);
    two.curr = std::move(next);
    prev = std::move(cur);
  }
  return two.curr;
}

unsigned ratio_of(double dt, double dt_ref) {
  const double r = dt / dt_ref;
  const double rr = std::round(r);
  if (rr < 1.0 || std::abs(r - rr) > 1e-9 * rr) return 0;
  const auto k = static_cast<unsigned>(rr);
  return (k & (k - 1)) == 0 ? k : 0;
}

}  // namespace

ConvergenceTable msconv_study(const ExperimentConfig& config, std::span<const double> dt_list,
                              double dt_ref, std::uint64_t paths) {
  if (dt_list.empty()) throw std::invalid_argument("msconv_study: empty dt list");
  if (paths < 1) throw std::invalid_argument("msconv_study: paths must be >= 1");
  if (!(dt_ref > 0.0)) throw std::invalid_argument("msconv_study: dt_ref must be > 0");
  std::vector<unsigned> ratios;
  for (std::size_t k = 0; k < dt_list.size(); ++k) {
    const unsigned r = ratio_of(dt_list[k], dt_ref);
    if (r == 0) {
      std::ostringstream os;
      os << "msconv_study: dt=" << dt_list[k] << " is not dt_ref * 2^k (dt_ref=" << dt_ref << ")";
      throw std::invalid_argument(os.str());
    }
    if (k > 0 && !(dt_list[k] < dt_list[k - 1])) {
      throw std::invalid_argument("msconv_study: dt values must be strictly decreasing");
    }
    ratios.push_back(r);
  }
  const GridSpec& grid = config.grid;
  const CouplingVector coupling = config.coupling();
  const IncrementSampler sampler(NoiseStream(config.seed, config.noise), grid);
  const FieldState initial = initial_condition_tm(grid);

  ExperimentConfig ref_cfg = config;
  ref_cfg.dt = dt_ref;
  const std::uint64_t ref_steps = ref_cfg.steps();

  auto make_plans = [&](double dt) {
    std::pair<StepperPlan, std::optional<StepperPlan>> out{
        plan(config.scheme, grid, dt, coupling, config.solver_tol), std::nullopt};
    if (config.scheme == SchemeId::method2)
      out.second = plan(SchemeId::method3, grid, dt, coupling, config.solver_tol);
    return out;
  };
  const auto ref_plans = make_plans(dt_ref);
  std::vector<std::pair<StepperPlan, std::optional<StepperPlan>>> plans;
  std::vector<std::uint64_t> steps;
  for (std::size_t k = 0; k < dt_list.size(); ++k) {
    plans.push_back(make_plans(dt_list[k]));
    const std::uint64_t s = ref_steps / ratios[k];
    if (s * ratios[k] != ref_steps) {
      throw std::invalid_argument("msconv_study: t_end is not a multiple of every dt");
    }
    steps.push_back(s);
  }

  const std::size_t P = static_cast<std::size_t>(paths);
  std::vector<std::vector<double>> err(dt_list.size(), std::vector<double>(P));
  std::vector<double> checksum_gap(P, 0.0);
  parallel_for(P, config.workers, [&](std::size_t p) {
    Lattice w_ref(grid);
    const FieldState ref = run_path(
        ref_plans.first, ref_plans.second ? &*ref_plans.second : nullptr, initial, ref_steps,
        [&](std::uint64_t n) {
          IncrementField f = sampler.sample_increment(p, n, dt_ref);
          w_ref += f.values;
          return f;
        });
    for (std::size_t k = 0; k < dt_list.size(); ++k) {
      Lattice w(grid);
      const FieldState s = run_path(
          plans[k].first, plans[k].second ? &*plans[k].second : nullptr, initial, steps[k],
          [&](std::uint64_t n) {
            IncrementField f = sampler.coarse_from_fine(p, n, ratios[k], dt_ref);
            w += f.values;
            return f;
          });
      checksum_gap[p] = std::max(checksum_gap[p], (w - w_ref).max_abs());
      FieldState d = s;
      d -= ref;
      err[k][p] = energy_method3(d);
    }
  });

  ConvergenceTable table;
  table.paths = paths;
  for (std::size_t k = 0; k < dt_list.size(); ++k) {
    ConvergenceRow row{dt_list[k], mean_of(err[k]), kNaN};
    if (k > 0 && row.ms_error > 0.0 && table.rows.back().ms_error > 0.0) {
      row.local_order = 0.5 * std::log(row.ms_error / table.rows.back().ms_error) /
                        std::log(row.dt / table.rows.back().dt);
    }
    table.rows.push_back(row);
  }
  table.max_noise_checksum_diff = *std::max_element(checksum_gap.begin(), checksum_gap.end());

  std::vector<double> lx, ly;
  for (const ConvergenceRow& r : table.rows) {
    if (r.ms_error > 0.0) {
      lx.push_back(std::log(r.dt));
      ly.push_back(std::log(r.ms_error));
    }
  }
  if (lx.size() >= 3) {
    table.order = 0.5 * fit_slope(lx, ly).slope;
  } else if (lx.size() == 2) {
    table.order = 0.5 * (ly[1] - ly[0]) / (lx[1] - lx[0]);
  } else {
    table.order = kNaN;
  }
  return table;
}

// ---------------------------------------------------------------------------

std::vector<PathSweepRow> path_count_sweep(const ExperimentConfig& config,
                                           std::span<const std::uint64_t> p_list) {
  if (p_list.empty()) throw std::invalid_argument("path_count_sweep: empty path list");
  for (std::size_t k = 0; k < p_list.size(); ++k) {
    if (p_list[k] < 1) throw std::invalid_argument("path_count_sweep: path counts must be >= 1");
    if (k > 0 && p_list[k] <= p_list[k - 1]) {
      throw std::invalid_argument("path_count_sweep: path counts must be ascending");
    }
  }
  const GridSpec& grid = config.grid;
  const CouplingVector coupling = config.coupling();
  const NoiseStream stream(config.seed, config.noise);
  const IncrementSampler sampler(stream, grid);
  const bool leapfrog = config.scheme == SchemeId::method2;
  // The leapfrog's first divergence change involves steps 0 and 1.
  const std::uint64_t step_lo = 0, step_hi = leapfrog ? 1 : 0;
  const std::size_t modes = static_cast<std::size_t>(config.noise.mode_count());
  const std::size_t pairs = (modes + 1) / 2;
  const std::size_t checkpoints = p_list.size();

  // sums[level][checkpoint][mode]: running sums of xi over paths, recorded at
  // each checkpoint. Work is split over mode pairs; each pair sums its paths
  // sequentially, so the result is independent of the worker count.
  const std::size_t levels = step_hi - step_lo + 1;
  std::vector<std::vector<std::vector<double>>> sums(
      levels, std::vector<std::vector<double>>(checkpoints, std::vector<double>(modes, 0.0)));
  parallel_for(pairs, config.workers, [&](std::size_t q) {
    for (std::size_t lv = 0; lv < levels; ++lv) {
      double s0 = 0.0, s1 = 0.0;
      std::uint64_t done = 0;
      for (std::size_t c = 0; c < checkpoints; ++c) {
        for (; done < p_list[c]; ++done) {
          const auto xi = stream.normal_pair(done, step_lo + lv, static_cast<int>(q));
          s0 += xi[0];
          s1 += xi[1];
        }
        sums[lv][c][2 * q] = s0;
        if (2 * q + 1 < modes) sums[lv][c][2 * q + 1] = s1;
      }
    }
  });

  std::vector<PathSweepRow> out;
  const double sdt = std::sqrt(config.dt);
  for (std::size_t c = 0; c < checkpoints; ++c) {
    const double scale = sdt / static_cast<double>(p_list[c]);
    std::vector<Lattice> mean_w;
    for (std::size_t lv = 0; lv < levels; ++lv) {
      std::vector<double> coeff = sums[lv][c];
      for (double& v : coeff) v *= scale;
      mean_w.push_back(sampler.synthesize(coeff));
    }
    const Lattice change =
        leapfrog ? div_residual_oracle(config.scheme, grid, coupling, FieldSelector::h, mean_w[1],
                                       &mean_w[0])
                 : div_residual_oracle(config.scheme, grid, coupling, FieldSelector::h, mean_w[0]);
    out.push_back({p_list[c], err_div(grid, change)});
  }
  return out;
}

}  // namespace smx
