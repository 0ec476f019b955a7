#pragma once

// Truncated Q-Wiener process on the rectangle [0,lx] x [0,ly].
//
//   W(t,x,y) = sum_{m,l} sqrt(eta_{m,l}) e_{m,l}(x,y) beta_{m,l}(t)
//   e_{m,l}  = (2/sqrt(lx*ly)) sin(m pi x / lx) sin(l pi y / ly)
//   eta_{m,l} = 1 / (m^3 + l^3)
//
// For the default domain (2/3 x 1/2) the eigenfunctions are
// 2*sqrt(3) sin(3/2 m pi x) sin(2 l pi y).
//
// Increments are drawn from a counter-based generator keyed by
// (seed, path, step, mode), so any increment can be regenerated in any order
// and from any thread.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "smx/mesh_ops.hpp"

namespace smx {

enum class NoiseMode { space_time, time_only };

struct SpectralBasis {
  double lx = 2.0 / 3.0;
  double ly = 0.5;
  int trunc_m = 50;
  int trunc_l = 50;
  NoiseMode mode = NoiseMode::space_time;

  static SpectralBasis make(double lx, double ly, int trunc_m, int trunc_l,
                            NoiseMode mode = NoiseMode::space_time);

  /// 1/(m^3 + l^3); throws std::out_of_range outside the truncation.
  double eta(int m, int l) const;

  /// Number of independent scalar Brownian motions driving the field.
  int mode_count() const { return mode == NoiseMode::time_only ? 1 : trunc_m * trunc_l; }

  bool operator==(const SpectralBasis&) const = default;
};

/// e_{m,l}(x,y). Throws std::out_of_range for indices outside the truncation.
double eigenfunction(const SpectralBasis& basis, int m, int l, double x, double y);

/// a(m,l) = 2 sqrt(3 / (m^3 + l^3)), the coefficient magnitude in the
/// increment expansion on the default domain. Throws for indices < 1.
double coefficient_magnitude(int m, int l);

struct QTrace {
  double value = 0.0;
  /// Set in time_only mode, where the "trace" is the unit variance rate of
  /// a single scalar Brownian motion.
  bool scalar_brownian = false;
};

/// Sum of retained eigenvalues (1 in time_only mode).
QTrace trace_q(const SpectralBasis& basis);

struct DiscreteTrace {
  double vbar = 0.0;  ///< dV * sum_nodes sum_modes eta e^2
  double vhat = 0.0;  ///< vbar + dV * sum eta (|centered_x e|^2 + |centered_y e|^2)
};

/// Grid quadratures of Tr(Q) and of the H^1 Hilbert-Schmidt norm of Q^{1/2}.
/// Requires space_time mode (std::invalid_argument otherwise).
DiscreteTrace discrete_trace(const SpectralBasis& basis, const GridSpec& grid);

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter generate(Counter ctr, Key key);
};

/// Maps two 32-bit words to a double strictly inside (0,1) with 52 bits.
double uniform_open01(std::uint32_t hi, std::uint32_t lo);
/// Inverse standard-normal CDF.
double inverse_normal_cdf(double u);

class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, SpectralBasis basis);

  std::uint64_t seed() const { return seed_; }
  const SpectralBasis& basis() const { return basis_; }

  /// xi^{step}_{mode} for one path; mode in [0, basis.mode_count()).
  double normal(std::uint64_t path, std::uint64_t step, int mode) const;
  /// All mode_count() normals of one (path, step).
  void normals(std::uint64_t path, std::uint64_t step, std::span<double> out) const;
  /// Normals of modes 2*pair and 2*pair+1 (both come from one generator call).
  std::array<double, 2> normal_pair(std::uint64_t path, std::uint64_t step, int pair) const;

 private:
  std::uint64_t seed_;
  SpectralBasis basis_;
};

struct IncrementField {
  Lattice values;
  std::uint64_t step_index = 0;
  std::uint64_t path_index = 0;
  /// log2 of the number of finest-level increments aggregated into this one.
  unsigned dt_level = 0;
};

/// Samples increments of one NoiseStream on one grid. Holds the per-grid
/// eigenfunction tables; immutable and shareable across threads.
class IncrementSampler {
 public:
  IncrementSampler(NoiseStream stream, const GridSpec& grid);

  const NoiseStream& stream() const { return stream_; }
  const GridSpec& grid() const { return grid_; }

  /// Delta W^n = sum sqrt(eta) e(x_i,y_j) sqrt(dt) xi^n at every node.
  IncrementField sample_increment(std::uint64_t path, std::uint64_t n, double dt) const;

  /// Sum of the `ratio` consecutive finest-level increments (each of length
  /// fine_dt) covering coarse step n_coarse. `ratio` must be a power of two.
  IncrementField coarse_from_fine(std::uint64_t path, std::uint64_t n_coarse, unsigned ratio,
                                  double fine_dt) const;

  /// Field sum_q coeff[q] sqrt(eta_q) e_q(x_i,y_j); in time_only mode the
  /// single coefficient is broadcast.
  Lattice synthesize(std::span<const double> coeffs) const;

 private:
  NoiseStream stream_;
  GridSpec grid_;
  std::vector<double> sin_x_;  // nx * trunc_m, row-major (i, m)
  std::vector<double> sin_y_;  // trunc_l * ny, row-major (l, j)
  std::vector<double> sqrt_eta_;
  double norm_ = 0.0;
};

}  // namespace smx
