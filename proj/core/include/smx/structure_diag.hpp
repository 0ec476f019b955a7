#pragma once

// Discrete energies, divergences and multi-symplectic 2-forms of the three
// schemes, plus the closed-form per-step changes they are checked against.

#include <array>
#include <span>
#include <vector>

#include "smx/em_state.hpp"
#include "smx/integrators.hpp"
#include "smx/mesh_ops.hpp"

namespace smx {

// ---------------------------------------------------------------- energy ---

/// dV * sum |Z|^2 (Method-III).
double energy_method3(const FieldState& s);
/// dV * sum |S Z|^2 with S the cell average (Method-I).
double energy_method1(const FieldState& s);
/// dV * sum <Z^{n+1}, Z^n> (Method-II, value attached to t_{n+1}).
double energy_method2(const FieldState& older, const FieldState& newer);

/// Scheme dispatch: `older` is only read for Method-II.
double energy(SchemeId scheme, const FieldState& newer, const FieldState* older = nullptr);

/// Predicted Phi^{n+1} - Phi^n for a one-step scheme (I or III):
/// 2 dV sum c . (S Z^{n+1/2}) dW, S = identity for III.
double energy_increment(SchemeId scheme, const CouplingVector& coupling, const FieldState& before,
                        const FieldState& after, const Lattice& dW);
/// Predicted Phi^{II}(t_{n+1}) - Phi^{II}(t_n) = dV sum c . Z^n (dW^{n-1} + dW^n).
double energy_increment_method2(const CouplingVector& coupling, const FieldState& curr,
                                const Lattice& w_diff);

// ------------------------------------------------------------ divergence ---

enum class FieldSelector { e, h };

/// Scheme divergence of E or H. Method-I uses the box form
///   sum_p backward_diff_p prod_{q != p} (1 + shift_q^{-1}) S f_p
/// (sum over the adjacent cells of the cell averages, active axes only);
/// Methods II/III use sum_p centered_diff_p f_p. For Method-II pass the
/// half-level state (Z^n + Z^{n+1}) / 2.
Lattice divergence(SchemeId scheme, const FieldState& s, FieldSelector which);

/// (a + b) / 2, used for Method-II half levels.
FieldState half_level(const FieldState& a, const FieldState& b);

/// Closed-form per-step change of the selected divergence, driven only by
/// the increments: the divergence stencil (without the cell average for
/// Method-I) applied to c_p dW. For Method-II `dW_prev` must be the
/// increment over [t_{n-1}, t_n]; the change is between half levels
/// n-1/2 and n+1/2 and uses (dW_prev + dW) / 2.
Lattice div_residual_oracle(SchemeId scheme, const GridSpec& grid, const CouplingVector& coupling,
                            FieldSelector which, const Lattice& dW,
                            const Lattice* dW_prev = nullptr);

/// dV * sum_nodes |mean_change| (the Monte-Carlo divergence error).
double err_div(const GridSpec& grid, const Lattice& mean_change);
/// Same from per-path changes, averaged node-wise in fixed pairwise order.
double err_div(const GridSpec& grid, std::span<const Lattice> per_path_changes);

// ------------------------------------------------------ multi-symplectic ---

/// Pointwise bilinear forms <a, M b> and <a, K_p b> with
/// M = [[0, -I], [I, 0]] and K_p = diag(R_p, R_p), R_p the curl block of axis p.
Lattice pair_m(const FieldState& a, const FieldState& b);
Lattice pair_k(Axis p, const FieldState& a, const FieldState& b);

/// omega(u,v) = <u, M v> - <v, M u> at each node and
/// kappa_p(u,v) = <u_i, K_p v_{i+1}> - <v_i, K_p u_{i+1}> at each i+1/2
/// (stored at index i). Antisymmetric in (u, v).
struct TwoFormSample {
  Lattice omega;
  std::array<Lattice, 3> kappa;
};
TwoFormSample two_form(const FieldState& u, const FieldState& v);

struct MsympResidual {
  double max_abs = 0.0;   ///< max over cells of |conservation-law left side|
  double scale = 0.0;     ///< max over cells of the summed term magnitudes
  double relative() const { return scale > 0.0 ? max_abs / scale : max_abs; }
};

/// Discrete conservation law of a one-step scheme between levels n and n+1
/// for tangents u, v (I: cell averages and face averages; III: nodes and
/// half-points).
MsympResidual msymp_residual(SchemeId scheme, double dt, const FieldState& u0,
                             const FieldState& u1, const FieldState& v0, const FieldState& v1);
/// Leapfrog law between omega^{n-1/2} and omega^{n+1/2}, kappa at level n.
MsympResidual msymp_residual_method2(double dt, const FieldState& u_prev, const FieldState& u_curr,
                                     const FieldState& u_next, const FieldState& v_prev,
                                     const FieldState& v_curr, const FieldState& v_next);

// --------------------------------------------------------------- fitting ---

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares. Throws std::invalid_argument for fewer than 3
/// points, mismatched lengths or constant abscissae.
LinearFit fit_slope(std::span<const double> t, std::span<const double> y);

}  // namespace smx
