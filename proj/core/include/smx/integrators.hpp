#pragma once

// The three stochastic multi-symplectic steppers.
//
//   Method-I   box scheme: midpoint in time, 2^d-node cell averages in space.
//              (S - dt/2 C) Z^{n+1} = (S + dt/2 C) Z^n + c dW^n
//   Method-II  leapfrog on collocated nodes (Yee-equivalent):
//              Z^{n+1} = Z^{n-1} + 2 dt A Z^n + c (dW^{n-1} + dW^n)
//   Method-III centered differences in space, midpoint in time:
//              (I - dt/2 A) Z^{n+1} = (I + dt/2 A) Z^n + c dW^n
//
// A is the Maxwell curl with centered differences, C the same curl with the
// box derivatives D_p = forward_diff_p * prod_{q != p} forward_average_q, and
// S = prod_q forward_average_q. Only axes with more than one node enter the
// products. The implicit operators are constant, so each plan assembles and
// factors them once.

#include <array>
#include <complex>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "smx/em_state.hpp"
#include "smx/errors.hpp"
#include "smx/mesh_ops.hpp"
#include "smx/noise_field.hpp"

namespace smx {

enum class SchemeId { method1, method2, method3 };

const char* scheme_name(SchemeId s);
/// Accepts "method1"/"method2"/"method3" (also "I", "II", "III").
SchemeId parse_scheme(std::string_view text);

/// Linear map on six-component fields: out_r = sum_c block(r,c) in_c.
class BlockOperator {
 public:
  Stencil& block(Component r, Component c) { return blocks_[index(r)][index(c)]; }
  const Stencil& block(Component r, Component c) const { return blocks_[index(r)][index(c)]; }
  const Stencil& block(int r, int c) const {
    return blocks_[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }

  void apply_add(const FieldState& in, FieldState& out, double scale = 1.0) const;
  FieldState apply(const FieldState& in) const;

  /// Fourier symbol at wavenumbers theta (radians per node) for each axis.
  std::array<std::array<std::complex<double>, 6>, 6> symbol(
      const std::array<double, 3>& theta) const;

  friend BlockOperator operator+(const BlockOperator& a, const BlockOperator& b);
  friend BlockOperator operator*(double s, const BlockOperator& a);

 private:
  static std::size_t index(Component c) { return static_cast<std::size_t>(c); }
  std::array<std::array<Stencil, 6>, 6> blocks_;
};

/// The derivative a scheme uses along `axis`: centered for II/III, box
/// derivative for I. Zero stencil on inactive axes.
Stencil scheme_derivative(SchemeId scheme, const GridSpec& grid, Axis axis);
/// prod_q forward_average_q over active axes (identity for II/III).
Stencil scheme_average(SchemeId scheme, const GridSpec& grid);

/// Maxwell curl built from scheme_derivative.
BlockOperator curl_operator(SchemeId scheme, const GridSpec& grid);
/// scheme_average on the diagonal.
BlockOperator mass_operator(SchemeId scheme, const GridSpec& grid);

class ImplicitSystem;

struct SparseEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

struct StepperPlan {
  SchemeId scheme = SchemeId::method3;
  GridSpec grid;
  double dt = 0.0;
  CouplingVector coupling;
  double solver_tol = 1e-12;
  /// Factored implicit operator; null for Method-II.
  std::shared_ptr<const ImplicitSystem> system;
  /// Non-fatal advisories produced at planning time.
  std::vector<std::string> warnings;
};

/// Assembles and factors the implicit operator (I, III) or prepares the
/// stencil-only leapfrog (II). Throws std::invalid_argument for dt <= 0 and
/// PlanningError when the implicit operator is singular.
StepperPlan plan(SchemeId scheme, const GridSpec& grid, double dt, const CouplingVector& coupling,
                 double solver_tol = 1e-12);

/// Smallest singular value of the implicit operator's symbol over all
/// discrete wavenumbers of the grid (for II: of the identity, i.e. 1).
double implicit_symbol_min_singular_value(SchemeId scheme, const GridSpec& grid, double dt);

/// Leapfrog advisory bound min_h / sqrt(active axes).
double leapfrog_dt_heuristic(const GridSpec& grid);

/// Row-major entries of the implicit operator (lhs) and the explicit
/// right-hand-side operator (rhs) over unknowns ordered component-major:
/// row = component * node_count + node index. Empty for Method-II.
std::vector<SparseEntry> lhs_entries(const StepperPlan& plan);
std::vector<SparseEntry> rhs_entries(const StepperPlan& plan);

FieldState step_method1(const StepperPlan& plan, const FieldState& state, const IncrementField& dW);
FieldState step_method3(const StepperPlan& plan, const FieldState& state, const IncrementField& dW);
/// Dispatches to step_method1 / step_method3.
FieldState step_one_layer(const StepperPlan& plan, const FieldState& state,
                          const IncrementField& dW);

struct TwoLayerState {
  FieldState prev;  ///< t_{n-1}
  FieldState curr;  ///< t_n
};

/// (state0, one Method-III step driven by dW0). The first leapfrog step that
/// follows must receive dW0 again as its dW_prev.
TwoLayerState bootstrap_method2(const StepperPlan& plan_method3, const FieldState& state0,
                                const IncrementField& dW0);

/// Z^{n+1} from (Z^{n-1}, Z^n) and the increments over [t_{n-1}, t_n] and
/// [t_n, t_{n+1}].
FieldState step_method2(const StepperPlan& plan, const TwoLayerState& layers,
                        const IncrementField& dW_prev, const IncrementField& dW_curr);

/// The raw leapfrog formula, valid for either sign of dt (running it with
/// swapped layers, -dt and negated noise inverts a step). `w_diff` is
/// W^{n+1} - W^{n-1}; pass nullptr for no noise.
FieldState leapfrog_update(const GridSpec& grid, const CouplingVector& coupling, double dt,
                           const FieldState& prev, const FieldState& curr, const Lattice* w_diff);

/// Variational (zero-noise) step of a one-step scheme.
FieldState step_tangent(const StepperPlan& plan, const FieldState& u);
/// Variational leapfrog step.
FieldState step_tangent(const StepperPlan& plan, const TwoLayerState& u);

}  // namespace smx
