#pragma once

// Six-component field Z = (H1, H2, H3, E1, E2, E3) on a GridSpec, the
// per-component noise coupling, and the TM initial data.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "smx/mesh_ops.hpp"

namespace smx {

enum class Component : int { h1 = 0, h2 = 1, h3 = 2, e1 = 3, e2 = 4, e3 = 5 };

inline constexpr std::array<Component, 6> kAllComponents{
    Component::h1, Component::h2, Component::h3, Component::e1, Component::e2, Component::e3};

inline constexpr int component_index(Component c) { return static_cast<int>(c); }
const char* component_name(Component c);

enum class FieldMode { tm, full3d };

struct FieldState {
  GridSpec grid;
  std::array<Lattice, 6> z;
  double time = 0.0;

  FieldState() = default;
  explicit FieldState(const GridSpec& g, double t = 0.0);

  Lattice& operator[](Component c) { return z[static_cast<std::size_t>(c)]; }
  const Lattice& operator[](Component c) const { return z[static_cast<std::size_t>(c)]; }
  Lattice& operator[](int c) { return z[static_cast<std::size_t>(c)]; }
  const Lattice& operator[](int c) const { return z[static_cast<std::size_t>(c)]; }

  Lattice& h1() { return z[0]; }
  Lattice& h2() { return z[1]; }
  Lattice& h3() { return z[2]; }
  Lattice& e1() { return z[3]; }
  Lattice& e2() { return z[4]; }
  Lattice& e3() { return z[5]; }
  const Lattice& h1() const { return z[0]; }
  const Lattice& h2() const { return z[1]; }
  const Lattice& h3() const { return z[2]; }
  const Lattice& e1() const { return z[3]; }
  const Lattice& e2() const { return z[4]; }
  const Lattice& e3() const { return z[5]; }

  /// Field values only; `time` is left untouched by the arithmetic.
  FieldState& operator+=(const FieldState& rhs);
  FieldState& operator-=(const FieldState& rhs);
  FieldState& operator*=(double s);
  FieldState& add_scaled(double s, const FieldState& rhs);

  double max_abs() const;
  bool all_finite() const;
  bool same_shape(const FieldState& other) const { return grid == other.grid; }
};

/// Per-component coefficient multiplying Delta W in every scheme.
struct CouplingVector {
  std::array<double, 6> c{};

  /// (l2, l2, l2, -l1, -l1, -l1)
  static CouplingVector full3d(double lambda1, double lambda2);
  /// (l2, l2, 0, 0, 0, -l1)
  static CouplingVector tm(double lambda1, double lambda2);
  static CouplingVector for_mode(FieldMode mode, double lambda1, double lambda2);

  double operator[](Component k) const { return c[static_cast<std::size_t>(k)]; }
  double operator[](int k) const { return c[static_cast<std::size_t>(k)]; }
  double norm2() const;
  bool is_zero() const;
};

/// E3 = sin(3 pi x) sin(4 pi y), H1 = -4/5 cos(3 pi x) cos(4 pi y),
/// H2 = -3/5 sin(3 pi x) sin(4 pi y); everything else zero.
FieldState initial_condition_tm(const GridSpec& grid);

/// Human-readable problems with using the TM data on `grid` (empty when the
/// grid is the 2/3 x 1/2 single-layer domain the data is periodic on).
std::vector<std::string> initial_condition_warnings(const GridSpec& grid);

/// max |.| over h3, e1, e2.
double tm_residual(const FieldState& state);

/// CSV `i,j,x,y,h1,h2,h3,e1,e2,e3` for the k = 0 plane.
void write_snapshot_csv(std::ostream& out, const FieldState& state);

}  // namespace smx
