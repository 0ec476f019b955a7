#include "smx/em_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "smx/numfmt.hpp"

namespace smx {

const char* component_name(Component c) {
  static constexpr const char* names[] = {"h1", "h2", "h3", "e1", "e2", "e3"};
  return names[component_index(c)];
}

FieldState::FieldState(const GridSpec& g, double t) : grid(g), time(t) {
  for (Lattice& f : z) f = Lattice(g);
}

FieldState& FieldState::operator+=(const FieldState& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("field state grid mismatch");
  for (std::size_t c = 0; c < 6; ++c) z[c] += rhs.z[c];
  return *this;
}

FieldState& FieldState::operator-=(const FieldState& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("field state grid mismatch");
  for (std::size_t c = 0; c < 6; ++c) z[c] -= rhs.z[c];
  return *this;
}

FieldState& FieldState::operator*=(double s) {
  for (Lattice& f : z) f *= s;
  return *this;
}

FieldState& FieldState::add_scaled(double s, const FieldState& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("field state grid mismatch");
  for (std::size_t c = 0; c < 6; ++c) z[c].add_scaled(s, rhs.z[c]);
  return *this;
}

double FieldState::max_abs() const {
  double m = 0.0;
  for (const Lattice& f : z) m = std::max(m, f.max_abs());
  return m;
}

bool FieldState::all_finite() const {
  for (const Lattice& f : z)
    for (double v : f.values())
      if (!std::isfinite(v)) return false;
  return true;
}

CouplingVector CouplingVector::full3d(double lambda1, double lambda2) {
  return {{lambda2, lambda2, lambda2, -lambda1, -lambda1, -lambda1}};
}

CouplingVector CouplingVector::tm(double lambda1, double lambda2) {
  return {{lambda2, lambda2, 0.0, 0.0, 0.0, -lambda1}};
}

CouplingVector CouplingVector::for_mode(FieldMode mode, double lambda1, double lambda2) {
  return mode == FieldMode::tm ? tm(lambda1, lambda2) : full3d(lambda1, lambda2);
}

double CouplingVector::norm2() const {
  double s = 0.0;
  for (double v : c) s += v * v;
  return s;
}

bool CouplingVector::is_zero() const {
  for (double v : c)
    if (v != 0.0) return false;
  return true;
}

FieldState initial_condition_tm(const GridSpec& grid) {
  FieldState s(grid);
  const double pi = std::numbers::pi;
  for (int k = 0; k < grid.nz; ++k) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x(i), y = grid.y(j);
        const double ss = std::sin(3.0 * pi * x) * std::sin(4.0 * pi * y);
        s.e3()(i, j, k) = ss;
        s.h1()(i, j, k) = -0.8 * std::cos(3.0 * pi * x) * std::cos(4.0 * pi * y);
        s.h2()(i, j, k) = -0.6 * ss;
      }
    }
  }
  return s;
}

std::vector<std::string> initial_condition_warnings(const GridSpec& grid) {
  std::vector<std::string> w;
  // sin(3 pi x) has period 2/3 and sin(4 pi y) period 1/2; any integer
  // multiple of those keeps the data periodic.
  auto multiple_of = [](double len, double period) {
    const double r = len / period;
    return std::abs(r - std::round(r)) < 1e-12 && std::round(r) >= 1.0;
  };
  if (!multiple_of(grid.lx, 2.0 / 3.0)) {
    w.push_back("lx is not a multiple of 2/3; TM initial data is not periodic in x");
  }
  if (!multiple_of(grid.ly, 0.5)) {
    w.push_back("ly is not a multiple of 1/2; TM initial data is not periodic in y");
  }
  if (grid.nz != 1) w.push_back("TM initial data is z-invariant but nz != 1");
  return w;
}

double tm_residual(const FieldState& state) {
  return std::max({state.h3().max_abs(), state.e1().max_abs(), state.e2().max_abs()});
}

void write_snapshot_csv(std::ostream& out, const FieldState& state) {
  out << "i,j,x,y,h1,h2,h3,e1,e2,e3\n";
  const GridSpec& g = state.grid;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      out << i << ',' << j << ',' << format_double(g.x(i)) << ',' << format_double(g.y(j));
      for (const Lattice& f : state.z) out << ',' << format_double(f(i, j, 0));
      out << '\n';
    }
  }
}

}  // namespace smx
