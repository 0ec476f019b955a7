#pragma once

// Uniform periodic lattice and the finite-difference / half-point averaging
// operators used by all three schemes.
//
// Storage is node-based and row-major with x fastest. Node `n` on an axis
// is identified with node 0, so an axis with a single node turns every
// difference along it into zero and every average along it into identity.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace smx {

enum class Axis : int { x = 0, y = 1, z = 2 };

inline constexpr std::array<Axis, 3> kAllAxes{Axis::x, Axis::y, Axis::z};

inline constexpr int axis_index(Axis a) { return static_cast<int>(a); }

struct GridSpec {
  int nx = 1;
  int ny = 1;
  int nz = 1;
  double lx = 1.0;
  double ly = 1.0;
  double lz = 1.0;

  /// Validated constructor; throws std::invalid_argument on non-positive
  /// counts or lengths.
  static GridSpec make(int nx, int ny, int nz, double lx, double ly, double lz);

  int count(Axis a) const;
  double length(Axis a) const;
  double spacing(Axis a) const { return length(a) / count(a); }

  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
  double dz() const { return lz / nz; }
  double cell_volume() const { return dx() * dy() * dz(); }
  double volume() const { return lx * ly * lz; }

  std::size_t node_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }

  bool active(Axis a) const { return count(a) > 1; }
  int active_axis_count() const;

  /// Linear index with periodic wraparound on every axis.
  std::size_t index(int i, int j, int k) const;

  double x(int i) const { return i * dx(); }
  double y(int j) const { return j * dy(); }
  double z(int k) const { return k * dz(); }

  bool operator==(const GridSpec&) const = default;
};

/// Owned lattice of reals shaped like a GridSpec. Element access through
/// operator() wraps indices modularly.
class Lattice {
 public:
  Lattice() = default;
  explicit Lattice(const GridSpec& grid, double fill = 0.0);
  Lattice(int nx, int ny, int nz, double fill = 0.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int i, int j, int k) { return values_[wrap_index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return values_[wrap_index(i, j, k)]; }
  double& operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool same_shape(const Lattice& other) const {
    return nx_ == other.nx_ && ny_ == other.ny_ && nz_ == other.nz_;
  }
  bool matches(const GridSpec& g) const { return nx_ == g.nx && ny_ == g.ny && nz_ == g.nz; }

  void fill(double v);
  double max_abs() const;

  Lattice& operator+=(const Lattice& rhs);
  Lattice& operator-=(const Lattice& rhs);
  Lattice& operator*=(double s);
  /// this += s * rhs
  Lattice& add_scaled(double s, const Lattice& rhs);

  friend Lattice operator+(Lattice a, const Lattice& b) { return a += b; }
  friend Lattice operator-(Lattice a, const Lattice& b) { return a -= b; }
  friend Lattice operator*(double s, Lattice a) { return a *= s; }

  bool operator==(const Lattice&) const = default;

 private:
  std::size_t wrap_index(int i, int j, int k) const;

  int nx_ = 0;
  int ny_ = 0;
  int nz_ = 0;
  std::vector<double> values_;
};

/// One tap of a translation-invariant stencil: out(i,j,k) += w * in(i+di, j+dj, k+dk).
struct Tap {
  int di = 0;
  int dj = 0;
  int dk = 0;
  double w = 0.0;
};

/// Translation-invariant linear operator on a periodic lattice, stored as a
/// list of taps. Composition is convolution of tap lists.
class Stencil {
 public:
  Stencil() = default;
  explicit Stencil(std::vector<Tap> taps);

  static Stencil identity();
  static Stencil shift(Axis a, int offset);
  static Stencil forward_diff(Axis a, double h);
  static Stencil backward_diff(Axis a, double h);
  static Stencil centered_diff(Axis a, double h);
  static Stencil forward_average(Axis a);
  static Stencil backward_average(Axis a);

  const std::vector<Tap>& taps() const { return taps_; }

  /// out += scale * S(in)
  void apply_add(const Lattice& in, Lattice& out, double scale = 1.0) const;
  Lattice apply(const Lattice& in) const;

  friend Stencil operator*(const Stencil& a, const Stencil& b);  // a after b
  friend Stencil operator+(const Stencil& a, const Stencil& b);
  friend Stencil operator-(const Stencil& a, const Stencil& b);
  friend Stencil operator*(double s, const Stencil& a);

 private:
  void normalize();
  std::vector<Tap> taps_;
};

enum class HalfSide { forward, backward };

/// (f_{i+1} - f_i) / h along `axis`.
Lattice forward_diff(const GridSpec& grid, const Lattice& f, Axis axis);
/// (f_i - f_{i-1}) / h along `axis`.
Lattice backward_diff(const GridSpec& grid, const Lattice& f, Axis axis);
/// (f_{i+1} - f_{i-1}) / (2h) along `axis`.
Lattice centered_diff(const GridSpec& grid, const Lattice& f, Axis axis);

/// Average of f over the 2^|axes| nodes adjacent to the half-index point
/// (i+1/2 for HalfSide::forward, i-1/2 for backward) along each listed axis.
Lattice half_average(const GridSpec& grid, const Lattice& f, std::span<const Axis> axes,
                     HalfSide side = HalfSide::forward);
Lattice half_average(const GridSpec& grid, const Lattice& f, std::initializer_list<Axis> axes,
                     HalfSide side = HalfSide::forward);

/// Fixed-order pairwise summation; result depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// dx*dy*dz * sum_n f_n g_n
double grid_inner(const GridSpec& grid, const Lattice& f, const Lattice& g);

}  // namespace smx
