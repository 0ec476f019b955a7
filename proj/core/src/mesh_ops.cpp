#include "smx/mesh_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

namespace smx {

namespace {

int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

GridSpec GridSpec::make(int nx, int ny, int nz, double lx, double ly, double lz) {
  if (nx < 1 || ny < 1 || nz < 1) {
    throw std::invalid_argument("grid node counts must be >= 1, got " + std::to_string(nx) + "x" +
                                std::to_string(ny) + "x" + std::to_string(nz));
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !(lz > 0.0) || !std::isfinite(lx) || !std::isfinite(ly) ||
      !std::isfinite(lz)) {
    throw std::invalid_argument("grid lengths must be positive and finite");
  }
  return GridSpec{nx, ny, nz, lx, ly, lz};
}

int GridSpec::count(Axis a) const {
  switch (a) {
    case Axis::x: return nx;
    case Axis::y: return ny;
    case Axis::z: return nz;
  }
  return 1;
}

double GridSpec::length(Axis a) const {
  switch (a) {
    case Axis::x: return lx;
    case Axis::y: return ly;
    case Axis::z: return lz;
  }
  return 1.0;
}

int GridSpec::active_axis_count() const {
  return static_cast<int>(std::count_if(kAllAxes.begin(), kAllAxes.end(),
                                        [this](Axis a) { return active(a); }));
}

std::size_t GridSpec::index(int i, int j, int k) const {
  return (static_cast<std::size_t>(wrap(k, nz)) * ny + wrap(j, ny)) * nx + wrap(i, nx);
}

// ---------------------------------------------------------------------------

Lattice::Lattice(const GridSpec& grid, double fill) : Lattice(grid.nx, grid.ny, grid.nz, fill) {}

Lattice::Lattice(int nx, int ny, int nz, double fill)
    : nx_(nx), ny_(ny), nz_(nz),
      values_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                  static_cast<std::size_t>(nz),
              fill) {
  if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("lattice extents must be >= 1");
}

std::size_t Lattice::wrap_index(int i, int j, int k) const {
  return (static_cast<std::size_t>(wrap(k, nz_)) * ny_ + wrap(j, ny_)) * nx_ + wrap(i, nx_);
}

void Lattice::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

double Lattice::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Lattice& Lattice::operator+=(const Lattice& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("lattice shape mismatch");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += rhs.values_[n];
  return *this;
}

Lattice& Lattice::operator-=(const Lattice& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("lattice shape mismatch");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= rhs.values_[n];
  return *this;
}

Lattice& Lattice::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Lattice& Lattice::add_scaled(double s, const Lattice& rhs) {
  if (!same_shape(rhs)) throw std::invalid_argument("lattice shape mismatch");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += s * rhs.values_[n];
  return *this;
}

// ---------------------------------------------------------------------------

Stencil::Stencil(std::vector<Tap> taps) : taps_(std::move(taps)) { normalize(); }

void Stencil::normalize() {
  std::map<std::tuple<int, int, int>, double> merged;
  for (const Tap& t : taps_) merged[{t.di, t.dj, t.dk}] += t.w;
  taps_.clear();
  for (const auto& [off, w] : merged) {
    if (w != 0.0) taps_.push_back({std::get<0>(off), std::get<1>(off), std::get<2>(off), w});
  }
}

Stencil Stencil::identity() { return Stencil({{0, 0, 0, 1.0}}); }

Stencil Stencil::shift(Axis a, int offset) {
  Tap t{0, 0, 0, 1.0};
  (a == Axis::x ? t.di : a == Axis::y ? t.dj : t.dk) = offset;
  return Stencil({t});
}

Stencil Stencil::forward_diff(Axis a, double h) {
  return (1.0 / h) * (shift(a, 1) - identity());
}

Stencil Stencil::backward_diff(Axis a, double h) {
  return (1.0 / h) * (identity() - shift(a, -1));
}

Stencil Stencil::centered_diff(Axis a, double h) {
  return (0.5 / h) * (shift(a, 1) - shift(a, -1));
}

Stencil Stencil::forward_average(Axis a) { return 0.5 * (identity() + shift(a, 1)); }

Stencil Stencil::backward_average(Axis a) { return 0.5 * (identity() + shift(a, -1)); }

Stencil operator*(const Stencil& a, const Stencil& b) {
  std::vector<Tap> out;
  out.reserve(a.taps_.size() * b.taps_.size());
  for (const Tap& ta : a.taps_) {
    for (const Tap& tb : b.taps_) {
      out.push_back({ta.di + tb.di, ta.dj + tb.dj, ta.dk + tb.dk, ta.w * tb.w});
    }
  }
  return Stencil(std::move(out));
}

Stencil operator+(const Stencil& a, const Stencil& b) {
  std::vector<Tap> out = a.taps_;
  out.insert(out.end(), b.taps_.begin(), b.taps_.end());
  return Stencil(std::move(out));
}

Stencil operator-(const Stencil& a, const Stencil& b) { return a + (-1.0) * b; }

Stencil operator*(double s, const Stencil& a) {
  std::vector<Tap> out = a.taps_;
  for (Tap& t : out) t.w *= s;
  return Stencil(std::move(out));
}

void Stencil::apply_add(const Lattice& in, Lattice& out, double scale) const {
  if (!in.same_shape(out)) throw std::invalid_argument("stencil: lattice shape mismatch");
  const int nx = in.nx(), ny = in.ny(), nz = in.nz();
  std::vector<int> xs(static_cast<std::size_t>(nx));
  const double* src = in.data();
  double* dst = out.data();
  for (const Tap& t : taps_) {
    const double w = scale * t.w;
    for (int i = 0; i < nx; ++i) xs[static_cast<std::size_t>(i)] = wrap(i + t.di, nx);
    for (int k = 0; k < nz; ++k) {
      const int ks = wrap(k + t.dk, nz);
      for (int j = 0; j < ny; ++j) {
        const int js = wrap(j + t.dj, ny);
        const double* row_in = src + (static_cast<std::size_t>(ks) * ny + js) * nx;
        double* row_out = dst + (static_cast<std::size_t>(k) * ny + j) * nx;
        for (int i = 0; i < nx; ++i) row_out[i] += w * row_in[xs[static_cast<std::size_t>(i)]];
      }
    }
  }
}

Lattice Stencil::apply(const Lattice& in) const {
  Lattice out(in.nx(), in.ny(), in.nz());
  apply_add(in, out);
  return out;
}

// ---------------------------------------------------------------------------

Lattice forward_diff(const GridSpec& grid, const Lattice& f, Axis axis) {
  return Stencil::forward_diff(axis, grid.spacing(axis)).apply(f);
}

Lattice backward_diff(const GridSpec& grid, const Lattice& f, Axis axis) {
  return Stencil::backward_diff(axis, grid.spacing(axis)).apply(f);
}

Lattice centered_diff(const GridSpec& grid, const Lattice& f, Axis axis) {
  return Stencil::centered_diff(axis, grid.spacing(axis)).apply(f);
}

Lattice half_average(const GridSpec& /*grid*/, const Lattice& f, std::span<const Axis> axes,
                     HalfSide side) {
  Stencil s = Stencil::identity();
  for (Axis a : axes) {
    s = (side == HalfSide::forward ? Stencil::forward_average(a) : Stencil::backward_average(a)) * s;
  }
  return s.apply(f);
}

Lattice half_average(const GridSpec& grid, const Lattice& f, std::initializer_list<Axis> axes,
                     HalfSide side) {
  return half_average(grid, f, std::span<const Axis>(axes.begin(), axes.size()), side);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double grid_inner(const GridSpec& grid, const Lattice& f, const Lattice& g) {
  if (!f.same_shape(g)) throw std::invalid_argument("grid_inner: shape mismatch");
  std::vector<double> prod(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) prod[n] = f[n] * g[n];
  return grid.cell_volume() * pairwise_sum(prod);
}

}  // namespace smx
