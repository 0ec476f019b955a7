#include "smx/structure_diag.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smx {

namespace {

Lattice shifted(const Lattice& f, Axis a, int offset) { return Stencil::shift(a, offset).apply(f); }

FieldState shifted(const FieldState& s, Axis a, int offset) {
  FieldState out = s;
  const Stencil sh = Stencil::shift(a, offset);
  for (std::size_t c = 0; c < 6; ++c) out.z[c] = sh.apply(s.z[c]);
  return out;
}

FieldState apply_each(const Stencil& st, const FieldState& s) {
  FieldState out = s;
  for (std::size_t c = 0; c < 6; ++c) out.z[c] = st.apply(s.z[c]);
  return out;
}

double sum_products(const FieldState& a, const FieldState& b, const CouplingVector* weights) {
  std::vector<double> terms;
  terms.reserve(6 * a.grid.node_count());
  for (std::size_t c = 0; c < 6; ++c) {
    const double w = weights ? weights->c[c] : 1.0;
    if (w == 0.0) continue;
    for (std::size_t n = 0; n < a.z[c].size(); ++n) terms.push_back(w * a.z[c][n] * b.z[c][n]);
  }
  return pairwise_sum(terms);
}

// Component offset of the selected field inside Z.
int field_offset(FieldSelector which) { return which == FieldSelector::h ? 0 : 3; }

// Divergence stencil for component p of the field, without the Method-I
// cell average.
Stencil div_stencil(SchemeId scheme, const GridSpec& grid, Axis p) {
  if (!grid.active(p)) return Stencil();
  if (scheme != SchemeId::method1) return Stencil::centered_diff(p, grid.spacing(p));
  Stencil s = Stencil::backward_diff(p, grid.spacing(p));
  for (Axis q : kAllAxes)
    if (q != p && grid.active(q)) s = (Stencil::identity() + Stencil::shift(q, -1)) * s;
  return s;
}

void accumulate_abs(const Lattice& f, Lattice& into, double scale) {
  for (std::size_t n = 0; n < f.size(); ++n) into[n] += scale * std::abs(f[n]);
}

}  // namespace

// ---------------------------------------------------------------- energy ---

double energy_method3(const FieldState& s) {
  return s.grid.cell_volume() * sum_products(s, s, nullptr);
}

double energy_method1(const FieldState& s) {
  const FieldState g = apply_each(scheme_average(SchemeId::method1, s.grid), s);
  return s.grid.cell_volume() * sum_products(g, g, nullptr);
}

double energy_method2(const FieldState& older, const FieldState& newer) {
  if (!older.same_shape(newer)) throw std::invalid_argument("energy_method2: grid mismatch");
  return newer.grid.cell_volume() * sum_products(newer, older, nullptr);
}

double energy(SchemeId scheme, const FieldState& newer, const FieldState* older) {
  switch (scheme) {
    case SchemeId::method1: return energy_method1(newer);
    case SchemeId::method3: return energy_method3(newer);
    case SchemeId::method2:
      if (older == nullptr) throw std::invalid_argument("method2 energy needs two layers");
      return energy_method2(*older, newer);
  }
  return 0.0;
}

double energy_increment(SchemeId scheme, const CouplingVector& coupling, const FieldState& before,
                        const FieldState& after, const Lattice& dW) {
  if (scheme == SchemeId::method2) {
    throw std::invalid_argument("energy_increment: use energy_increment_method2");
  }
  FieldState mid = half_level(before, after);
  if (scheme == SchemeId::method1) mid = apply_each(scheme_average(scheme, mid.grid), mid);
  FieldState noise(mid.grid);
  for (Lattice& f : noise.z) f = dW;
  return 2.0 * mid.grid.cell_volume() * sum_products(mid, noise, &coupling);
}

double energy_increment_method2(const CouplingVector& coupling, const FieldState& curr,
                                const Lattice& w_diff) {
  FieldState noise(curr.grid);
  for (Lattice& f : noise.z) f = w_diff;
  return curr.grid.cell_volume() * sum_products(curr, noise, &coupling);
}

// ------------------------------------------------------------ divergence ---

FieldState half_level(const FieldState& a, const FieldState& b) {
  FieldState out = a;
  out += b;
  out *= 0.5;
  out.time = 0.5 * (a.time + b.time);
  return out;
}

Lattice divergence(SchemeId scheme, const FieldState& s, FieldSelector which) {
  Lattice out(s.grid);
  const int off = field_offset(which);
  const Stencil avg = scheme_average(scheme, s.grid);
  for (Axis p : kAllAxes) {
    const Stencil d = div_stencil(scheme, s.grid, p) * avg;
    if (d.taps().empty()) continue;
    d.apply_add(s[off + axis_index(p)], out);
  }
  return out;
}

Lattice div_residual_oracle(SchemeId scheme, const GridSpec& grid, const CouplingVector& coupling,
                            FieldSelector which, const Lattice& dW, const Lattice* dW_prev) {
  if (!dW.matches(grid)) throw std::invalid_argument("div_residual_oracle: increment shape");
  Lattice w = dW;
  if (scheme == SchemeId::method2) {
    if (dW_prev == nullptr) throw std::invalid_argument("method2 oracle needs dW_prev");
    if (!dW_prev->matches(grid)) throw std::invalid_argument("div_residual_oracle: dW_prev shape");
    w += *dW_prev;
    w *= 0.5;
  }
  Lattice out(grid);
  const int off = field_offset(which);
  for (Axis p : kAllAxes) {
    const double c = coupling[off + axis_index(p)];
    if (c == 0.0) continue;
    const Stencil d = div_stencil(scheme, grid, p);
    if (d.taps().empty()) continue;
    d.apply_add(w, out, c);
  }
  return out;
}

double err_div(const GridSpec& grid, const Lattice& mean_change) {
  std::vector<double> a(mean_change.size());
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = std::abs(mean_change[n]);
  return grid.cell_volume() * pairwise_sum(a);
}

double err_div(const GridSpec& grid, std::span<const Lattice> per_path_changes) {
  if (per_path_changes.empty()) throw std::invalid_argument("err_div: need at least one path");
  const std::size_t n = per_path_changes.front().size();
  Lattice mean(grid);
  std::vector<double> col(per_path_changes.size());
  const double inv = 1.0 / static_cast<double>(per_path_changes.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p = 0; p < col.size(); ++p) col[p] = per_path_changes[p][k];
    mean[k] = pairwise_sum(col) * inv;
  }
  return err_div(grid, mean);
}

// ------------------------------------------------------ multi-symplectic ---

Lattice pair_m(const FieldState& a, const FieldState& b) {
  // <a, M b> = -a_H . b_E + a_E . b_H
  Lattice out(a.grid);
  for (std::size_t n = 0; n < out.size(); ++n) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += a.z[c + 3][n] * b.z[c][n] - a.z[c][n] * b.z[c + 3][n];
    out[n] = s;
  }
  return out;
}

Lattice pair_k(Axis p, const FieldState& a, const FieldState& b) {
  // a . R_p b for the H triple and the E triple.
  Lattice out(a.grid);
  for (std::size_t n = 0; n < out.size(); ++n) {
    double s = 0.0;
    for (std::size_t o : {std::size_t{0}, std::size_t{3}}) {
      const double a1 = a.z[o][n], a2 = a.z[o + 1][n], a3 = a.z[o + 2][n];
      const double b1 = b.z[o][n], b2 = b.z[o + 1][n], b3 = b.z[o + 2][n];
      switch (p) {
        case Axis::x: s += a3 * b2 - a2 * b3; break;
        case Axis::y: s += a1 * b3 - a3 * b1; break;
        case Axis::z: s += a2 * b1 - a1 * b2; break;
      }
    }
    out[n] = s;
  }
  return out;
}

TwoFormSample two_form(const FieldState& u, const FieldState& v) {
  TwoFormSample t;
  t.omega = pair_m(u, v) - pair_m(v, u);
  for (Axis p : kAllAxes) {
    const FieldState u1 = shifted(u, p, 1), v1 = shifted(v, p, 1);
    t.kappa[static_cast<std::size_t>(axis_index(p))] = pair_k(p, u, v1) - pair_k(p, v, u1);
  }
  return t;
}

MsympResidual msymp_residual(SchemeId scheme, double dt, const FieldState& u0,
                             const FieldState& u1, const FieldState& v0, const FieldState& v1) {
  if (scheme == SchemeId::method2) {
    throw std::invalid_argument("msymp_residual: use msymp_residual_method2");
  }
  const GridSpec& grid = u0.grid;
  Lattice res(grid), scale(grid);
  if (scheme == SchemeId::method3) {
    const Lattice w0 = two_form(u0, v0).omega, w1 = two_form(u1, v1).omega;
    res += (1.0 / dt) * (w1 - w0);
    accumulate_abs(w0, scale, 1.0 / dt);
    accumulate_abs(w1, scale, 1.0 / dt);
    const TwoFormSample mid = two_form(half_level(u0, u1), half_level(v0, v1));
    for (Axis p : kAllAxes) {
      if (!grid.active(p)) continue;
      const Lattice& k = mid.kappa[static_cast<std::size_t>(axis_index(p))];
      const Lattice km = shifted(k, p, -1);
      const double h = grid.spacing(p);
      res += (1.0 / h) * (k - km);
      accumulate_abs(k, scale, 1.0 / h);
      accumulate_abs(km, scale, 1.0 / h);
    }
  } else {
    const Stencil s = scheme_average(scheme, grid);
    const FieldState g0 = apply_each(s, u0), g1 = apply_each(s, u1);
    const FieldState h0 = apply_each(s, v0), h1 = apply_each(s, v1);
    const Lattice w0 = two_form(g0, h0).omega, w1 = two_form(g1, h1).omega;
    res += (1.0 / dt) * (w1 - w0);
    accumulate_abs(w0, scale, 1.0 / dt);
    accumulate_abs(w1, scale, 1.0 / dt);
    const FieldState um = half_level(u0, u1), vm = half_level(v0, v1);
    for (Axis p : kAllAxes) {
      if (!grid.active(p)) continue;
      Stencil face = Stencil::identity();
      for (Axis q : kAllAxes)
        if (q != p && grid.active(q)) face = Stencil::forward_average(q) * face;
      const FieldState fu = apply_each(face, um), fv = apply_each(face, vm);
      const Lattice k = 2.0 * pair_k(p, fu, fv);
      const Lattice kp = shifted(k, p, 1);
      const double h = grid.spacing(p);
      res += (1.0 / h) * (kp - k);
      accumulate_abs(k, scale, 1.0 / h);
      accumulate_abs(kp, scale, 1.0 / h);
    }
  }
  return {res.max_abs(), scale.max_abs()};
}

MsympResidual msymp_residual_method2(double dt, const FieldState& u_prev, const FieldState& u_curr,
                                     const FieldState& u_next, const FieldState& v_prev,
                                     const FieldState& v_curr, const FieldState& v_next) {
  const GridSpec& grid = u_curr.grid;
  Lattice res(grid), scale(grid);
  const Lattice w_lo = pair_m(u_prev, v_curr) - pair_m(v_prev, u_curr);
  const Lattice w_hi = pair_m(u_curr, v_next) - pair_m(v_curr, u_next);
  res += (1.0 / dt) * (w_hi - w_lo);
  accumulate_abs(w_lo, scale, 1.0 / dt);
  accumulate_abs(w_hi, scale, 1.0 / dt);
  const TwoFormSample now = two_form(u_curr, v_curr);
  for (Axis p : kAllAxes) {
    if (!grid.active(p)) continue;
    const Lattice& k = now.kappa[static_cast<std::size_t>(axis_index(p))];
    const Lattice km = shifted(k, p, -1);
    const double h = grid.spacing(p);
    res += (1.0 / h) * (k - km);
    accumulate_abs(k, scale, 1.0 / h);
    accumulate_abs(km, scale, 1.0 / h);
  }
  return {res.max_abs(), scale.max_abs()};
}

// --------------------------------------------------------------- fitting ---

LinearFit fit_slope(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_slope: length mismatch");
  if (t.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 points");
  const double n = static_cast<double>(t.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    tm += t[k];
    ym += y[k];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double dt = t[k] - tm, dy = y[k] - ym;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (!(stt > 0.0)) throw std::invalid_argument("fit_slope: abscissae are all equal");
  LinearFit f;
  f.slope = sty / stt;
  f.intercept = ym - f.slope * tm;
  double ssr = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double r = y[k] - (f.intercept + f.slope * t[k]);
    ssr += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return f;
}

}  // namespace smx
