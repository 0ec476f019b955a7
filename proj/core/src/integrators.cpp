#include "smx/integrators.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace smx {

class ImplicitSystem {
 public:
  using Matrix = Eigen::SparseMatrix<double>;
  Matrix lhs;
  Matrix rhs;
  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
};

namespace {

constexpr Component H1 = Component::h1, H2 = Component::h2, H3 = Component::h3;
constexpr Component E1 = Component::e1, E2 = Component::e2, E3 = Component::e3;

std::string grid_text(const GridSpec& g) {
  std::ostringstream os;
  os << g.nx << "x" << g.ny << "x" << g.nz;
  return os.str();
}

char axis_char(Axis a) { return "xyz"[axis_index(a)]; }

ImplicitSystem::Matrix assemble(const BlockOperator& op, const GridSpec& grid) {
  const std::size_t n = grid.node_count();
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      for (const Tap& t : op.block(r, c).taps()) {
        for (int k = 0; k < grid.nz; ++k)
          for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
              const std::size_t row = static_cast<std::size_t>(r) * n + grid.index(i, j, k);
              const std::size_t col =
                  static_cast<std::size_t>(c) * n + grid.index(i + t.di, j + t.dj, k + t.dk);
              trip.emplace_back(static_cast<int>(row), static_cast<int>(col), t.w);
            }
      }
    }
  }
  ImplicitSystem::Matrix m(static_cast<Eigen::Index>(6 * n), static_cast<Eigen::Index>(6 * n));
  m.setFromTriplets(trip.begin(), trip.end());
  m.prune(0.0);
  m.makeCompressed();
  return m;
}

std::vector<SparseEntry> entries_of(const ImplicitSystem::Matrix& m) {
  std::vector<SparseEntry> out;
  for (int col = 0; col < m.outerSize(); ++col)
    for (ImplicitSystem::Matrix::InnerIterator it(m, col); it; ++it)
      out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()),
                     it.value()});
  std::sort(out.begin(), out.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return out;
}

Eigen::VectorXd pack(const FieldState& s) {
  const std::size_t n = s.grid.node_count();
  Eigen::VectorXd v(static_cast<Eigen::Index>(6 * n));
  for (std::size_t c = 0; c < 6; ++c)
    std::copy(s.z[c].data(), s.z[c].data() + n, v.data() + c * n);
  return v;
}

void unpack(const Eigen::VectorXd& v, FieldState& s) {
  const std::size_t n = s.grid.node_count();
  for (std::size_t c = 0; c < 6; ++c)
    std::copy(v.data() + c * n, v.data() + (c + 1) * n, s.z[c].data());
}

void check_inputs(const StepperPlan& plan, const FieldState& state, const IncrementField* dW) {
  if (!(state.grid == plan.grid)) throw std::invalid_argument("state grid differs from plan grid");
  if (dW != nullptr && !dW->values.matches(plan.grid)) {
    throw std::invalid_argument("increment shape differs from plan grid");
  }
  if (!state.all_finite()) throw StepError("non-finite input state", 0.0);
}

FieldState implicit_step(const StepperPlan& plan, const FieldState& state, const Lattice* dW) {
  if (!plan.system) throw std::invalid_argument("plan has no implicit system");
  const ImplicitSystem& sys = *plan.system;
  const std::size_t n = plan.grid.node_count();
  Eigen::VectorXd b = sys.rhs * pack(state);
  if (dW != nullptr) {
    for (std::size_t c = 0; c < 6; ++c) {
      const double w = plan.coupling.c[c];
      if (w == 0.0) continue;
      Eigen::Map<const Eigen::VectorXd> noise(dW->data(), static_cast<Eigen::Index>(n));
      b.segment(static_cast<Eigen::Index>(c * n), static_cast<Eigen::Index>(n)) += w * noise;
    }
  }
  Eigen::VectorXd x = sys.lu.solve(b);
  const double bnorm = b.lpNorm<Eigen::Infinity>();
  auto rel_residual = [&](const Eigen::VectorXd& r) {
    const double rn = r.lpNorm<Eigen::Infinity>();
    return bnorm > 0.0 ? rn / bnorm : rn;
  };
  Eigen::VectorXd r = b - sys.lhs * x;
  double res = rel_residual(r);
  if (!(res <= plan.solver_tol)) {
    x += sys.lu.solve(r);
    r = b - sys.lhs * x;
    res = rel_residual(r);
  }
  if (!(res <= plan.solver_tol) || !x.allFinite()) {
    std::ostringstream os;
    os << scheme_name(plan.scheme) << " linear solve missed tolerance " << plan.solver_tol
       << " (relative residual " << res << ")";
    throw StepError(os.str(), res);
  }
  FieldState out(plan.grid, state.time + plan.dt);
  unpack(x, out);
  return out;
}

}  // namespace

const char* scheme_name(SchemeId s) {
  switch (s) {
    case SchemeId::method1: return "method1";
    case SchemeId::method2: return "method2";
    case SchemeId::method3: return "method3";
  }
  return "unknown";
}

SchemeId parse_scheme(std::string_view text) {
  if (text == "method1" || text == "I" || text == "1") return SchemeId::method1;
  if (text == "method2" || text == "II" || text == "2") return SchemeId::method2;
  if (text == "method3" || text == "III" || text == "3") return SchemeId::method3;
  throw std::invalid_argument("unknown scheme '" + std::string(text) +
                              "' (expected method1, method2 or method3)");
}

// ---------------------------------------------------------------------------

void BlockOperator::apply_add(const FieldState& in, FieldState& out, double scale) const {
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c)
      if (!blocks_[r][c].taps().empty()) blocks_[r][c].apply_add(in.z[c], out.z[r], scale);
}

FieldState BlockOperator::apply(const FieldState& in) const {
  FieldState out(in.grid, in.time);
  apply_add(in, out);
  return out;
}

std::array<std::array<std::complex<double>, 6>, 6> BlockOperator::symbol(
    const std::array<double, 3>& theta) const {
  std::array<std::array<std::complex<double>, 6>, 6> out{};
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c)
      for (const Tap& t : blocks_[r][c].taps())
        out[r][c] += t.w * std::polar(1.0, theta[0] * t.di + theta[1] * t.dj + theta[2] * t.dk);
  return out;
}

BlockOperator operator+(const BlockOperator& a, const BlockOperator& b) {
  BlockOperator out;
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) out.blocks_[r][c] = a.blocks_[r][c] + b.blocks_[r][c];
  return out;
}

BlockOperator operator*(double s, const BlockOperator& a) {
  BlockOperator out;
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) out.blocks_[r][c] = s * a.blocks_[r][c];
  return out;
}

Stencil scheme_average(SchemeId scheme, const GridSpec& grid) {
  Stencil s = Stencil::identity();
  if (scheme != SchemeId::method1) return s;
  for (Axis a : kAllAxes)
    if (grid.active(a)) s = Stencil::forward_average(a) * s;
  return s;
}

Stencil scheme_derivative(SchemeId scheme, const GridSpec& grid, Axis axis) {
  if (!grid.active(axis)) return Stencil();
  if (scheme != SchemeId::method1) return Stencil::centered_diff(axis, grid.spacing(axis));
  Stencil d = Stencil::forward_diff(axis, grid.spacing(axis));
  for (Axis q : kAllAxes)
    if (q != axis && grid.active(q)) d = Stencil::forward_average(q) * d;
  return d;
}

BlockOperator curl_operator(SchemeId scheme, const GridSpec& grid) {
  const Stencil dx = scheme_derivative(scheme, grid, Axis::x);
  const Stencil dy = scheme_derivative(scheme, grid, Axis::y);
  const Stencil dz = scheme_derivative(scheme, grid, Axis::z);
  BlockOperator a;
  // dH/dt = -curl E
  a.block(H1, E2) = dz;
  a.block(H1, E3) = -1.0 * dy;
  a.block(H2, E3) = dx;
  a.block(H2, E1) = -1.0 * dz;
  a.block(H3, E1) = dy;
  a.block(H3, E2) = -1.0 * dx;
  // dE/dt = curl H
  a.block(E1, H3) = dy;
  a.block(E1, H2) = -1.0 * dz;
  a.block(E2, H1) = dz;
  a.block(E2, H3) = -1.0 * dx;
  a.block(E3, H2) = dx;
  a.block(E3, H1) = -1.0 * dy;
  return a;
}

BlockOperator mass_operator(SchemeId scheme, const GridSpec& grid) {
  const Stencil s = scheme_average(scheme, grid);
  BlockOperator m;
  for (Component c : kAllComponents) m.block(c, c) = s;
  return m;
}

double implicit_symbol_min_singular_value(SchemeId scheme, const GridSpec& grid, double dt) {
  if (scheme == SchemeId::method2) return 1.0;
  const BlockOperator lhs = mass_operator(scheme, grid) + (-0.5 * dt) * curl_operator(scheme, grid);
  using Mat6 = Eigen::Matrix<std::complex<double>, 6, 6>;
  double smin = std::numeric_limits<double>::infinity();
  const double two_pi = 2.0 * std::numbers::pi;
  for (int qz = 0; qz < grid.nz; ++qz)
    for (int qy = 0; qy < grid.ny; ++qy)
      for (int qx = 0; qx < grid.nx; ++qx) {
        const auto sym = lhs.symbol({two_pi * qx / grid.nx, two_pi * qy / grid.ny,
                                     two_pi * qz / grid.nz});
        Mat6 m;
        for (int r = 0; r < 6; ++r)
          for (int c = 0; c < 6; ++c)
            m(r, c) = sym[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        const Eigen::JacobiSVD<Mat6> svd(m);
        smin = std::min(smin, svd.singularValues()(5));
      }
  return smin;
}

double leapfrog_dt_heuristic(const GridSpec& grid) {
  double hmin = std::numeric_limits<double>::infinity();
  for (Axis a : kAllAxes)
    if (grid.active(a)) hmin = std::min(hmin, grid.spacing(a));
  const int d = grid.active_axis_count();
  return d == 0 ? std::numeric_limits<double>::infinity() : hmin / std::sqrt(double(d));
}

StepperPlan plan(SchemeId scheme, const GridSpec& grid, double dt, const CouplingVector& coupling,
                 double solver_tol) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("plan: dt must be > 0");
  if (!(solver_tol > 0.0)) throw std::invalid_argument("plan: solver_tol must be > 0");
  StepperPlan p{scheme, grid, dt, coupling, solver_tol, nullptr, {}};
  if (scheme == SchemeId::method2) {
    const double bound = leapfrog_dt_heuristic(grid);
    if (dt > bound) {
      std::ostringstream os;
      os << "method2: dt=" << dt << " exceeds leapfrog heuristic min(h)/sqrt(d)=" << bound
         << "; the run may be unstable";
      p.warnings.push_back(os.str());
    }
    return p;
  }

  const double smin = implicit_symbol_min_singular_value(scheme, grid, dt);
  if (!(smin > 1e-10)) {
    std::ostringstream os;
    os << scheme_name(scheme) << " implicit operator is singular on the " << grid_text(grid)
       << " periodic grid";
    std::string even;
    for (Axis a : kAllAxes)
      if (grid.active(a) && grid.count(a) % 2 == 0) even += axis_char(a);
    if (!even.empty()) os << " (even node count on active axis " << even << ")";
    if (scheme == SchemeId::method1) os << "; use odd node counts on every active axis";
    throw PlanningError(os.str());
  }

  auto sys = std::make_shared<ImplicitSystem>();
  const BlockOperator mass = mass_operator(scheme, grid);
  const BlockOperator curl = curl_operator(scheme, grid);
  sys->lhs = assemble(mass + (-0.5 * dt) * curl, grid);
  sys->rhs = assemble(mass + (0.5 * dt) * curl, grid);
  sys->lu.analyzePattern(sys->lhs);
  sys->lu.factorize(sys->lhs);
  if (sys->lu.info() != Eigen::Success) {
    throw PlanningError(std::string(scheme_name(scheme)) + " factorization failed on the " +
                        grid_text(grid) + " grid: " + sys->lu.lastErrorMessage());
  }
  p.system = std::move(sys);
  return p;
}

std::vector<SparseEntry> lhs_entries(const StepperPlan& plan) {
  return plan.system ? entries_of(plan.system->lhs) : std::vector<SparseEntry>{};
}

std::vector<SparseEntry> rhs_entries(const StepperPlan& plan) {
  return plan.system ? entries_of(plan.system->rhs) : std::vector<SparseEntry>{};
}

// ---------------------------------------------------------------------------

FieldState step_method1(const StepperPlan& plan, const FieldState& state, const IncrementField& dW) {
  if (plan.scheme != SchemeId::method1) throw std::invalid_argument("step_method1: wrong plan");
  check_inputs(plan, state, &dW);
  return implicit_step(plan, state, &dW.values);
}

FieldState step_method3(const StepperPlan& plan, const FieldState& state, const IncrementField& dW) {
  if (plan.scheme != SchemeId::method3) throw std::invalid_argument("step_method3: wrong plan");
  check_inputs(plan, state, &dW);
  return implicit_step(plan, state, &dW.values);
}

FieldState step_one_layer(const StepperPlan& plan, const FieldState& state,
                          const IncrementField& dW) {
  return plan.scheme == SchemeId::method1 ? step_method1(plan, state, dW)
                                          : step_method3(plan, state, dW);
}

TwoLayerState bootstrap_method2(const StepperPlan& plan_method3, const FieldState& state0,
                                const IncrementField& dW0) {
  return {state0, step_method3(plan_method3, state0, dW0)};
}

FieldState leapfrog_update(const GridSpec& grid, const CouplingVector& coupling, double dt,
                           const FieldState& prev, const FieldState& curr, const Lattice* w_diff) {
  FieldState out = prev;
  curl_operator(SchemeId::method2, grid).apply_add(curr, out, 2.0 * dt);
  if (w_diff != nullptr) {
    for (std::size_t c = 0; c < 6; ++c)
      if (coupling.c[c] != 0.0) out.z[c].add_scaled(coupling.c[c], *w_diff);
  }
  out.time = curr.time + dt;
  return out;
}

FieldState step_method2(const StepperPlan& plan, const TwoLayerState& layers,
                        const IncrementField& dW_prev, const IncrementField& dW_curr) {
  if (plan.scheme != SchemeId::method2) throw std::invalid_argument("step_method2: wrong plan");
  check_inputs(plan, layers.prev, &dW_prev);
  check_inputs(plan, layers.curr, &dW_curr);
  const Lattice w_diff = dW_prev.values + dW_curr.values;
  return leapfrog_update(plan.grid, plan.coupling, plan.dt, layers.prev, layers.curr, &w_diff);
}

FieldState step_tangent(const StepperPlan& plan, const FieldState& u) {
  if (plan.scheme == SchemeId::method2) {
    throw std::invalid_argument("step_tangent: method2 needs two layers");
  }
  check_inputs(plan, u, nullptr);
  return implicit_step(plan, u, nullptr);
}

FieldState step_tangent(const StepperPlan& plan, const TwoLayerState& u) {
  if (plan.scheme != SchemeId::method2) {
    throw std::invalid_argument("step_tangent: two-layer form is for method2");
  }
  check_inputs(plan, u.prev, nullptr);
  check_inputs(plan, u.curr, nullptr);
  return leapfrog_update(plan.grid, plan.coupling, plan.dt, u.prev, u.curr, nullptr);
}

}  // namespace smx
