#include "smx/noise_field.hpp"

#include <Eigen/Core>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace smx {

namespace {

void check_indices(const SpectralBasis& b, int m, int l) {
  if (b.mode == NoiseMode::time_only) {
    throw std::out_of_range("eigenfunctions are undefined in time_only noise mode");
  }
  if (m < 1 || m > b.trunc_m || l < 1 || l > b.trunc_l) {
    throw std::out_of_range("mode (" + std::to_string(m) + "," + std::to_string(l) +
                            ") outside truncation " + std::to_string(b.trunc_m) + "x" +
                            std::to_string(b.trunc_l));
  }
}

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

SpectralBasis SpectralBasis::make(double lx, double ly, int trunc_m, int trunc_l, NoiseMode mode) {
  if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("noise domain lengths must be > 0");
  if (trunc_m < 1 || trunc_l < 1) throw std::invalid_argument("truncation bounds must be >= 1");
  return SpectralBasis{lx, ly, trunc_m, trunc_l, mode};
}

double SpectralBasis::eta(int m, int l) const {
  if (m < 1 || m > trunc_m || l < 1 || l > trunc_l) {
    throw std::out_of_range("eta index outside truncation");
  }
  const double mm = m, ll = l;
  return 1.0 / (mm * mm * mm + ll * ll * ll);
}

double eigenfunction(const SpectralBasis& basis, int m, int l, double x, double y) {
  check_indices(basis, m, l);
  const double pi = std::numbers::pi;
  return 2.0 / std::sqrt(basis.lx * basis.ly) * std::sin(m * pi * x / basis.lx) *
         std::sin(l * pi * y / basis.ly);
}

double coefficient_magnitude(int m, int l) {
  if (m < 1 || l < 1) throw std::out_of_range("coefficient indices must be >= 1");
  const double mm = m, ll = l;
  return 2.0 * std::sqrt(3.0 / (mm * mm * mm + ll * ll * ll));
}

QTrace trace_q(const SpectralBasis& basis) {
  if (basis.mode == NoiseMode::time_only) return {1.0, true};
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(basis.mode_count()));
  for (int m = 1; m <= basis.trunc_m; ++m)
    for (int l = 1; l <= basis.trunc_l; ++l) terms.push_back(basis.eta(m, l));
  return {pairwise_sum(terms), false};
}

DiscreteTrace discrete_trace(const SpectralBasis& basis, const GridSpec& grid) {
  if (basis.mode != NoiseMode::space_time) {
    throw std::invalid_argument("discrete_trace requires space_time noise");
  }
  const double pi = std::numbers::pi;
  const double norm2 = 4.0 / (basis.lx * basis.ly);
  // e is separable, so the node sums factor into products of 1-D sums.
  std::vector<double> sx2(static_cast<std::size_t>(basis.trunc_m)), dx2(sx2.size());
  std::vector<double> sy2(static_cast<std::size_t>(basis.trunc_l)), dy2(sy2.size());
  for (int m = 1; m <= basis.trunc_m; ++m) {
    double s = 0.0, d = 0.0;
    for (int i = 0; i < grid.nx; ++i) {
      const double v = std::sin(m * pi * grid.x(i) / basis.lx);
      const double vp = std::sin(m * pi * grid.x(i + 1) / basis.lx);
      const double vm = std::sin(m * pi * grid.x(i - 1) / basis.lx);
      const double c = grid.nx > 1 ? (vp - vm) / (2.0 * grid.dx()) : 0.0;
      s += v * v;
      d += c * c;
    }
    sx2[static_cast<std::size_t>(m - 1)] = s;
    dx2[static_cast<std::size_t>(m - 1)] = d;
  }
  for (int l = 1; l <= basis.trunc_l; ++l) {
    double s = 0.0, d = 0.0;
    for (int j = 0; j < grid.ny; ++j) {
      const double v = std::sin(l * pi * grid.y(j) / basis.ly);
      const double vp = std::sin(l * pi * grid.y(j + 1) / basis.ly);
      const double vm = std::sin(l * pi * grid.y(j - 1) / basis.ly);
      const double c = grid.ny > 1 ? (vp - vm) / (2.0 * grid.dy()) : 0.0;
      s += v * v;
      d += c * c;
    }
    sy2[static_cast<std::size_t>(l - 1)] = s;
    dy2[static_cast<std::size_t>(l - 1)] = d;
  }
  std::vector<double> vbar_terms, grad_terms;
  for (int m = 1; m <= basis.trunc_m; ++m) {
    for (int l = 1; l <= basis.trunc_l; ++l) {
      const auto mi = static_cast<std::size_t>(m - 1), li = static_cast<std::size_t>(l - 1);
      const double eta = basis.eta(m, l);
      vbar_terms.push_back(eta * sx2[mi] * sy2[li]);
      grad_terms.push_back(eta * (dx2[mi] * sy2[li] + sx2[mi] * dy2[li]));
    }
  }
  // The field is constant along z, so the z-sum contributes nz * dz = lz.
  const double weight = grid.cell_volume() * grid.nz * norm2;
  const double vbar = weight * pairwise_sum(vbar_terms);
  return {vbar, vbar + weight * pairwise_sum(grad_terms)};
}

// ---------------------------------------------------------------------------

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double uniform_open01(std::uint32_t hi, std::uint32_t lo) {
  // 52 bits: (2^52 - 1/2) 2^-52 is still below 1 in double
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 20) ^ (lo >> 12);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

double inverse_normal_cdf(double u) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

NoiseStream::NoiseStream(std::uint64_t seed, SpectralBasis basis)
    : seed_(seed), basis_(basis) {}

namespace {

Philox4x32::Counter noise_counter(std::uint64_t path, std::uint64_t step, std::uint32_t pair) {
  if (step > 0xFFFFFFFFull) throw std::out_of_range("step index exceeds 32 bits");
  return {pair, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(path),
          static_cast<std::uint32_t>(path >> 32)};
}

Philox4x32::Key noise_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

std::array<double, 2> NoiseStream::normal_pair(std::uint64_t path, std::uint64_t step,
                                               int pair) const {
  if (pair < 0 || 2 * pair >= basis_.mode_count()) throw std::out_of_range("noise mode pair index");
  const auto r = Philox4x32::generate(noise_counter(path, step, static_cast<std::uint32_t>(pair)),
                                      noise_key(seed_));
  return {inverse_normal_cdf(uniform_open01(r[0], r[1])),
          inverse_normal_cdf(uniform_open01(r[2], r[3]))};
}

double NoiseStream::normal(std::uint64_t path, std::uint64_t step, int mode) const {
  if (mode < 0 || mode >= basis_.mode_count()) throw std::out_of_range("noise mode index");
  return normal_pair(path, step, mode / 2)[static_cast<std::size_t>(mode % 2)];
}

void NoiseStream::normals(std::uint64_t path, std::uint64_t step, std::span<double> out) const {
  const auto count = static_cast<std::size_t>(basis_.mode_count());
  if (out.size() != count) throw std::invalid_argument("normals: output size != mode count");
  const Philox4x32::Key key = noise_key(seed_);
  for (std::size_t q = 0; q < count; q += 2) {
    const auto r =
        Philox4x32::generate(noise_counter(path, step, static_cast<std::uint32_t>(q / 2)), key);
    out[q] = inverse_normal_cdf(uniform_open01(r[0], r[1]));
    if (q + 1 < count) out[q + 1] = inverse_normal_cdf(uniform_open01(r[2], r[3]));
  }
}

// ---------------------------------------------------------------------------

IncrementSampler::IncrementSampler(NoiseStream stream, const GridSpec& grid)
    : stream_(stream), grid_(grid) {
  const SpectralBasis& b = stream_.basis();
  if (b.mode == NoiseMode::time_only) return;
  const double pi = std::numbers::pi;
  const auto M = static_cast<std::size_t>(b.trunc_m), L = static_cast<std::size_t>(b.trunc_l);
  sin_x_.resize(static_cast<std::size_t>(grid.nx) * M);
  for (int i = 0; i < grid.nx; ++i)
    for (std::size_t m = 0; m < M; ++m)
      sin_x_[static_cast<std::size_t>(i) * M + m] =
          std::sin(static_cast<double>(m + 1) * pi * grid.x(i) / b.lx);
  sin_y_.resize(L * static_cast<std::size_t>(grid.ny));
  for (std::size_t l = 0; l < L; ++l)
    for (int j = 0; j < grid.ny; ++j)
      sin_y_[l * static_cast<std::size_t>(grid.ny) + static_cast<std::size_t>(j)] =
          std::sin(static_cast<double>(l + 1) * pi * grid.y(j) / b.ly);
  sqrt_eta_.resize(M * L);
  for (int m = 1; m <= b.trunc_m; ++m)
    for (int l = 1; l <= b.trunc_l; ++l)
      sqrt_eta_[static_cast<std::size_t>(m - 1) * L + static_cast<std::size_t>(l - 1)] =
          std::sqrt(b.eta(m, l));
  norm_ = 2.0 / std::sqrt(b.lx * b.ly);
}

Lattice IncrementSampler::synthesize(std::span<const double> coeffs) const {
  const SpectralBasis& b = stream_.basis();
  if (coeffs.size() != static_cast<std::size_t>(b.mode_count())) {
    throw std::invalid_argument("synthesize: coefficient count != mode count");
  }
  Lattice out(grid_);
  if (b.mode == NoiseMode::time_only) {
    out.fill(coeffs[0]);
    return out;
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index M = b.trunc_m, L = b.trunc_l, nx = grid_.nx, ny = grid_.ny;
  RowMat c(M, L);
  for (Eigen::Index q = 0; q < M * L; ++q) {
    c.data()[q] = coeffs[static_cast<std::size_t>(q)] * sqrt_eta_[static_cast<std::size_t>(q)];
  }
  const Eigen::Map<const RowMat> sx(sin_x_.data(), nx, M);
  const Eigen::Map<const RowMat> sy(sin_y_.data(), L, ny);
  // plane(j, i) so that the row-major result is x-fastest.
  const RowMat plane = norm_ * ((sy.transpose() * c.transpose()) * sx.transpose());
  for (int k = 0; k < grid_.nz; ++k) {
    double* dst = out.data() + static_cast<std::size_t>(k) * plane.size();
    std::copy(plane.data(), plane.data() + plane.size(), dst);
  }
  return out;
}

IncrementField IncrementSampler::sample_increment(std::uint64_t path, std::uint64_t n,
                                                  double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be > 0");
  std::vector<double> xi(static_cast<std::size_t>(stream_.basis().mode_count()));
  stream_.normals(path, n, xi);
  const double s = std::sqrt(dt);
  for (double& v : xi) v *= s;
  return {synthesize(xi), n, path, 0};
}

IncrementField IncrementSampler::coarse_from_fine(std::uint64_t path, std::uint64_t n_coarse,
                                                  unsigned ratio, double fine_dt) const {
  if (ratio == 0 || (ratio & (ratio - 1)) != 0) {
    throw std::invalid_argument("coarse_from_fine: ratio must be a power of two");
  }
  if (!(fine_dt > 0.0)) throw std::invalid_argument("coarse_from_fine: fine_dt must be > 0");
  const auto count = static_cast<std::size_t>(stream_.basis().mode_count());
  std::vector<double> sum(count, 0.0), xi(count);
  for (unsigned r = 0; r < ratio; ++r) {
    stream_.normals(path, n_coarse * ratio + r, xi);
    for (std::size_t q = 0; q < count; ++q) sum[q] += xi[q];
  }
  const double s = std::sqrt(fine_dt);
  for (double& v : sum) v *= s;
  unsigned level = 0;
  while ((1u << level) < ratio) ++level;
  return {synthesize(sum), n_coarse, path, level};
}

}  // namespace smx
