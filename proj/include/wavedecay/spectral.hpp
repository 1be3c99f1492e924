#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavedecay {

/// Domain is fixed to the interval (0, pi) with homogeneous Dirichlet ends.
inline constexpr double kDomainLength = std::numbers::pi;

/// Truncated sine eigenbasis of -d2/dx2 on (0, pi).
///
/// Basis functions e_j(x) = sqrt(2/pi) sin(j x), j = 1..modes, are orthonormal
/// in L2(0, pi) with eigenvalues lambda_j = j^2 (so lambda_1 = 1).  Grid-side
/// quantities live on the interior uniform grid x_m = m pi/(grid+1),
/// m = 1..grid, with quadrature weight pi/(grid+1); that quadrature is exact
/// for products of basis functions whose total frequency stays below
/// 2(grid+1), which is why grid >= 2*modes is required (cubic nonlinearities
/// are then fully dealiased).
struct SpectralBasis {
  int modes = 0;  ///< N, number of retained sine modes
  int grid = 0;   ///< M, number of interior collocation points, M >= 2N

  SpectralBasis(int n_modes, int grid_points) : modes(n_modes), grid(grid_points) {
    if (modes < 1) throw std::invalid_argument("SpectralBasis: modes must be >= 1");
    if (grid < 2 * modes)
      throw std::invalid_argument("SpectralBasis: grid must be >= 2*modes (dealiasing)");
  }

  /// Default dealiasing grid M = 2N.
  explicit SpectralBasis(int n_modes) : SpectralBasis(n_modes, 2 * n_modes) {}

  double eigenvalue(int j) const { return static_cast<double>(j) * static_cast<double>(j); }
  double frequency(int j) const { return static_cast<double>(j); }

  double grid_point(int m) const { return kDomainLength * m / (grid + 1); }
  double quad_weight() const { return kDomainLength / (grid + 1); }

  double basis_value(int j, double x) const {
    return std::sqrt(2.0 / kDomainLength) * std::sin(j * x);
  }

  bool operator==(const SpectralBasis&) const = default;
};

/// Coefficients against the orthonormal sine basis (length = modes).
using ModalField = std::vector<double>;
/// Point values on the interior grid (length = grid).
using GridSamples = std::vector<double>;

/// DST-I synthesis/analysis between modal coefficients and grid samples.
///
/// The basis-value table is cached on construction, so a plan should be reused
/// whenever transforms sit inside a time-stepping loop.
class DstPlan {
 public:
  explicit DstPlan(const SpectralBasis& basis) : basis_(basis) {
    table_.resize(static_cast<std::size_t>(basis.grid) * basis.modes);
    for (int m = 0; m < basis.grid; ++m) {
      const double x = basis.grid_point(m + 1);
      for (int j = 0; j < basis.modes; ++j)
        table_[static_cast<std::size_t>(m) * basis.modes + j] = basis.basis_value(j + 1, x);
    }
  }

  const SpectralBasis& basis() const { return basis_; }

  void to_grid(const ModalField& coeffs, GridSamples& out) const {
    if (static_cast<int>(coeffs.size()) != basis_.modes)
      throw std::invalid_argument("to_grid: modal length does not match basis");
    out.assign(basis_.grid, 0.0);
    for (int m = 0; m < basis_.grid; ++m) {
      const double* row = &table_[static_cast<std::size_t>(m) * basis_.modes];
      double acc = 0.0;
      for (int j = 0; j < basis_.modes; ++j) acc += coeffs[j] * row[j];
      out[m] = acc;
    }
  }

  /// a_j = (pi/(M+1)) sum_m samples(x_m) e_j(x_m)
  void to_modal(const GridSamples& samples, ModalField& out) const {
    if (static_cast<int>(samples.size()) != basis_.grid)
      throw std::invalid_argument("to_modal: grid length does not match basis");
    out.assign(basis_.modes, 0.0);
    for (int m = 0; m < basis_.grid; ++m) {
      const double* row = &table_[static_cast<std::size_t>(m) * basis_.modes];
      const double s = samples[m];
      for (int j = 0; j < basis_.modes; ++j) out[j] += s * row[j];
    }
    const double w = basis_.quad_weight();
    for (int j = 0; j < basis_.modes; ++j) out[j] *= w;
  }

 private:
  SpectralBasis basis_;
  std::vector<double> table_;  // grid x modes
};

inline GridSamples to_grid(const ModalField& coeffs, const SpectralBasis& basis) {
  GridSamples out;
  DstPlan(basis).to_grid(coeffs, out);
  return out;
}

inline ModalField to_modal(const GridSamples& samples, const SpectralBasis& basis) {
  ModalField out;
  DstPlan(basis).to_modal(samples, out);
  return out;
}

/// L2 norm; by Parseval this is the Euclidean norm of the coefficients.
inline double l2_norm(const ModalField& coeffs) {
  double acc = 0.0;
  for (double c : coeffs) acc += c * c;
  return std::sqrt(acc);
}

/// H1 seminorm ||grad u|| = sqrt(sum_j lambda_j c_j^2).
inline double h1_seminorm(const ModalField& coeffs) {
  double acc = 0.0;
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const double freq = static_cast<double>(j + 1);
    acc += freq * freq * coeffs[j] * coeffs[j];
  }
  return std::sqrt(acc);
}

/// Grid-quadrature approximation of the L^p norm (exact for p = 2 on
/// band-limited fields).  The plan overload reuses a cached basis table and
/// caller-owned scratch, for use inside sampling loops.
inline double lp_grid_norm(const DstPlan& plan, const ModalField& coeffs, double exponent,
                           GridSamples& scratch) {
  if (exponent < 1.0) throw std::invalid_argument("lp_grid_norm: exponent must be >= 1");
  plan.to_grid(coeffs, scratch);
  double acc = 0.0;
  for (double v : scratch) acc += std::pow(std::abs(v), exponent);
  return std::pow(plan.basis().quad_weight() * acc, 1.0 / exponent);
}

inline double lp_grid_norm(const ModalField& coeffs, double exponent, const SpectralBasis& basis) {
  GridSamples scratch;
  return lp_grid_norm(DstPlan(basis), coeffs, exponent, scratch);
}

/// A point (u, u_t) of the phase space H1_0 x L2, stored modally.
struct PhaseState {
  ModalField u;  ///< position coefficients
  ModalField v;  ///< velocity coefficients
};

inline PhaseState zero_state(const SpectralBasis& basis) {
  return PhaseState{ModalField(basis.modes, 0.0), ModalField(basis.modes, 0.0)};
}

inline void check_same_size(const PhaseState& a, const PhaseState& b, const char* where) {
  if (a.u.size() != b.u.size() || a.v.size() != b.v.size() || a.u.size() != a.v.size())
    throw std::invalid_argument(std::string(where) + ": basis mismatch between states");
}

/// Phase norm of the high-mode projection: modes 1..cutoff zeroed.
inline double tail_norm(const PhaseState& s, int cutoff) {
  const int n = static_cast<int>(s.u.size());
  if (cutoff < 0 || cutoff > n)
    throw std::invalid_argument("tail_norm: cutoff out of range [0, modes]");
  double acc = 0.0;
  for (int j = cutoff; j < n; ++j) {
    const double freq = static_cast<double>(j + 1);
    acc += freq * freq * s.u[j] * s.u[j] + s.v[j] * s.v[j];
  }
  return std::sqrt(acc);
}

/// Energy norm sqrt(||grad u||^2 + ||u_t||^2); equals tail_norm(s, 0).
inline double phase_norm(const PhaseState& s) { return tail_norm(s, 0); }

/// H1_0 x L2 distance between two states sharing a basis.
inline double phase_distance(const PhaseState& a, const PhaseState& b) {
  check_same_size(a, b, "phase_distance");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.u.size(); ++j) {
    const double freq = static_cast<double>(j + 1);
    const double du = a.u[j] - b.u[j];
    acc += freq * freq * du * du;
  }
  for (std::size_t j = 0; j < a.v.size(); ++j) {
    const double dv = a.v[j] - b.v[j];
    acc += dv * dv;
  }
  return std::sqrt(acc);
}

}  // namespace wavedecay
