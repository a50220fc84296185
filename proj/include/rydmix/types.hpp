#pragma once

#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace rydmix {

using cplx = std::complex<double>;

inline constexpr int kLevels = 6;
inline constexpr int kVecDim = kLevels * kLevels;

using Matrix6c = Eigen::Matrix<cplx, kLevels, kLevels>;
using Vector6c = Eigen::Matrix<cplx, kLevels, 1>;
using Matrix36c = Eigen::Matrix<cplx, kVecDim, kVecDim>;
using Vector36c = Eigen::Matrix<cplx, kVecDim, 1>;

/// Level labels |1>..|6> map to matrix indices 0..5.
enum Level : int { kGround = 0, kProbeExcited = 1, kRydberg3 = 2, kRydberg4 = 3, kRydberg5 = 4, kLowerExcited = 5 };

/// Complex Rabi frequencies of the six fields, in units of Gamma.
///
/// Transition assignment: P |1>-|2>, S |2>-|3>, A |3>-|4>, M |4>-|5>,
/// C |5>-|6>, L |1>-|6>.
struct FieldSet {
  cplx omega_p{};
  cplx omega_s{};
  cplx omega_a{};
  cplx omega_m{};
  cplx omega_c{};
  cplx omega_l{};

  bool all_finite() const {
    for (const cplx& v : {omega_p, omega_s, omega_a, omega_m, omega_c, omega_l}) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
  }

  friend bool operator==(const FieldSet&, const FieldSet&) = default;
};

/// Detunings and relaxation rates, in units of Gamma.
///
/// Index k of the rydberg arrays refers to level |k+3>.
struct AtomParams {
  double delta_p = 0.0;
  double delta_l = 0.0;
  double delta_3 = 0.0;
  double delta_4 = 0.0;
  double delta_5 = 0.0;
  double gamma = 1.0;         // decay of |2>
  double gamma_prime = 0.17;  // decay of |6>
  std::array<double, 3> rydberg_decay{0.002, 0.002, 0.002};
  std::array<double, 3> rydberg_dephasing{0.0, 0.0, 0.0};

  bool all_finite() const {
    for (double v : {delta_p, delta_l, delta_3, delta_4, delta_5, gamma, gamma_prime}) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : rydberg_decay) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : rydberg_dephasing) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool rates_valid() const {
    if (!(gamma > 0.0) || gamma_prime < 0.0) return false;
    for (double v : rydberg_decay) {
      if (v < 0.0) return false;
    }
    for (double v : rydberg_dephasing) {
      if (v < 0.0) return false;
    }
    return true;
  }

  void set_uniform_rydberg(double decay, double dephasing) {
    rydberg_decay = {decay, decay, decay};
    rydberg_dephasing = {dephasing, dephasing, dephasing};
  }

  friend bool operator==(const AtomParams&, const AtomParams&) = default;
};

/// Column-stacked vectorization: element (i, j) sits at i + 6 j.
constexpr int vec_index(int row, int col) { return row + kLevels * col; }

inline Vector36c vec(const Matrix6c& m) {
  Vector36c v;
  for (int j = 0; j < kLevels; ++j) {
    for (int i = 0; i < kLevels; ++i) v(vec_index(i, j)) = m(i, j);
  }
  return v;
}

inline Matrix6c unvec(const Vector36c& v) {
  Matrix6c m;
  for (int j = 0; j < kLevels; ++j) {
    for (int i = 0; i < kLevels; ++i) m(i, j) = v(vec_index(i, j));
  }
  return m;
}

}  // namespace rydmix
