#pragma once

// Single-atom model of the six-level ladder: Hamiltonian, Lindblad
// superoperator, steady states and the approximate dark state.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "rydmix/error.hpp"
#include "rydmix/types.hpp"

namespace rydmix {

/// Physical (Hermitian, unit-trace, positive semidefinite) 6x6 density matrix.
class DensityMatrix {
 public:
  static constexpr double kHermiticityTol = 1e-10;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenvalueFloor = -1e-8;

  DensityMatrix() : rho_(Matrix6c::Zero()) { rho_(kGround, kGround) = 1.0; }

  /// Validates the invariants and throws ValidationError when one fails.
  static DensityMatrix checked(const Matrix6c& rho) {
    std::string why;
    if (!is_physical(rho, &why)) throw ValidationError("density matrix is not physical: " + why);
    return DensityMatrix(rho);
  }

  static DensityMatrix pure(int level) {
    Matrix6c m = Matrix6c::Zero();
    m(level, level) = 1.0;
    return DensityMatrix(m);
  }

  static DensityMatrix pure(const Vector6c& psi) { return DensityMatrix(psi * psi.adjoint()); }

  static bool is_physical(const Matrix6c& rho, std::string* why = nullptr) {
    auto fail = [&](const char* msg) {
      if (why) *why = msg;
      return false;
    };
    if (!rho.allFinite()) return fail("non-finite entries");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermiticityTol) return fail("not Hermitian");
    if (std::abs(rho.trace() - 1.0) > kTraceTol) return fail("trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Matrix6c> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kEigenvalueFloor) return fail("negative eigenvalue");
    return true;
  }

  const Matrix6c& matrix() const { return rho_; }
  cplx operator()(int i, int j) const { return rho_(i, j); }
  double population(int level) const { return rho_(level, level).real(); }

 private:
  explicit DensityMatrix(const Matrix6c& m) : rho_(m) {}
  Matrix6c rho_;
};

/// Unit-norm 6-component state.
struct StateVector {
  Vector6c amplitudes;
};

/// Generator of d vec(rho)/dt acting on the column-stacked vectorization.
struct Liouvillian {
  Matrix36c matrix = Matrix36c::Zero();

  Matrix6c apply(const Matrix6c& rho) const { return unvec(matrix * vec(rho)); }

  /// Maximum absolute row sum.
  double norm_inf() const { return matrix.cwiseAbs().rowwise().sum().maxCoeff(); }
};

namespace detail {

// Adds coeff * vec(A rho B) to the superoperator.
inline void add_sandwich(Matrix36c& out, const Matrix6c& a, const Matrix6c& b, cplx coeff) {
  for (int i = 0; i < kLevels; ++i) {
    for (int k = 0; k < kLevels; ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      for (int l = 0; l < kLevels; ++l) {
        for (int j = 0; j < kLevels; ++j) {
          const cplx blj = b(l, j);
          if (blj == cplx{}) continue;
          out(vec_index(i, j), vec_index(k, l)) += coeff * aik * blj;
        }
      }
    }
  }
}

inline Matrix6c projector(int level) {
  Matrix6c p = Matrix6c::Zero();
  p(level, level) = 1.0;
  return p;
}

// Spontaneous decay from `upper` to `lower` at `rate`.
inline void add_decay(Matrix36c& out, int upper, int lower, double rate) {
  if (rate == 0.0) return;
  Matrix6c jump = Matrix6c::Zero();
  jump(lower, upper) = 1.0;
  const Matrix6c number = projector(upper);
  const Matrix6c id = Matrix6c::Identity();
  add_sandwich(out, jump, jump.adjoint(), rate);
  add_sandwich(out, number, id, -0.5 * rate);
  add_sandwich(out, id, number, -0.5 * rate);
}

// -rate (P rho + rho P - 2 P rho P)
inline void add_dephasing(Matrix36c& out, int level, double rate) {
  if (rate == 0.0) return;
  const Matrix6c p = projector(level);
  const Matrix6c id = Matrix6c::Identity();
  add_sandwich(out, p, id, -rate);
  add_sandwich(out, id, p, -rate);
  add_sandwich(out, p, p, 2.0 * rate);
}

}  // namespace detail

/// H / hbar in units of Gamma, in the frame rotating with all six fields.
inline Matrix6c build_hamiltonian(const FieldSet& fields, const AtomParams& params) {
  if (!fields.all_finite()) throw ValidationError("build_hamiltonian: non-finite Rabi frequency");
  if (!params.all_finite()) throw ValidationError("build_hamiltonian: non-finite detuning or rate");

  Matrix6c h = Matrix6c::Zero();
  h(kProbeExcited, kProbeExcited) = -params.delta_p;
  h(kRydberg3, kRydberg3) = -params.delta_3;
  h(kRydberg4, kRydberg4) = -params.delta_4;
  h(kRydberg5, kRydberg5) = -params.delta_5;
  h(kLowerExcited, kLowerExcited) = -params.delta_l;

  auto couple = [&h](int upper, int lower, cplx omega) {
    h(upper, lower) += -omega;
    h(lower, upper) += -std::conj(omega);
  };
  couple(kProbeExcited, kGround, fields.omega_p);   // sigma_21
  couple(kRydberg3, kProbeExcited, fields.omega_s);  // sigma_32
  couple(kRydberg3, kRydberg4, fields.omega_a);      // sigma_34
  couple(kRydberg5, kRydberg4, fields.omega_m);      // sigma_54
  couple(kRydberg5, kLowerExcited, fields.omega_c);  // sigma_56
  couple(kLowerExcited, kGround, fields.omega_l);    // sigma_61
  return h;
}

/// Full generator -i[H, .] + L_Gamma + L_deph.
inline Liouvillian build_liouvillian(const Matrix6c& hamiltonian, const AtomParams& params) {
  if (!hamiltonian.allFinite()) throw ValidationError("build_liouvillian: non-finite Hamiltonian");
  const double scale = std::max(1.0, hamiltonian.cwiseAbs().maxCoeff());
  if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("build_liouvillian: Hamiltonian is not Hermitian");
  }
  if (!params.all_finite() || !params.rates_valid()) {
    throw ValidationError("build_liouvillian: rates must be finite and nonnegative with gamma > 0");
  }

  Liouvillian out;
  const Matrix6c id = Matrix6c::Identity();
  const cplx i{0.0, 1.0};
  detail::add_sandwich(out.matrix, hamiltonian, id, -i);
  detail::add_sandwich(out.matrix, id, hamiltonian, i);

  detail::add_decay(out.matrix, kProbeExcited, kGround, params.gamma);
  detail::add_decay(out.matrix, kRydberg3, kProbeExcited, params.rydberg_decay[0]);
  detail::add_decay(out.matrix, kRydberg4, kGround, params.rydberg_decay[1]);
  detail::add_decay(out.matrix, kRydberg5, kLowerExcited, params.rydberg_decay[2]);
  detail::add_decay(out.matrix, kLowerExcited, kGround, params.gamma_prime);

  detail::add_dephasing(out.matrix, kRydberg3, params.rydberg_dephasing[0]);
  detail::add_dephasing(out.matrix, kRydberg4, params.rydberg_dephasing[1]);
  detail::add_dephasing(out.matrix, kRydberg5, params.rydberg_dephasing[2]);
  return out;
}

struct SteadyStateReport {
  DensityMatrix rho;
  double residual = 0.0;  // ||L vec(rho)||_inf / ||L||_inf
};

/// Unique stationary state of `generator`.
///
/// The population equation for |1><1| is replaced by Tr(rho) = 1 and the
/// resulting square system is solved by partial-pivoting LU.
inline SteadyStateReport steady_state_report(const Liouvillian& generator) {
  const double lnorm = generator.norm_inf();
  if (!std::isfinite(lnorm)) throw SolverError("steady_state: non-finite Liouvillian");

  Matrix36c system = generator.matrix;
  const int trace_row = vec_index(kGround, kGround);
  system.row(trace_row).setZero();
  for (int k = 0; k < kLevels; ++k) system(trace_row, vec_index(k, k)) = 1.0;
  Vector36c rhs = Vector36c::Zero();
  rhs(trace_row) = 1.0;

  Eigen::PartialPivLU<Matrix36c> lu(system);
  // A multi-dimensional null space leaves the bordered system singular.
  // rcond() alone misses exact zero pivots, so look at the pivots too.
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (!(pivots.minCoeff() > 1e-13 * pivots.maxCoeff()) || !(lu.rcond() > 1e-13)) {
    throw SolverError("steady_state: degenerate null space (stationary state not unique)");
  }
  Matrix6c rho = unvec(lu.solve(rhs));
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();

  const double residual = (generator.matrix * vec(rho)).cwiseAbs().maxCoeff();
  const double rel = lnorm > 0.0 ? residual / lnorm : residual;
  if (!(residual <= 1e-10 * lnorm)) {
    throw SolverError("steady_state: residual " + std::to_string(rel) + " exceeds 1e-10 of ||L||");
  }
  std::string why;
  if (!DensityMatrix::is_physical(rho, &why)) throw SolverError("steady_state: unphysical solution (" + why + ")");
  return {DensityMatrix::checked(rho), rel};
}

inline DensityMatrix steady_state(const Liouvillian& generator) { return steady_state_report(generator).rho; }

inline DensityMatrix steady_state(const FieldSet& fields, const AtomParams& params) {
  return steady_state(build_liouvillian(build_hamiltonian(fields, params), params));
}

/// Fixed-step RK4 integration of d vec(rho)/dt = L vec(rho).
///
/// The step is the largest value not exceeding 0.01 (in 1/Gamma) nor
/// 1/||L||_inf that divides t_final into equal pieces.
inline DensityMatrix evolve_to_steady(const Liouvillian& generator, const DensityMatrix& rho0, double t_final) {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ValidationError("evolve_to_steady: t_final must be > 0");
  const double lnorm = generator.norm_inf();
  double max_step = 0.01;
  if (lnorm > 0.0) max_step = std::min(max_step, 1.0 / lnorm);
  const long steps = static_cast<long>(std::ceil(t_final / max_step));
  const double h = t_final / static_cast<double>(steps);

  const Matrix36c& l = generator.matrix;
  Vector36c x = vec(rho0.matrix());
  Vector36c k1, k2, k3, k4;
  for (long n = 0; n < steps; ++n) {
    k1.noalias() = l * x;
    k2.noalias() = l * (x + 0.5 * h * k1);
    k3.noalias() = l * (x + 0.5 * h * k2);
    k4.noalias() = l * (x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  Matrix6c rho = unvec(x);
  const double drift = std::abs(rho.trace() - 1.0);
  if (drift > 1e-6) throw SolverError("evolve_to_steady: trace drift " + std::to_string(drift));
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return DensityMatrix::checked(rho);
}

/// Approximate dark state C (M* S* |1> - M* P |3> + A* P |5>).
inline StateVector dark_state(const FieldSet& f) {
  if (!f.all_finite()) throw ValidationError("dark_state: non-finite field");
  Vector6c d = Vector6c::Zero();
  d(kGround) = std::conj(f.omega_m) * std::conj(f.omega_s);
  d(kRydberg3) = -std::conj(f.omega_m) * f.omega_p;
  d(kRydberg5) = std::conj(f.omega_a) * f.omega_p;
  // 1/C^2 = |A|^2 |P|^2 + |M|^2 (|P|^2 + |S|^2)
  const double inv_c2 = std::norm(f.omega_a) * std::norm(f.omega_p) +
                        std::norm(f.omega_m) * (std::norm(f.omega_p) + std::norm(f.omega_s));
  if (!(inv_c2 > 0.0) || !std::isfinite(inv_c2)) {
    throw ValidationError("dark_state: undefined (all coefficient products vanish)");
  }
  return {d / std::sqrt(inv_c2)};
}

/// Tr[|D><D| rho] with the dark state of the local fields.
inline double dark_state_probability(const DensityMatrix& rho, const FieldSet& fields) {
  const Vector6c d = dark_state(fields).amplitudes;
  const double p = (d.adjoint() * rho.matrix() * d)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace rydmix
