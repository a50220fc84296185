#pragma once

// Steady-state Maxwell-Bloch propagation of the probe (P), auxiliary
// microwave (A), signal microwave (M) and converted optical (L) fields.
//
// Lengths are measured in absorption lengths l_abs = Gamma' / (4 zeta_L).
// With that unit the propagation equation reads
//   d Omega_Y / dz = 2 i zeta_Y rho_Y
// where zeta_Y is expressed in Gamma per l_abs, so zeta_L = Gamma' / 4.
// A weak resonant two-level probe then has intensity transmission
// exp(-8 zeta_P z / Gamma), which defines the optical depth.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rydmix/constants.hpp"
#include "rydmix/core_model.hpp"
#include "rydmix/error.hpp"
#include "rydmix/types.hpp"

namespace rydmix {

/// Coupling constants in Gamma per absorption length.
struct CouplingConstants {
  double zeta_p = 0.0;
  double zeta_a = 0.0;
  double zeta_m = 0.0;
  double zeta_l = 0.0;

  /// zeta_M / zeta_L, the photon-flux weight of the converted field.
  double b() const { return zeta_m / zeta_l; }

  void validate() const {
    for (double z : {zeta_p, zeta_a, zeta_m, zeta_l}) {
      if (!std::isfinite(z) || z < 0.0) throw ValidationError("coupling constants must be finite and >= 0");
    }
    if (!(zeta_l > 0.0)) throw ValidationError("zeta_l must be > 0 (it defines the length unit)");
  }

  /// Builds the constants from ratios to zeta_L; zeta_L itself is Gamma'/4.
  static CouplingConstants from_ratios(double gamma_prime, double ratio_p, double ratio_a, double ratio_m) {
    const double zl = 0.25 * gamma_prime;
    CouplingConstants c{ratio_p * zl, ratio_a * zl, ratio_m * zl, zl};
    c.validate();
    return c;
  }

  friend bool operator==(const CouplingConstants&, const CouplingConstants&) = default;
};

/// zeta = N |d|^2 omega / (2 hbar eps0 c), SI units (s^-1 m^-1).
inline double coupling_constant(double density, double dipole, double omega) {
  if (!std::isfinite(density) || density < 0.0) throw ValidationError("coupling_constant: density must be >= 0");
  if (!(dipole > 0.0) || !std::isfinite(dipole)) throw ValidationError("coupling_constant: dipole must be > 0");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ValidationError("coupling_constant: omega must be > 0");
  using namespace constants;
  return density * dipole * dipole * omega / (2.0 * hbar * vacuum_permittivity * speed_of_light);
}

/// Ratios zeta_Y / zeta_L from the 87Rb dipole and frequency table at equal density.
struct CouplingRatios {
  double p = 0.0;
  double a = 0.0;
  double m = 0.0;

  static CouplingRatios rb87() {
    using namespace rb87;
    using constants::ea0;
    using constants::two_pi;
    const double n = 1.0;
    const double zl = coupling_constant(n, dipole_l_ea0 * ea0, two_pi * freq_l_hz);
    return {coupling_constant(n, dipole_p_ea0 * ea0, two_pi * freq_p_hz) / zl,
            coupling_constant(n, dipole_a_ea0 * ea0, two_pi * freq_a_hz) / zl,
            coupling_constant(n, dipole_m_ea0 * ea0, two_pi * freq_m_hz) / zl};
  }
};

/// Optical depth accumulated per absorption length: 8 zeta_P / Gamma.
inline double optical_depth_per_labs(const CouplingConstants& c, const AtomParams& params) {
  return 8.0 * c.zeta_p / params.gamma;
}

/// Fraction beta(z) in (0, 1] of the converted field inside the mixing volume.
class OverlapProfile {
 public:
  OverlapProfile() : beta_([](double) { return 1.0; }), unity_(true) {}

  static OverlapProfile constant(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("overlap: beta must lie in (0, 1]");
    OverlapProfile p;
    p.beta_ = [beta](double) { return beta; };
    p.unity_ = beta == 1.0;
    return p;
  }

  /// `beta` maps z in absorption lengths to beta(z).
  static OverlapProfile from_function(std::function<double(double)> beta) {
    OverlapProfile p;
    p.beta_ = std::move(beta);
    p.unity_ = false;
    return p;
  }

  double operator()(double z) const {
    const double b = beta_(z);
    if (!(b > 0.0 && b <= 1.0)) {
      throw ValidationError("overlap: beta(" + std::to_string(z) + ") = " + std::to_string(b) + " outside (0, 1]");
    }
    return b;
  }

  bool is_unity() const { return unity_; }

 private:
  std::function<double(double)> beta_;
  bool unity_;
};

struct TraceNode {
  double z = 0.0;  // absorption lengths
  FieldSet fields;
  DensityMatrix rho;
  double dark_probability = 0.0;  // NaN where the dark state is undefined
  double efficiency = 0.0;
};

struct PropagationTrace {
  std::vector<TraceNode> nodes;
  double step = 0.0;
  double od_per_labs = 0.0;
  double max_residual = 0.0;  // worst relative steady-state residual met
  // |eta_max(step) - eta_max(step / 2)| when the self-check ran.
  std::optional<double> refinement_delta;

  std::size_t size() const { return nodes.size(); }
  double optical_depth(std::size_t i) const { return nodes[i].z * od_per_labs; }
};

struct PropagationOptions {
  double z_max = 100.0;  // absorption lengths
  double step = 0.05;    // absorption lengths
  bool self_check = false;
};

struct EfficiencyPeak {
  double eta_max = 0.0;
  double z_star = 0.0;
};

namespace detail {

using FieldState = std::array<cplx, 4>;  // P, A, M, L

inline FieldSet assemble(const FieldSet& fixed, const FieldState& s) {
  FieldSet f = fixed;
  f.omega_p = s[0];
  f.omega_a = s[1];
  f.omega_m = s[2];
  f.omega_l = s[3];
  return f;
}

struct Evaluation {
  FieldState derivative;
  DensityMatrix rho;
  double residual;
};

inline Evaluation evaluate(const FieldSet& fixed, const FieldState& s, const AtomParams& params,
                           const CouplingConstants& c, const OverlapProfile& overlap, double z) {
  const FieldSet f = assemble(fixed, s);
  SteadyStateReport ss;
  try {
    ss = steady_state_report(build_liouvillian(build_hamiltonian(f, params), params));
  } catch (const SolverError& e) {
    std::ostringstream msg;
    msg << "propagation failed at z = " << z << " l_abs: " << e.what();
    throw SolverError(msg.str());
  }
  const cplx i{0.0, 1.0};
  const DensityMatrix& r = ss.rho;
  Evaluation ev{{}, r, ss.residual};
  ev.derivative[0] = 2.0 * i * c.zeta_p * r(kProbeExcited, kGround);
  ev.derivative[1] = 2.0 * i * c.zeta_a * r(kRydberg3, kRydberg4);
  ev.derivative[2] = 2.0 * i * c.zeta_m * r(kRydberg5, kRydberg4);
  cplx source = r(kLowerExcited, kGround);
  if (!overlap.is_unity()) {
    const double beta = overlap(z);
    const cplx two_level = s[3] / cplx{-params.delta_l, -0.5 * params.gamma_prime};
    source = beta * source + (1.0 - beta) * two_level;
  }
  ev.derivative[3] = 2.0 * i * c.zeta_l * source;
  return ev;
}

inline FieldState axpy(const FieldState& x, double h, const FieldState& k) {
  FieldState out;
  for (std::size_t n = 0; n < 4; ++n) out[n] = x[n] + h * k[n];
  return out;
}

inline double efficiency(double b, const FieldState& s, double m0_sq) {
  return m0_sq > 0.0 ? b * std::norm(s[3]) / m0_sq : 0.0;
}

inline double safe_dark_probability(const DensityMatrix& rho, const FieldSet& f) {
  try {
    return dark_state_probability(rho, f);
  } catch (const ValidationError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline PropagationTrace march(const FieldSet& in, const AtomParams& params, const CouplingConstants& c, double z_max,
                              double step, const OverlapProfile& overlap) {
  if (!in.all_finite() || !params.all_finite()) throw ValidationError("propagate: non-finite input");
  if (!params.rates_valid()) throw ValidationError("propagate: invalid rates");
  c.validate();
  if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("propagate: step must be > 0");
  if (!(z_max >= 0.0) || !std::isfinite(z_max)) throw ValidationError("propagate: z_max must be >= 0");

  const long steps = z_max > 0.0 ? static_cast<long>(std::ceil(z_max / step - 1e-9)) : 0;
  const double h = steps > 0 ? z_max / static_cast<double>(steps) : step;
  const double b = c.b();
  const double m0_sq = std::norm(in.omega_m);

  PropagationTrace trace;
  trace.step = h;
  trace.od_per_labs = optical_depth_per_labs(c, params);
  trace.nodes.reserve(static_cast<std::size_t>(steps) + 1);

  FieldState s{in.omega_p, in.omega_a, in.omega_m, in.omega_l};
  for (long n = 0; n <= steps; ++n) {
    const double z = static_cast<double>(n) * h;
    const Evaluation e1 = evaluate(in, s, params, c, overlap, z);
    const FieldSet local = assemble(in, s);
    trace.max_residual = std::max(trace.max_residual, e1.residual);
    trace.nodes.push_back({z, local, e1.rho, safe_dark_probability(e1.rho, local), efficiency(b, s, m0_sq)});
    if (n == steps) break;

    const FieldState& k1 = e1.derivative;
    const FieldState k2 = evaluate(in, axpy(s, 0.5 * h, k1), params, c, overlap, z + 0.5 * h).derivative;
    const FieldState k3 = evaluate(in, axpy(s, 0.5 * h, k2), params, c, overlap, z + 0.5 * h).derivative;
    const FieldState k4 = evaluate(in, axpy(s, h, k3), params, c, overlap, z + h).derivative;
    for (std::size_t q = 0; q < 4; ++q) s[q] += (h / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
  }
  return trace;
}

inline EfficiencyPeak peak_of(const PropagationTrace& trace) {
  EfficiencyPeak best;
  for (const TraceNode& n : trace.nodes) {
    if (n.efficiency > best.eta_max) best = {n.efficiency, n.z};
  }
  return best;
}

}  // namespace detail

/// Propagation with the converted field partially leaving the mixing volume.
///
/// Omega_L obeys dOmega_L/dz = 2 i zeta_L [beta rho_61 + (1 - beta) Omega_L / (-Delta_L - i Gamma'/2)].
inline PropagationTrace propagate_with_overlap(const FieldSet& fields_in, const AtomParams& params,
                                               const CouplingConstants& couplings, const PropagationOptions& opts,
                                               const OverlapProfile& overlap) {
  PropagationTrace trace = detail::march(fields_in, params, couplings, opts.z_max, opts.step, overlap);
  if (opts.self_check && opts.z_max > 0.0) {
    const PropagationTrace fine =
        detail::march(fields_in, params, couplings, opts.z_max, 0.5 * trace.step, overlap);
    trace.refinement_delta = std::abs(detail::peak_of(trace).eta_max - detail::peak_of(fine).eta_max);
  }
  return trace;
}

/// Propagation with the local steady state recomputed at every evaluation point.
/// Omega_S and Omega_C stay at their input values.
inline PropagationTrace propagate(const FieldSet& fields_in, const AtomParams& params,
                                  const CouplingConstants& couplings, const PropagationOptions& opts) {
  return propagate_with_overlap(fields_in, params, couplings, opts, OverlapProfile{});
}

inline EfficiencyPeak max_efficiency(const PropagationTrace& trace) { return detail::peak_of(trace); }

/// Global maximum of eta(z) on [0, z_max] and its location.
inline EfficiencyPeak max_efficiency(const FieldSet& fields_in, const AtomParams& params,
                                     const CouplingConstants& couplings, const PropagationOptions& opts) {
  return detail::peak_of(propagate(fields_in, params, couplings, opts));
}

}  // namespace rydmix
