#pragma once

// Microwave-dressed four-level EIA spectroscopy (field calibration), photon
// bookkeeping of the conversion experiment, bandwidth fits and the phase
// transfer fidelity.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rydmix/constants.hpp"
#include "rydmix/error.hpp"
#include "rydmix/numerics.hpp"
#include "rydmix/types.hpp"

namespace rydmix {

/// Four-level ladder {|1>, |2>, |5>, |4>} probed on |1>-|2>. All values in rad/s.
///
/// The two-photon detuning of |5> is Delta_5 = Delta_P + coupling_detuning and
/// the three-photon detuning of |4> is Delta_4 = Delta_5 - microwave_detuning,
/// so both track the probe scan.
struct EiaParams {
  double omega_p = 0.0;
  double omega_s = 0.0;
  double omega_m = 0.0;
  double gamma = constants::two_pi * rb87::d2_linewidth_hz;
  double gamma_4 = 0.0;  // dephasing of |4>
  double gamma_5 = 0.0;  // dephasing of |5>
  double decay_4 = 0.0;  // gamma'_4
  double decay_5 = 0.0;  // gamma'_5
  double coupling_detuning = 0.0;
  double microwave_detuning = 0.0;

  cplx d2(double delta_p) const { return {delta_p, -0.5 * gamma}; }
  cplx d4(double delta_p) const {
    return {delta_p + coupling_detuning - microwave_detuning, -(gamma_4 + 0.5 * decay_4)};
  }
  cplx d5(double delta_p) const { return {delta_p + coupling_detuning, -(gamma_5 + 0.5 * decay_5)}; }
};

/// rho_P = Omega_P (d4 d5 - Omega_M^2) / (d2 d4 d5 - d2 Omega_M^2 - d4 Omega_S^2).
inline cplx four_level_polarization(double delta_p, const EiaParams& p) {
  const cplx d2 = p.d2(delta_p);
  const cplx d4 = p.d4(delta_p);
  const cplx d5 = p.d5(delta_p);
  const double m2 = p.omega_m * p.omega_m;
  const double s2 = p.omega_s * p.omega_s;
  const cplx den = d2 * d4 * d5 - d2 * m2 - d4 * s2;
  const double scale = std::abs(d2) * (std::abs(d4 * d5) + m2) + std::abs(d4) * s2;
  if (!(std::abs(den) > 1e-14 * scale) || !std::isfinite(std::abs(den))) {
    throw ValidationError("four_level_polarization: vanishing denominator (unphysical parameter set)");
  }
  return p.omega_p * (d4 * d5 - m2) / den;
}

/// Ordered (detuning, value) samples. Detunings are angular (rad/s) unless a
/// routine states otherwise.
struct Spectrum {
  std::vector<double> detuning;
  std::vector<double> value;

  std::size_t size() const { return detuning.size(); }

  void validate() const {
    if (detuning.size() != value.size()) throw ValidationError("spectrum: column lengths differ");
    for (std::size_t i = 1; i < detuning.size(); ++i) {
      if (!(detuning[i] > detuning[i - 1])) throw ValidationError("spectrum: detunings must be strictly increasing");
    }
  }
};

inline std::vector<double> linear_grid(double start, double stop, std::size_t points) {
  if (points == 0) throw ValidationError("linear_grid: need at least one point");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = points == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return g;
}

/// T_P = exp(-od Im rho_P / Im rho_P^(2-level, resonant)).
inline Spectrum transmission_spectrum(const std::vector<double>& scan, const EiaParams& p, double od) {
  if (!(od >= 0.0) || !std::isfinite(od)) throw ValidationError("transmission_spectrum: od must be >= 0");
  if (!(p.omega_p > 0.0)) throw ValidationError("transmission_spectrum: omega_p must be > 0");
  const double reference = 2.0 * p.omega_p / p.gamma;
  Spectrum s;
  s.detuning = scan;
  s.value.reserve(scan.size());
  for (double d : scan) s.value.push_back(std::exp(-od * four_level_polarization(d, p).imag() / reference));
  s.validate();
  return s;
}

/// Free parameters of the EIA fit, rad/s.
struct CalibrationResult {
  double omega_m = 0.0;
  double gamma_4 = 0.0;
  double gamma_5 = 0.0;
  double residual_norm = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  int iterations = 0;
};

/// Raised when a fit does not converge; carries the best iterate found.
class FitError : public SolverError {
 public:
  FitError(const std::string& what, CalibrationResult best) : SolverError(what), best_(std::move(best)) {}
  const CalibrationResult& best() const { return best_; }

 private:
  CalibrationResult best_;
};

/// Quantities held fixed during the EIA fit.
struct EiaFixed {
  EiaParams base;  // omega_p, omega_s, gamma, decays and detuning offsets are used
  double optical_depth = 1.0;
};

/// Nonlinear least squares over {Omega_M, gamma_4, gamma_5}.
///
/// A simplex search on square-root parameters (which keeps the rates
/// nonnegative) is refined by damped Gauss-Newton until the relative
/// parameter step drops below 1e-8.
inline CalibrationResult fit_eia(const Spectrum& spectrum, const EiaFixed& fixed, const CalibrationResult& init) {
  spectrum.validate();
  if (spectrum.size() < 50) throw ValidationError("fit_eia: need at least 50 spectrum points");
  const double unit = fixed.base.gamma;

  auto params_of = [&](const Eigen::VectorXd& x) {
    EiaParams p = fixed.base;
    p.omega_m = x(0) * x(0) * unit;
    p.gamma_4 = x(1) * x(1) * unit;
    p.gamma_5 = x(2) * x(2) * unit;
    return p;
  };
  auto residuals = [&](const Eigen::VectorXd& x) {
    const Spectrum model = transmission_spectrum(spectrum.detuning, params_of(x), fixed.optical_depth);
    Eigen::VectorXd r(static_cast<Eigen::Index>(spectrum.size()));
    for (std::size_t i = 0; i < spectrum.size(); ++i) r(static_cast<Eigen::Index>(i)) = model.value[i] - spectrum.value[i];
    return r;
  };
  auto cost = [&](const Eigen::VectorXd& x) {
    try {
      return residuals(x).squaredNorm();
    } catch (const ValidationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto to_result = [&](const Eigen::VectorXd& x, double rnorm, int iters) {
    EiaParams p = params_of(x);
    CalibrationResult c;
    c.omega_m = p.omega_m;
    c.gamma_4 = p.gamma_4;
    c.gamma_5 = p.gamma_5;
    c.residual_norm = rnorm;
    c.iterations = iters;
    return c;
  };

  Eigen::VectorXd x0(3);
  x0 << std::sqrt(std::max(init.omega_m, 0.0) / unit), std::sqrt(std::max(init.gamma_4, 0.0) / unit),
      std::sqrt(std::max(init.gamma_5, 0.0) / unit);
  const Eigen::VectorXd step = (0.1 * x0.cwiseAbs()).cwiseMax(0.02);
  const numerics::SimplexResult coarse = numerics::nelder_mead(cost, x0, step, 1e-10, 2000);

  numerics::LeastSquaresResult fine;
  try {
    fine = numerics::levenberg_marquardt(residuals, coarse.x, 1e-8, 200);
  } catch (const ValidationError& e) {
    throw FitError(std::string("fit_eia: ") + e.what(), to_result(coarse.x, std::sqrt(coarse.value), coarse.iterations));
  }
  CalibrationResult out = to_result(fine.x, fine.residual_norm, coarse.iterations + fine.iterations);
  if (fine.rank_deficient) throw FitError("fit_eia: spectrum carries no information on the parameters", out);
  if (!fine.converged) throw FitError("fit_eia: no convergence within the iteration budget", out);

  // Covariance of the physical parameters: p = x^2 unit, dp/dx = 2 x unit.
  Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) jac(i, i) = 2.0 * fine.x(i) * unit;
  out.covariance = jac * fine.covariance * jac.transpose();
  return out;
}

/// Power-to-intensity map I = k P fitted through the origin, used to
/// extrapolate the calibration below the Autler-Townes regime.
struct PowerCalibration {
  double slope = 0.0;         // W m^-2 per unit generator power
  double relative_rms = 0.0;  // rms relative deviation of the calibration points

  double intensity(double power) const { return slope * power; }
};

inline PowerCalibration fit_power_map(const std::vector<std::pair<double, double>>& power_and_intensity) {
  if (power_and_intensity.empty()) throw ValidationError("fit_power_map: no calibration points");
  double num = 0.0;
  double den = 0.0;
  for (const auto& [p, i] : power_and_intensity) {
    num += p * i;
    den += p * p;
  }
  if (!(den > 0.0)) throw ValidationError("fit_power_map: all powers are zero");
  PowerCalibration c{num / den, 0.0};
  double acc = 0.0;
  for (const auto& [p, i] : power_and_intensity) {
    const double rel = i != 0.0 ? (c.intensity(p) - i) / i : 0.0;
    acc += rel * rel;
  }
  c.relative_rms = std::sqrt(acc / static_cast<double>(power_and_intensity.size()));
  return c;
}

struct MicrowaveField {
  double field = 0.0;      // |E| (V/m)
  double intensity = 0.0;  // I_M (W/m^2)
};

/// |E| = hbar Omega_M / |d_45|,  I_M = |E|^2 / 2 sqrt(eps0 / mu0).
inline MicrowaveField microwave_intensity(double omega_m, double dipole) {
  if (omega_m < 0.0 || !std::isfinite(omega_m)) throw ValidationError("microwave_intensity: omega_m must be >= 0");
  if (!(dipole > 0.0)) throw ValidationError("microwave_intensity: dipole must be > 0");
  using namespace constants;
  const double e = hbar * omega_m / dipole;
  return {e, 0.5 * e * e * std::sqrt(vacuum_permittivity / vacuum_permeability)};
}

/// Inverse of microwave_intensity: Omega_M for a given intensity.
inline double rabi_from_intensity(double intensity, double dipole) {
  if (intensity < 0.0) throw ValidationError("rabi_from_intensity: intensity must be >= 0");
  using namespace constants;
  const double e = std::sqrt(2.0 * intensity / std::sqrt(vacuum_permittivity / vacuum_permeability));
  return e * dipole / hbar;
}

/// Mean photon number I_M S_M T / (hbar omega_M); `freq` in Hz.
inline double photon_number(double intensity, double area, double duration, double freq) {
  if (intensity < 0.0 || area < 0.0 || duration < 0.0) throw ValidationError("photon_number: negative input");
  if (!(freq > 0.0)) throw ValidationError("photon_number: frequency must be > 0");
  return intensity * area * duration / (constants::hbar * constants::two_pi * freq);
}

/// eta = (P_L / hbar omega_L) / (I_M S_M / hbar omega_M); frequencies in Hz.
inline double external_efficiency(double power_l, double intensity_m, double area, double freq_l, double freq_m) {
  if (!(intensity_m > 0.0) || !(area > 0.0) || !(freq_l > 0.0) || !(freq_m > 0.0)) {
    throw ValidationError("external_efficiency: denominators must be positive");
  }
  if (power_l < 0.0) throw ValidationError("external_efficiency: optical power must be >= 0");
  return (power_l / freq_l) / (intensity_m * area / freq_m);
}

struct OperatingPoint {
  double power_l = 0.0;      // W
  double intensity_m = 0.0;  // W/m^2
  double area = 0.0;         // m^2
  double freq_l = rb87::freq_l_hz;
  double freq_m = rb87::freq_m_hz;

  double efficiency() const { return external_efficiency(power_l, intensity_m, area, freq_l, freq_m); }
};

/// Absolute uncertainty of eta from independent errors in P_L, S_M and I_M.
inline double efficiency_uncertainty(const OperatingPoint& op, double d_power, double d_area, double d_intensity) {
  if (d_power < 0.0 || d_area < 0.0 || d_intensity < 0.0) {
    throw ValidationError("efficiency_uncertainty: uncertainties must be >= 0");
  }
  const double eta = op.efficiency();
  // eta is linear in P_L and inversely proportional to S_M and I_M.
  const double de_dp = op.power_l > 0.0 ? eta / op.power_l : 1.0 / (op.intensity_m * op.area) * op.freq_m / op.freq_l;
  const double de_ds = -eta / op.area;
  const double de_di = -eta / op.intensity_m;
  return std::sqrt(std::pow(de_dp * d_power, 2) + std::pow(de_ds * d_area, 2) + std::pow(de_di * d_intensity, 2));
}

struct LorentzFit {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;  // same units as the spectrum detuning
  double offset = 0.0;
  double residual_norm = 0.0;

  double peak() const { return amplitude + offset; }
  double fwhm_hz() const { return fwhm / constants::two_pi; }
  double operator()(double x) const {
    const double u = (x - center) / (0.5 * fwhm);
    return amplitude / (1.0 + u * u) + offset;
  }
};

/// Least-squares fit of A / (1 + ((x - x0) / (w/2))^2) + c.
inline LorentzFit lorentz_fit(const Spectrum& s) {
  s.validate();
  if (s.size() < 5) throw ValidationError("lorentz_fit: need at least 5 points");
  const auto [lo_it, hi_it] = std::minmax_element(s.value.begin(), s.value.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw SolverError("lorentz_fit: flat spectrum");
  const std::size_t imax = static_cast<std::size_t>(hi_it - s.value.begin());

  // Work in a centred, unit-scale abscissa for conditioning.
  const double x_mid = 0.5 * (s.detuning.front() + s.detuning.back());
  const double x_scale = 0.5 * (s.detuning.back() - s.detuning.front());
  std::vector<double> u(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) u[i] = (s.detuning[i] - x_mid) / x_scale;

  const double half = lo + 0.5 * (hi - lo);
  std::size_t left = imax;
  std::size_t right = imax;
  while (left > 0 && s.value[left] > half) --left;
  while (right + 1 < s.size() && s.value[right] > half) ++right;
  const double w0 = std::max(u[right] - u[left], 2.0 * (u[1] - u[0]));

  auto model_residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double q = (u[i] - x(1)) / (0.5 * x(2));
      r(static_cast<Eigen::Index>(i)) = x(0) / (1.0 + q * q) + x(3) - s.value[i];
    }
    return r;
  };
  Eigen::VectorXd x0(4);
  x0 << hi - lo, u[imax], w0, lo;
  const numerics::LeastSquaresResult res = numerics::levenberg_marquardt(model_residuals, x0, 1e-12, 500);
  if (!res.converged || res.rank_deficient || !(res.x(2) != 0.0) || !res.x.allFinite()) {
    throw SolverError("lorentz_fit: fit did not converge");
  }
  LorentzFit fit;
  fit.amplitude = res.x(0);
  fit.center = x_mid + res.x(1) * x_scale;
  fit.fwhm = std::abs(res.x(2)) * x_scale;
  fit.offset = res.x(3);
  fit.residual_norm = res.residual_norm;
  return fit;
}

struct BandwidthResult {
  double peak = 0.0;
  double fwhm_hz = 0.0;
};

/// Peak value and FWHM (Hz) of a single-peaked spectrum with angular detunings.
inline BandwidthResult lorentz_fwhm(const Spectrum& s) {
  const LorentzFit f = lorentz_fit(s);
  return {f.peak(), f.fwhm_hz()};
}

/// |int e^{i phi_M(t - t_d)} e^{-i phi_L(t)} dt|^2 / (int 1 dt)^2 over the
/// window where both waveforms are defined, trapezoidal rule.
inline double phase_fidelity(const std::vector<double>& phi_m, const std::vector<double>& phi_l, double sample_period,
                             double delay) {
  if (phi_m.size() != phi_l.size()) throw ValidationError("phase_fidelity: waveform lengths differ");
  if (!(sample_period > 0.0)) throw ValidationError("phase_fidelity: sample period must be > 0");
  if (delay < 0.0) throw ValidationError("phase_fidelity: delay must be >= 0");
  const double shift_real = delay / sample_period;
  const long shift = std::lround(shift_real);
  if (std::abs(shift_real - static_cast<double>(shift)) > 1e-9 * std::max(1.0, shift_real)) {
    throw ValidationError("phase_fidelity: delay must be an integer multiple of the sample period");
  }
  const long n = static_cast<long>(phi_m.size());
  if (n - shift < 2) throw ValidationError("phase_fidelity: delay leaves fewer than two overlapping samples");

  cplx overlap{};
  double norm_m = 0.0;
  double norm_l = 0.0;
  for (long k = shift; k < n; ++k) {
    const double w = (k == shift || k == n - 1) ? 0.5 : 1.0;
    const cplx em = std::polar(1.0, phi_m[static_cast<std::size_t>(k - shift)]);
    const cplx el = std::polar(1.0, -phi_l[static_cast<std::size_t>(k)]);
    overlap += w * em * el;
    norm_m += w * std::norm(em);
    norm_l += w * std::norm(el);
  }
  return std::norm(overlap * sample_period) / (norm_m * sample_period * norm_l * sample_period);
}

struct FidelityScan {
  double delay = 0.0;
  double fidelity = 0.0;
};

/// Delay in [0, max_delay] (sample-period multiples) maximizing the fidelity.
inline FidelityScan phase_fidelity_scan(const std::vector<double>& phi_m, const std::vector<double>& phi_l,
                                        double sample_period, double max_delay) {
  const long max_shift = static_cast<long>(std::floor(max_delay / sample_period + 1e-9));
  FidelityScan best{0.0, -1.0};
  for (long k = 0; k <= max_shift; ++k) {
    const double d = static_cast<double>(k) * sample_period;
    const double f = phase_fidelity(phi_m, phi_l, sample_period, d);
    if (f > best.fidelity) best = {d, f};
  }
  return best;
}

/// Two-column CSV (detuning_hz,value); detunings are converted from rad/s.
inline void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  s.validate();
  out << "detuning_hz,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < s.size(); ++i) out << s.detuning[i] / constants::two_pi << ',' << s.value[i] << '\n';
}

/// Reads the two-column CSV written by write_spectrum_csv. Detunings come
/// back in rad/s.
inline Spectrum read_spectrum_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("spectrum csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "detuning_hz,value") throw ValidationError("spectrum csv: expected header 'detuning_hz,value'");
  Spectrum s;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("spectrum csv: row " + std::to_string(row) + " lacks a comma");
    try {
      std::size_t used = 0;
      const double x = std::stod(line.substr(0, comma), &used);
      const double y = std::stod(line.substr(comma + 1));
      s.detuning.push_back(x * constants::two_pi);
      s.value.push_back(y);
    } catch (const std::exception&) {
      throw ValidationError("spectrum csv: row " + std::to_string(row) + " is not numeric");
    }
  }
  s.validate();
  return s;
}

inline Spectrum read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("spectrum csv: cannot open " + path);
  return read_spectrum_csv(in);
}

}  // namespace rydmix
