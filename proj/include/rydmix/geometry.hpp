#pragma once

// Cigar-shaped cloud: truncated Gaussian longitudinal density, Gaussian beam
// expansion, averaged microwave receiving cross section and the overlap
// ratio between the blue mixing volume and the converted 780 nm mode.

#include <cmath>
#include <numbers>
#include <optional>

#include "rydmix/constants.hpp"
#include "rydmix/error.hpp"
#include "rydmix/numerics.hpp"
#include "rydmix/propagation.hpp"

namespace rydmix {

enum class BeamModel {
  kFormula,   // Rayleigh range from the vacuum-wavelength Gaussian-beam formula
  kMeasured,  // Rayleigh range fitted to measured front and rear radii
};

struct MediumGeometry {
  double length = 21.5e-3;        // L (m)
  double optical_depth = 63.0;    // OD
  double waist_blue = 54e-6;      // w_C (m), at the front end z = 0
  double waist_probe = 56e-6;     // w_P (m), at the front end z = 0
  double lambda_blue = rb87::wavelength_blue_m;
  double lambda_probe = rb87::wavelength_probe_m;

  BeamModel beam_model = BeamModel::kFormula;
  std::optional<double> rear_radius_blue;   // measured r_C(L), used by kMeasured
  std::optional<double> rear_radius_probe;  // measured r_P(L), used by kMeasured

  // Probe transition data entering the peak-density normalization.
  double probe_linewidth = constants::two_pi * rb87::d2_linewidth_hz;  // Gamma (rad/s)
  double probe_dipole = rb87::dipole_p_ea0 * constants::ea0;           // |d_21| (C m)
  double probe_omega = constants::two_pi * rb87::freq_p_hz;            // omega_P (rad/s)

  /// 1/e^2 half width of the density profile, fixed at 2L/3.
  double density_width() const { return 2.0 * length / 3.0; }

  void validate() const {
    for (double v : {length, optical_depth, waist_blue, waist_probe, lambda_blue, lambda_probe}) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("geometry: lengths, waists and OD must be > 0");
    }
    if (beam_model == BeamModel::kMeasured) {
      if (!rear_radius_blue || !rear_radius_probe) {
        throw ValidationError("geometry: measured beam model needs both rear radii");
      }
      if (!(*rear_radius_blue > waist_blue) || !(*rear_radius_probe > waist_probe)) {
        throw ValidationError("geometry: measured rear radii must exceed the front waists");
      }
    }
  }
};

inline double rayleigh_range(double waist, double wavelength) {
  return std::numbers::pi * waist * waist / wavelength;
}

/// r(z) = w sqrt(1 + (z/R)^2), R = pi w^2 / lambda.
inline double beam_radius(double z, double waist, double wavelength) {
  if (!(waist > 0.0) || !(wavelength > 0.0)) throw ValidationError("beam_radius: waist and wavelength must be > 0");
  const double x = z / rayleigh_range(waist, wavelength);
  return waist * std::sqrt(1.0 + x * x);
}

namespace detail {

inline double radius_with_model(double z, double waist, double wavelength, const MediumGeometry& g,
                                const std::optional<double>& rear) {
  if (g.beam_model == BeamModel::kFormula) return beam_radius(z, waist, wavelength);
  const double ratio = *rear / waist;
  const double r_eff = g.length / std::sqrt(ratio * ratio - 1.0);
  const double x = z / r_eff;
  return waist * std::sqrt(1.0 + x * x);
}

inline double gaussian_shape(double z, const MediumGeometry& g) {
  const double x = (z - 0.5 * g.length) / g.density_width();
  return std::exp(-2.0 * x * x);
}

// Closed form of the integral of exp(-2[(z - L/2)/w]^2) over [0, L].
inline double shape_integral(const MediumGeometry& g) {
  const double w = g.density_width();
  return w * std::sqrt(std::numbers::pi / 2.0) * std::erf(std::numbers::sqrt2 * 0.5 * g.length / w);
}

// beta_bar = 2 omega_P |d_21|^2 / (hbar eps0 c)
inline double absorption_coefficient(const MediumGeometry& g) {
  using namespace constants;
  return 2.0 * g.probe_omega * g.probe_dipole * g.probe_dipole / (hbar * vacuum_permittivity * speed_of_light);
}

}  // namespace detail

inline double blue_radius(double z, const MediumGeometry& g) {
  return detail::radius_with_model(z, g.waist_blue, g.lambda_blue, g, g.rear_radius_blue);
}

inline double probe_radius(double z, const MediumGeometry& g) {
  return detail::radius_with_model(z, g.waist_probe, g.lambda_probe, g, g.rear_radius_probe);
}

/// Averaged atomic density N = OD Gamma / (beta_bar L), atoms m^-3.
inline double average_density(const MediumGeometry& g) {
  g.validate();
  return g.optical_depth * g.probe_linewidth / (detail::absorption_coefficient(g) * g.length);
}

/// Peak density n_max of the truncated Gaussian profile, atoms m^-3.
inline double peak_density(const MediumGeometry& g) {
  g.validate();
  return g.optical_depth * g.probe_linewidth / detail::absorption_coefficient(g) / detail::shape_integral(g);
}

/// n(z) = n_max exp(-2[(z - L/2)/w]^2) on [0, L], zero outside.
inline double density_profile(double z, const MediumGeometry& g) {
  if (z < 0.0 || z > g.length) return 0.0;
  return peak_density(g) * detail::gaussian_shape(z, g);
}

struct CrossSection {
  double area = 0.0;         // S_M (m^2)
  double mean_radius = 0.0;  // sqrt(S_M / pi) (m)
};

/// S_M = (1/L) int_0^L pi r_C(z)^2 rho(z)^2 dz with rho = n / N.
inline CrossSection averaged_cross_section(const MediumGeometry& g) {
  g.validate();
  const double mean_shape = detail::shape_integral(g) / g.length;
  auto integrand = [&](double z) {
    const double r = blue_radius(z, g);
    const double rho = detail::gaussian_shape(z, g) / mean_shape;
    return std::numbers::pi * r * r * rho * rho;
  };
  const double area = numerics::adaptive_simpson(integrand, 0.0, g.length, 1e-12) / g.length;
  return {area, std::sqrt(area / std::numbers::pi)};
}

/// delta S_M from independent uncertainties in L and w_C (central differences).
inline double cross_section_uncertainty(const MediumGeometry& g, double d_length, double d_waist) {
  if (d_length < 0.0 || d_waist < 0.0) throw ValidationError("cross_section_uncertainty: uncertainties must be >= 0");
  if (d_length == 0.0 && d_waist == 0.0) return 0.0;
  auto area_vs_length = [&](double l) {
    MediumGeometry h = g;
    h.length = l;
    return averaged_cross_section(h).area;
  };
  auto area_vs_waist = [&](double w) {
    MediumGeometry h = g;
    h.waist_blue = w;
    return averaged_cross_section(h).area;
  };
  const double ds_dl = numerics::central_difference(area_vs_length, g.length, 1e-5);
  const double ds_dw = numerics::central_difference(area_vs_waist, g.waist_blue, 1e-5);
  return std::hypot(ds_dl * d_length, ds_dw * d_waist);
}

/// beta(z) = min(1, r_C(z)^2 / r_P(z)^2).
inline double overlap_ratio(double z, const MediumGeometry& g) {
  const double rc = blue_radius(z, g);
  const double rp = probe_radius(z, g);
  return std::min(1.0, rc * rc / (rp * rp));
}

/// Overlap profile in propagation units, assuming uniform average density so
/// that z_phys = z_labs * L / z_labs(L).
inline OverlapProfile overlap_profile(const MediumGeometry& g, double meters_per_labs) {
  g.validate();
  if (!(meters_per_labs > 0.0)) throw ValidationError("overlap_profile: meters_per_labs must be > 0");
  return OverlapProfile::from_function([g, meters_per_labs](double z) { return overlap_ratio(z * meters_per_labs, g); });
}

/// Physical length of one absorption length when the medium holds `g.optical_depth`.
inline double meters_per_labs(const MediumGeometry& g, double od_per_labs) {
  return g.length * od_per_labs / g.optical_depth;
}

}  // namespace rydmix
