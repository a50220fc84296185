#pragma once

// Blackbody microwave background: photon flux through the medium surface and
// the number of background photons converted to the optical mode.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include <math.h>  // boost 1.74 pchip calls unqualified isnan
#include <boost/math/interpolators/pchip.hpp>

#include "rydmix/constants.hpp"
#include "rydmix/error.hpp"
#include "rydmix/numerics.hpp"

namespace rydmix {

/// Efficiency against physical propagation length, sampled on an increasing
/// grid and interpolated by monotone cubic Hermite splines.
class EfficiencyCurve {
 public:
  EfficiencyCurve() = default;

  EfficiencyCurve(std::vector<double> length, std::vector<double> eta) {
    if (length.size() != eta.size()) throw ValidationError("efficiency curve: column lengths differ");
    if (length.size() < 4) throw ValidationError("efficiency curve: need at least 4 samples");
    for (std::size_t i = 1; i < length.size(); ++i) {
      if (!(length[i] > length[i - 1])) throw ValidationError("efficiency curve: lengths must be strictly increasing");
    }
    for (double e : eta) {
      if (!(e >= 0.0) || !std::isfinite(e)) throw ValidationError("efficiency curve: eta must be finite and >= 0");
    }
    lo_ = length.front();
    hi_ = length.back();
    max_ = *std::max_element(eta.begin(), eta.end());
    spline_ = std::make_shared<Spline>(std::move(length), std::move(eta));
  }

  /// Constant curve, handy for bounds.
  static EfficiencyCurve constant(double eta, double lo, double hi) {
    std::vector<double> l;
    std::vector<double> e;
    for (int i = 0; i < 4; ++i) {
      l.push_back(lo + (hi - lo) * i / 3.0);
      e.push_back(eta);
    }
    return {std::move(l), std::move(e)};
  }

  bool empty() const { return !spline_; }
  double min_length() const { return lo_; }
  double max_length() const { return hi_; }
  double max_value() const { return max_; }

  double operator()(double l) const {
    if (!spline_) throw ValidationError("efficiency curve: empty");
    if (l < lo_ || l > hi_) throw ValidationError("efficiency curve: length outside the sampled range");
    return std::max(0.0, (*spline_)(l));
  }

 private:
  using Spline = boost::math::interpolators::pchip<std::vector<double>>;
  std::shared_ptr<Spline> spline_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double max_ = 0.0;
};

struct ThermalScenario {
  double temperature = 300.0;   // K
  double frequency = 36.9e9;    // Hz, band centre
  double bandwidth = 1e6;       // Hz
  double radius = 66e-6;        // m
  double length = 2.1e-2;       // m
  double window = 10e-6;        // s
  EfficiencyCurve eta;          // eta versus propagation length (m)

  double surface_area() const { return 2.0 * std::numbers::pi * radius * radius + 2.0 * std::numbers::pi * radius * length; }
  double theta_min() const { return std::asin(2.0 * radius / length); }

  void validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ValidationError("thermal: temperature must be >= 0");
    if (!(frequency > 0.0)) throw ValidationError("thermal: frequency must be > 0");
    if (!(bandwidth > 0.0)) throw ValidationError("thermal: bandwidth must be > 0");
    if (!(radius > 0.0) || !(length > 0.0)) throw ValidationError("thermal: radius and length must be > 0");
    if (!(radius < 0.5 * length)) throw ValidationError("thermal: radius must be below L/2");
    if (window < 0.0) throw ValidationError("thermal: window must be >= 0");
  }
};

/// Mean thermal occupation 1/(e^{h nu / k T} - 1); zero at T = 0.
inline double thermal_occupation(double nu, double temperature) {
  if (temperature < 0.0) throw ValidationError("thermal_occupation: temperature must be >= 0");
  if (temperature == 0.0) return 0.0;
  const double x = constants::planck * nu / (constants::boltzmann * temperature);
  return 1.0 / std::expm1(x);
}

/// I(nu, T) = (2 h nu^3 / c^2) / (e^{h nu / kT} - 1).
inline double planck_radiance(double nu, double temperature) {
  const double c = constants::speed_of_light;
  return 2.0 * constants::planck * nu * nu * nu / (c * c) * thermal_occupation(nu, temperature);
}

/// Phi = bandwidth (2 nu^2 / c^2) pi A n(nu, T), the hemisphere integral of
/// cos(theta) sin(theta) giving pi. Narrowband: evaluated at band centre.
inline double thermal_photon_flux(const ThermalScenario& s) {
  s.validate();
  if (s.bandwidth / s.frequency >= 1e-3) {
    auto spectral = [&](double nu) {
      const double c = constants::speed_of_light;
      return 2.0 * nu * nu / (c * c) * thermal_occupation(nu, s.temperature);
    };
    const double lo = s.frequency - 0.5 * s.bandwidth;
    return numerics::adaptive_simpson(spectral, lo, lo + s.bandwidth, 1e-10) * std::numbers::pi * s.surface_area();
  }
  const double c = constants::speed_of_light;
  const double per_hz = 2.0 * s.frequency * s.frequency / (c * c) * thermal_occupation(s.frequency, s.temperature);
  return s.bandwidth * per_hz * std::numbers::pi * s.surface_area();
}

/// N_th = Phi T_w / 2.
inline double polarized_photon_count(double flux, double window) {
  if (flux < 0.0 || window < 0.0) throw ValidationError("polarized_photon_count: inputs must be >= 0");
  return 0.5 * flux * window;
}

/// l(theta) = 2r / sin(theta) on the side wall, L through the end caps.
inline double effective_path(double theta, const ThermalScenario& s) {
  if (theta < 0.0 || theta > std::numbers::pi) throw ValidationError("effective_path: theta must be in [0, pi]");
  const double tm = s.theta_min();
  if (theta <= tm || theta >= std::numbers::pi - tm) return s.length;
  return std::min(s.length, 2.0 * s.radius / std::sin(theta));
}

/// S = int_{tmin}^{pi - tmin} eta(l(theta)) (N_th/2) sin(theta) dtheta
///   + 2 eta_max N_th int_0^{tmin} sin(theta) dtheta / (4 pi).
inline double converted_thermal_photons(const ThermalScenario& s) {
  s.validate();
  if (s.eta.empty()) throw ValidationError("converted_thermal_photons: no efficiency curve");
  const double l_lo = 2.0 * s.radius;
  const double slack = 1e-12 * s.length;
  if (s.eta.min_length() > l_lo + slack || s.eta.max_length() < s.length - slack) {
    throw ValidationError("converted_thermal_photons: efficiency curve does not cover [2r, L]");
  }
  auto eta_at = [&](double l) { return s.eta(std::clamp(l, s.eta.min_length(), s.eta.max_length())); };

  const double n_th = polarized_photon_count(thermal_photon_flux(s), s.window);
  const double tm = s.theta_min();
  // Symmetric about pi/2, so integrate one half and double it.
  auto side = [&](double theta) { return eta_at(effective_path(theta, s)) * std::sin(theta); };
  const double side_integral = 2.0 * numerics::adaptive_simpson(side, tm, 0.5 * std::numbers::pi, 1e-6, 64);
  const double cap = 2.0 * s.eta.max_value() * n_th * (1.0 - std::cos(tm)) / (4.0 * std::numbers::pi);
  return 0.5 * n_th * side_integral + cap;
}

}  // namespace rydmix
