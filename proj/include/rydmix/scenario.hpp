#pragma once

// Scenario documents (JSON): strict parsing, unit conversion at the boundary
// and sweep-axis bookkeeping.
//
// Units: "units": "gamma" (default) gives Rabi frequencies, detunings and
// rates in units of Gamma. "units": "mhz" gives them as X / 2pi in MHz and
// they are divided by "gamma_mhz" on load. Blocks that describe laboratory
// quantities carry the unit in the key name (_m, _hz, _mhz, _s, _k, _ea0).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rydmix/constants.hpp"
#include "rydmix/error.hpp"
#include "rydmix/geometry.hpp"
#include "rydmix/propagation.hpp"
#include "rydmix/spectroscopy.hpp"
#include "rydmix/thermal.hpp"
#include "rydmix/types.hpp"

namespace rydmix {

using json = nlohmann::json;

enum class ScenarioKind { kSteady, kPropagate, kEfficiencyMap, kSpectrum, kCalibrate, kGeometry, kThermal, kFidelity };

inline const char* kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kSteady: return "steady";
    case ScenarioKind::kPropagate: return "propagate";
    case ScenarioKind::kEfficiencyMap: return "efficiency-map";
    case ScenarioKind::kSpectrum: return "spectrum";
    case ScenarioKind::kCalibrate: return "calibrate";
    case ScenarioKind::kGeometry: return "geometry";
    case ScenarioKind::kThermal: return "thermal";
    case ScenarioKind::kFidelity: return "fidelity";
  }
  return "?";
}

struct SweepAxis {
  std::string param;  // dotted path, e.g. "atom.delta_p"
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 1;

  std::vector<double> values() const { return linear_grid(start, stop, points); }
};

struct PropagationBlock {
  enum class Overlap { kNone, kConstant, kGeometry };
  std::optional<double> z_max_labs;
  std::optional<double> od_max;
  double step = 0.05;
  bool self_check = false;
  Overlap overlap = Overlap::kNone;
  double beta = 1.0;

  double z_max(double od_per_labs) const {
    if (z_max_labs) return *z_max_labs;
    if (od_max) return *od_max / od_per_labs;
    return 100.0;
  }
};

struct ScanBlock {
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 0;
};

/// Synthetic EIA spectrum description. Rates and Rabi frequencies in rad/s.
struct EiaBlock {
  EiaParams params;
  ScanBlock scan_hz;          // probe detuning scan, Hz (X / 2pi)
  double optical_depth = 1.0;
  double noise = 0.0;         // relative multiplicative Gaussian noise
};

struct SpectrumBlock {
  enum class Type { kEia, kMicrowave };
  Type type = Type::kEia;
  EiaBlock eia;
  // Microwave scan: detuning of the signal field in scenario units.
  ScanBlock microwave;
};

struct CalibrationPoint {
  double power = 0.0;
  std::optional<std::string> spectrum_csv;
  std::optional<EiaBlock> synthetic;
};

struct CalibrateBlock {
  EiaFixed fixed;
  CalibrationResult init;
  double dipole = rb87::dipole_m_ea0 * constants::ea0;  // C m
  std::vector<CalibrationPoint> points;
  std::vector<double> extrapolate_powers;
};

struct ThermalBlock {
  ThermalScenario scenario;
  bool eta_from_propagation = true;
  double eta_step = 0.1;  // l_abs, resolution of the propagated eta(l)
};

struct FidelityBlock {
  double amplitude_rad = 0.8;
  double modulation_hz = 1e5;
  double noise_rad = 0.1;
  double sample_period_s = 1e-8;
  std::size_t samples = 2000;
  double delay_s = 0.0;          // delay imposed on the converted waveform
  std::optional<double> max_delay_s;  // scan mode when set
  std::size_t trials = 1;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::kSteady;
  std::string name = "result";
  std::filesystem::path base_dir = ".";
  std::string units = "gamma";
  double gamma_mhz = rb87::d2_linewidth_hz * 1e-6;
  std::uint64_t seed = 0;

  FieldSet fields;
  AtomParams atom;
  CouplingRatios ratios = CouplingRatios::rb87();
  PropagationBlock propagation;
  MediumGeometry geometry;
  double d_length_m = 0.0;
  double d_waist_m = 0.0;
  std::size_t profile_points = 101;

  std::optional<SpectrumBlock> spectrum;
  std::optional<CalibrateBlock> calibrate;
  std::optional<ThermalBlock> thermal;
  std::optional<FidelityBlock> fidelity;

  std::vector<SweepAxis> sweep;
  json echo;

  /// Factor taking scenario-unit frequencies to units of Gamma.
  double to_gamma() const { return units == "mhz" ? 1.0 / gamma_mhz : 1.0; }
  /// Hz (X / 2pi) per unit of Gamma.
  double gamma_hz() const { return gamma_mhz * 1e6; }

  CouplingConstants couplings() const {
    return CouplingConstants::from_ratios(atom.gamma_prime, ratios.p, ratios.a, ratios.m);
  }
};

namespace detail {

// JSON object view that records consumed keys so unknown ones can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ValidationError("scenario " + (path_.empty() ? std::string("<root>") : path_) + ": " + why);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    return as_number(*v, at(key));
  }

  std::optional<double> opt_number(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return as_number(*v, at(key));
  }

  double required_number(const std::string& key) {
    const json* v = raw(key);
    if (!v) fail("missing required key '" + key + "'");
    return as_number(*v, at(key));
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_number_integer() && !v->is_number_unsigned()) fail("'" + key + "' must be an integer");
    const auto n = v->get<long long>();
    if (n < 1) fail("'" + key + "' must be >= 1");
    return static_cast<std::size_t>(n);
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail("'" + key + "' must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_string()) fail("'" + key + "' must be a string");
    return v->get<std::string>();
  }

  cplx complex(const std::string& key, cplx fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (v->is_number()) return {as_number(*v, at(key)), 0.0};
    if (v->is_array() && v->size() == 2) return {as_number((*v)[0], at(key) + "[0]"), as_number((*v)[1], at(key) + "[1]")};
    fail("'" + key + "' must be a number or [re, im]");
  }

  std::array<double, 3> triple(const std::string& key, std::array<double, 3> fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (v->is_number()) {
      const double x = as_number(*v, at(key));
      return {x, x, x};
    }
    if (v->is_array() && v->size() == 3) {
      return {as_number((*v)[0], at(key) + "[0]"), as_number((*v)[1], at(key) + "[1]"),
              as_number((*v)[2], at(key) + "[2]")};
    }
    fail("'" + key + "' must be a number or a 3-element array");
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = raw(key);
    if (!v) return {};
    if (!v->is_array()) fail("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_number((*v)[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::optional<Reader> child(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return Reader(*v, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ValidationError("scenario: unknown key '" + at(it.key()) + "'");
    }
  }

 private:
  double as_number(const json& v, const std::string& where) const {
    if (!v.is_number()) throw ValidationError("scenario " + where + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError("scenario " + where + ": must be finite");
    return x;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline ScenarioKind parse_kind(const std::string& s, const Reader& r) {
  if (s == "steady") return ScenarioKind::kSteady;
  if (s == "propagate") return ScenarioKind::kPropagate;
  if (s == "efficiency-map" || s == "map") return ScenarioKind::kEfficiencyMap;
  if (s == "spectrum") return ScenarioKind::kSpectrum;
  if (s == "calibrate") return ScenarioKind::kCalibrate;
  if (s == "geometry") return ScenarioKind::kGeometry;
  if (s == "thermal") return ScenarioKind::kThermal;
  if (s == "fidelity") return ScenarioKind::kFidelity;
  r.fail("unknown kind '" + s + "'");
}

inline ScanBlock parse_scan(Reader r) {
  ScanBlock s;
  s.start = r.required_number("start");
  s.stop = r.required_number("stop");
  s.points = r.count("points", 101);
  if (s.points > 1 && !(s.stop > s.start)) r.fail("stop must exceed start");
  r.finish();
  return s;
}

inline double mhz_to_rad(double mhz) { return constants::two_pi * 1e6 * mhz; }

// EIA parameters, all given as X / 2pi in MHz.
inline EiaParams parse_eia_params(Reader& r, EiaParams p) {
  p.omega_p = mhz_to_rad(r.number("omega_p_mhz", p.omega_p / mhz_to_rad(1.0)));
  p.omega_s = mhz_to_rad(r.number("omega_s_mhz", p.omega_s / mhz_to_rad(1.0)));
  p.omega_m = mhz_to_rad(r.number("omega_m_mhz", p.omega_m / mhz_to_rad(1.0)));
  p.gamma = mhz_to_rad(r.number("gamma_mhz", p.gamma / mhz_to_rad(1.0)));
  p.gamma_4 = mhz_to_rad(r.number("gamma_4_mhz", p.gamma_4 / mhz_to_rad(1.0)));
  p.gamma_5 = mhz_to_rad(r.number("gamma_5_mhz", p.gamma_5 / mhz_to_rad(1.0)));
  p.decay_4 = mhz_to_rad(r.number("decay_4_mhz", p.decay_4 / mhz_to_rad(1.0)));
  p.decay_5 = mhz_to_rad(r.number("decay_5_mhz", p.decay_5 / mhz_to_rad(1.0)));
  p.coupling_detuning = mhz_to_rad(r.number("coupling_detuning_mhz", p.coupling_detuning / mhz_to_rad(1.0)));
  p.microwave_detuning = mhz_to_rad(r.number("microwave_detuning_mhz", p.microwave_detuning / mhz_to_rad(1.0)));
  if (p.omega_p < 0 || p.omega_s < 0 || p.omega_m < 0) r.fail("Rabi frequencies must be >= 0");
  if (!(p.gamma > 0) || p.gamma_4 < 0 || p.gamma_5 < 0 || p.decay_4 < 0 || p.decay_5 < 0) {
    r.fail("rates must be >= 0 and gamma_mhz > 0");
  }
  return p;
}

inline EiaBlock parse_eia_block(Reader r) {
  EiaBlock b;
  b.params = parse_eia_params(r, b.params);
  b.optical_depth = r.number("optical_depth", 1.0);
  if (b.optical_depth < 0) r.fail("optical_depth must be >= 0");
  b.noise = r.number("noise", 0.0);
  if (b.noise < 0) r.fail("noise must be >= 0");
  auto scan = r.child("scan_mhz");
  if (!scan) r.fail("missing required key 'scan_mhz'");
  b.scan_hz = parse_scan(*scan);
  b.scan_hz.start *= 1e6;
  b.scan_hz.stop *= 1e6;
  r.finish();
  return b;
}

inline void parse_fields(Reader r, Scenario& s) {
  const double k = s.to_gamma();
  s.fields.omega_p = k * r.complex("omega_p", s.fields.omega_p / k);
  s.fields.omega_s = k * r.complex("omega_s", s.fields.omega_s / k);
  s.fields.omega_a = k * r.complex("omega_a", s.fields.omega_a / k);
  s.fields.omega_m = k * r.complex("omega_m", s.fields.omega_m / k);
  s.fields.omega_c = k * r.complex("omega_c", s.fields.omega_c / k);
  s.fields.omega_l = k * r.complex("omega_l", s.fields.omega_l / k);
  r.finish();
}

inline void parse_atom(Reader r, Scenario& s) {
  const double k = s.to_gamma();
  AtomParams& a = s.atom;
  a.delta_p = k * r.number("delta_p", a.delta_p / k);
  a.delta_l = k * r.number("delta_l", a.delta_l / k);
  a.delta_3 = k * r.number("delta_3", a.delta_3 / k);
  a.delta_4 = k * r.number("delta_4", a.delta_4 / k);
  a.delta_5 = k * r.number("delta_5", a.delta_5 / k);
  a.gamma_prime = k * r.number("gamma_prime", a.gamma_prime / k);
  auto decay = r.triple("rydberg_decay", {a.rydberg_decay[0] / k, a.rydberg_decay[1] / k, a.rydberg_decay[2] / k});
  auto deph = r.triple("rydberg_dephasing",
                       {a.rydberg_dephasing[0] / k, a.rydberg_dephasing[1] / k, a.rydberg_dephasing[2] / k});
  for (int i = 0; i < 3; ++i) {
    a.rydberg_decay[i] = k * decay[i];
    a.rydberg_dephasing[i] = k * deph[i];
  }
  if (!a.rates_valid()) r.fail("rates must be >= 0");
  r.finish();
}

inline void parse_coupling(Reader r, Scenario& s) {
  s.ratios.p = r.number("ratio_p", s.ratios.p);
  s.ratios.a = r.number("ratio_a", s.ratios.a);
  s.ratios.m = r.number("b", s.ratios.m);
  if (s.ratios.p < 0 || s.ratios.a < 0 || s.ratios.m < 0) r.fail("coupling ratios must be >= 0");
  r.finish();
}

inline void parse_propagation(Reader r, Scenario& s) {
  PropagationBlock& p = s.propagation;
  p.z_max_labs = r.opt_number("z_max_labs");
  p.od_max = r.opt_number("od_max");
  if (p.z_max_labs && p.od_max) r.fail("give either z_max_labs or od_max, not both");
  if ((p.z_max_labs && *p.z_max_labs < 0) || (p.od_max && *p.od_max < 0)) r.fail("range must be >= 0");
  p.step = r.number("step", p.step);
  if (!(p.step > 0)) r.fail("step must be > 0");
  p.self_check = r.boolean("self_check", p.self_check);
  if (const json* ov = r.raw("overlap")) {
    if (ov->is_null()) {
      p.overlap = PropagationBlock::Overlap::kNone;
    } else if (ov->is_string() && ov->get<std::string>() == "geometry") {
      p.overlap = PropagationBlock::Overlap::kGeometry;
    } else if (ov->is_string() && ov->get<std::string>() == "none") {
      p.overlap = PropagationBlock::Overlap::kNone;
    } else if (ov->is_number()) {
      p.overlap = PropagationBlock::Overlap::kConstant;
      p.beta = ov->get<double>();
      if (!(p.beta > 0 && p.beta <= 1)) r.fail("overlap beta must lie in (0, 1]");
    } else {
      r.fail("overlap must be null, \"none\", \"geometry\" or a number in (0, 1]");
    }
  }
  r.finish();
}

inline void parse_geometry(Reader r, Scenario& s) {
  MediumGeometry& g = s.geometry;
  g.length = r.number("length_m", g.length);
  g.optical_depth = r.number("optical_depth", g.optical_depth);
  g.waist_blue = r.number("waist_blue_m", g.waist_blue);
  g.waist_probe = r.number("waist_probe_m", g.waist_probe);
  g.lambda_blue = r.number("lambda_blue_m", g.lambda_blue);
  g.lambda_probe = r.number("lambda_probe_m", g.lambda_probe);
  const std::string model = r.string("beam_model", "formula");
  if (model == "formula") {
    g.beam_model = BeamModel::kFormula;
  } else if (model == "measured") {
    g.beam_model = BeamModel::kMeasured;
  } else {
    r.fail("beam_model must be \"formula\" or \"measured\"");
  }
  if (auto v = r.opt_number("rear_radius_blue_m")) g.rear_radius_blue = *v;
  if (auto v = r.opt_number("rear_radius_probe_m")) g.rear_radius_probe = *v;
  s.d_length_m = r.number("d_length_m", 0.0);
  s.d_waist_m = r.number("d_waist_m", 0.0);
  if (s.d_length_m < 0 || s.d_waist_m < 0) r.fail("uncertainties must be >= 0");
  s.profile_points = r.count("profile_points", s.profile_points);
  try {
    g.validate();
  } catch (const ValidationError& e) {
    r.fail(e.what());
  }
  r.finish();
}

inline void parse_spectrum(Reader r, Scenario& s) {
  SpectrumBlock b;
  const std::string type = r.string("type", "eia");
  if (type == "eia") {
    b.type = SpectrumBlock::Type::kEia;
    auto e = r.child("eia");
    if (!e) r.fail("eia spectrum needs an 'eia' block");
    b.eia = parse_eia_block(*e);
  } else if (type == "microwave") {
    b.type = SpectrumBlock::Type::kMicrowave;
    auto m = r.child("scan");
    if (!m) r.fail("microwave spectrum needs a 'scan' block (scenario units)");
    b.microwave = parse_scan(*m);
  } else {
    r.fail("type must be \"eia\" or \"microwave\"");
  }
  r.finish();
  s.spectrum = b;
}

inline void parse_calibrate(Reader r, Scenario& s) {
  CalibrateBlock b;
  if (auto f = r.child("fixed")) {
    b.fixed.base = parse_eia_params(*f, b.fixed.base);
    b.fixed.optical_depth = f->number("optical_depth", 1.0);
    f->finish();
  }
  if (auto i = r.child("init")) {
    b.init.omega_m = mhz_to_rad(i->required_number("omega_m_mhz"));
    b.init.gamma_4 = mhz_to_rad(i->number("gamma_4_mhz", 0.1));
    b.init.gamma_5 = mhz_to_rad(i->number("gamma_5_mhz", 0.1));
    i->finish();
  } else {
    r.fail("missing required block 'init'");
  }
  b.dipole = r.number("dipole_ea0", b.dipole / constants::ea0) * constants::ea0;
  if (!(b.dipole > 0)) r.fail("dipole_ea0 must be > 0");
  const json* pts = r.raw("points");
  if (!pts || !pts->is_array() || pts->empty()) r.fail("'points' must be a non-empty array");
  for (std::size_t i = 0; i < pts->size(); ++i) {
    Reader pr((*pts)[i], r.at("points[" + std::to_string(i) + "]"));
    CalibrationPoint c;
    c.power = pr.required_number("power");
    if (!(c.power > 0)) pr.fail("power must be > 0");
    if (pr.has("spectrum_csv")) c.spectrum_csv = pr.string("spectrum_csv", "");
    if (auto syn = pr.child("synthetic")) c.synthetic = parse_eia_block(*syn);
    if (c.spectrum_csv.has_value() == c.synthetic.has_value()) pr.fail("give exactly one of spectrum_csv or synthetic");
    pr.finish();
    b.points.push_back(std::move(c));
  }
  b.extrapolate_powers = r.numbers("extrapolate_powers");
  r.finish();
  s.calibrate = std::move(b);
}

inline void parse_thermal(Reader r, Scenario& s) {
  ThermalBlock b;
  ThermalScenario& t = b.scenario;
  t.temperature = r.number("temperature_k", t.temperature);
  t.frequency = r.number("frequency_hz", t.frequency);
  t.bandwidth = r.number("bandwidth_hz", t.bandwidth);
  t.radius = r.number("radius_m", t.radius);
  t.length = r.number("length_m", t.length);
  t.window = r.number("window_s", t.window);
  b.eta_step = r.number("eta_step_labs", b.eta_step);
  if (!(b.eta_step > 0)) r.fail("eta_step_labs must be > 0");
  if (const json* e = r.raw("eta")) {
    if (e->is_string() && e->get<std::string>() == "propagation") {
      b.eta_from_propagation = true;
    } else if (e->is_object()) {
      Reader er(*e, r.at("eta"));
      std::vector<double> l = er.numbers("length_m");
      std::vector<double> v = er.numbers("eta");
      er.finish();
      try {
        t.eta = EfficiencyCurve(std::move(l), std::move(v));
      } catch (const ValidationError& ex) {
        er.fail(ex.what());
      }
      b.eta_from_propagation = false;
    } else {
      r.fail("eta must be \"propagation\" or {length_m: [...], eta: [...]}");
    }
  }
  try {
    t.validate();
  } catch (const ValidationError& ex) {
    r.fail(ex.what());
  }
  r.finish();
  s.thermal = std::move(b);
}

inline void parse_fidelity(Reader r, Scenario& s) {
  FidelityBlock b;
  b.amplitude_rad = r.number("amplitude_rad", b.amplitude_rad);
  b.modulation_hz = r.number("modulation_hz", b.modulation_hz);
  b.noise_rad = r.number("noise_rad", b.noise_rad);
  b.sample_period_s = r.number("sample_period_s", b.sample_period_s);
  b.samples = r.count("samples", b.samples);
  b.delay_s = r.number("delay_s", b.delay_s);
  b.max_delay_s = r.opt_number("max_delay_s");
  b.trials = r.count("trials", b.trials);
  if (!(b.sample_period_s > 0)) r.fail("sample_period_s must be > 0");
  if (b.noise_rad < 0 || b.delay_s < 0 || (b.max_delay_s && *b.max_delay_s < 0)) {
    r.fail("noise and delays must be >= 0");
  }
  r.finish();
  s.fidelity = b;
}

inline const std::vector<std::string>& sweepable_params() {
  static const std::vector<std::string> names{
      "fields.omega_p",     "fields.omega_s",      "fields.omega_a",          "fields.omega_m",
      "fields.omega_c",     "fields.omega_l",      "atom.delta_p",            "atom.delta_l",
      "atom.delta_3",       "atom.delta_4",        "atom.delta_5",            "atom.gamma_prime",
      "atom.rydberg_decay", "atom.rydberg_dephasing", "coupling.b",           "propagation.z_max_labs",
      "propagation.od_max", "geometry.length_m",   "geometry.optical_depth", "geometry.waist_blue_m"};
  return names;
}

}  // namespace detail

/// Sets a sweepable parameter; `value` is in scenario units.
inline void apply_param(Scenario& s, const std::string& param, double value) {
  const double k = s.to_gamma();
  AtomParams& a = s.atom;
  if (param == "fields.omega_p") s.fields.omega_p = k * value;
  else if (param == "fields.omega_s") s.fields.omega_s = k * value;
  else if (param == "fields.omega_a") s.fields.omega_a = k * value;
  else if (param == "fields.omega_m") s.fields.omega_m = k * value;
  else if (param == "fields.omega_c") s.fields.omega_c = k * value;
  else if (param == "fields.omega_l") s.fields.omega_l = k * value;
  else if (param == "atom.delta_p") a.delta_p = k * value;
  else if (param == "atom.delta_l") a.delta_l = k * value;
  else if (param == "atom.delta_3") a.delta_3 = k * value;
  else if (param == "atom.delta_4") a.delta_4 = k * value;
  else if (param == "atom.delta_5") a.delta_5 = k * value;
  else if (param == "atom.gamma_prime") a.gamma_prime = k * value;
  else if (param == "atom.rydberg_decay") a.rydberg_decay = {k * value, k * value, k * value};
  else if (param == "atom.rydberg_dephasing") a.rydberg_dephasing = {k * value, k * value, k * value};
  else if (param == "coupling.b") s.ratios.m = value;
  else if (param == "propagation.z_max_labs") {
    s.propagation.z_max_labs = value;
    s.propagation.od_max.reset();
  } else if (param == "propagation.od_max") {
    s.propagation.od_max = value;
    s.propagation.z_max_labs.reset();
  } else if (param == "geometry.length_m") s.geometry.length = value;
  else if (param == "geometry.optical_depth") s.geometry.optical_depth = value;
  else if (param == "geometry.waist_blue_m") s.geometry.waist_blue = value;
  else throw ValidationError("sweep: unknown parameter '" + param + "'");
}

/// Parses and validates a scenario document. `base_dir` resolves relative paths.
inline Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir = ".") {
  detail::Reader root(doc, "");
  Scenario s;
  s.echo = doc;
  s.base_dir = base_dir;
  const json* kind = root.raw("kind");
  if (!kind || !kind->is_string()) root.fail("missing required string 'kind'");
  s.kind = detail::parse_kind(kind->get<std::string>(), root);
  s.name = root.string("name", s.name);
  if (s.name.empty() || s.name.find('/') != std::string::npos) root.fail("name must be a plain file stem");
  s.units = root.string("units", s.units);
  if (s.units != "gamma" && s.units != "mhz") root.fail("units must be \"gamma\" or \"mhz\"");
  s.gamma_mhz = root.number("gamma_mhz", s.gamma_mhz);
  if (!(s.gamma_mhz > 0)) root.fail("gamma_mhz must be > 0");
  if (const json* seed = root.raw("seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0)) {
      root.fail("seed must be a nonnegative integer");
    }
    s.seed = seed->get<std::uint64_t>();
  }

  // Defaults for the atom are given in units of Gamma.
  if (auto r = root.child("atom")) detail::parse_atom(*r, s);
  if (auto r = root.child("fields")) detail::parse_fields(*r, s);
  if (auto r = root.child("coupling")) detail::parse_coupling(*r, s);
  if (auto r = root.child("propagation")) detail::parse_propagation(*r, s);
  if (auto r = root.child("geometry")) detail::parse_geometry(*r, s);
  if (auto r = root.child("spectrum")) detail::parse_spectrum(*r, s);
  if (auto r = root.child("calibrate")) detail::parse_calibrate(*r, s);
  if (auto r = root.child("thermal")) detail::parse_thermal(*r, s);
  if (auto r = root.child("fidelity")) detail::parse_fidelity(*r, s);

  if (const json* sw = root.raw("sweep")) {
    if (!sw->is_array()) root.fail("sweep must be an array of axes");
    if (sw->size() > 2) root.fail("at most two sweep axes are supported");
    for (std::size_t i = 0; i < sw->size(); ++i) {
      detail::Reader ar((*sw)[i], "sweep[" + std::to_string(i) + "]");
      SweepAxis axis;
      axis.param = ar.string("param", "");
      const auto& names = detail::sweepable_params();
      if (std::find(names.begin(), names.end(), axis.param) == names.end()) {
        ar.fail("param '" + axis.param + "' does not name a sweepable parameter");
      }
      axis.start = ar.required_number("start");
      axis.stop = ar.required_number("stop");
      axis.points = ar.count("points", 1);
      ar.finish();
      for (const SweepAxis& other : s.sweep) {
        if (other.param == axis.param) ar.fail("parameter swept twice");
      }
      s.sweep.push_back(axis);
    }
  }
  root.finish();

  switch (s.kind) {
    case ScenarioKind::kEfficiencyMap:
      if (s.sweep.empty()) root.fail("efficiency-map needs at least one sweep axis");
      break;
    case ScenarioKind::kSpectrum:
      if (!s.spectrum) root.fail("spectrum scenario needs a 'spectrum' block");
      if (s.spectrum->type == SpectrumBlock::Type::kEia && !s.sweep.empty()) {
        root.fail("eia spectra do not support sweeps");
      }
      break;
    case ScenarioKind::kCalibrate:
      if (!s.calibrate) root.fail("calibrate scenario needs a 'calibrate' block");
      break;
    case ScenarioKind::kThermal:
      if (!s.thermal) root.fail("thermal scenario needs a 'thermal' block");
      break;
    case ScenarioKind::kFidelity:
      if (!s.fidelity) root.fail("fidelity scenario needs a 'fidelity' block");
      break;
    default:
      break;
  }
  if ((s.kind == ScenarioKind::kCalibrate || s.kind == ScenarioKind::kFidelity || s.kind == ScenarioKind::kThermal) &&
      !s.sweep.empty()) {
    root.fail(std::string(kind_name(s.kind)) + " scenarios do not support sweeps");
  }
  if (!s.fields.all_finite()) root.fail("fields must be finite");
  return s;
}

inline Scenario parse_scenario_text(const std::string& text, const std::filesystem::path& base_dir = ".") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scenario: parse error: ") + e.what());
  }
  return parse_scenario(doc, base_dir);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace rydmix
