#pragma once

// Scenario execution and serialization.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "rydmix/core_model.hpp"
#include "rydmix/geometry.hpp"
#include "rydmix/propagation.hpp"
#include "rydmix/scenario.hpp"
#include "rydmix/spectroscopy.hpp"
#include "rydmix/thermal.hpp"

namespace rydmix {

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  std::string name;
  std::string kind;
  json scenario;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, double>> summary;  // scalars and solver diagnostics
  double wall_seconds = 0.0;

  const Table& table(const std::string& n) const {
    for (const Table& t : tables) {
      if (t.name == n) return t;
    }
    throw ValidationError("result has no table '" + n + "'");
  }

  double value(const std::string& key) const {
    for (const auto& [k, v] : summary) {
      if (k == key) return v;
    }
    throw ValidationError("result has no summary value '" + key + "'");
  }
};

struct RunOptions {
  unsigned workers = 1;
  std::optional<double> step;  // overrides propagation.step
};

namespace detail {

/// Evaluates fn(i) for i in [0, n) on up to `workers` threads. Results are
/// indexed, so the merge order does not depend on scheduling. The error of
/// the lowest failing index is rethrown.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned workers, const F& fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
  return out;
}

struct GridPoint {
  std::size_t index = 0;
  std::vector<double> coords;  // scenario units, one per axis
};

inline std::vector<GridPoint> grid_points(const Scenario& s) {
  std::vector<std::vector<double>> axes;
  for (const SweepAxis& a : s.sweep) axes.push_back(a.values());
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  std::vector<GridPoint> pts(total);
  for (std::size_t i = 0; i < total; ++i) {
    pts[i].index = i;
    std::size_t rem = i;
    pts[i].coords.resize(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      pts[i].coords[k] = axes[k][rem % axes[k].size()];
      rem /= axes[k].size();
    }
  }
  return pts;
}

inline Scenario at_point(const Scenario& s, const GridPoint& p) {
  Scenario local = s;
  for (std::size_t k = 0; k < s.sweep.size(); ++k) apply_param(local, s.sweep[k].param, p.coords[k]);
  return local;
}

inline std::string point_label(const Scenario& s, const GridPoint& p) {
  std::string out = "grid point " + std::to_string(p.index) + " (";
  for (std::size_t k = 0; k < s.sweep.size(); ++k) {
    if (k) out += ", ";
    out += s.sweep[k].param + "=" + fmt::format("{}", p.coords[k]);
  }
  return out + "): ";
}

// Runs fn over the sweep grid, tagging any error with the grid coordinates.
template <class T, class F>
std::vector<T> over_grid(const Scenario& s, unsigned workers, const F& fn) {
  const std::vector<GridPoint> pts = grid_points(s);
  return parallel_map<T>(pts.size(), workers, [&](std::size_t i) {
    try {
      return fn(at_point(s, pts[i]), pts[i]);
    } catch (const ValidationError& e) {
      if (s.sweep.empty()) throw;
      throw ValidationError(point_label(s, pts[i]) + e.what());
    } catch (const SolverError& e) {
      if (s.sweep.empty()) throw;
      throw SolverError(point_label(s, pts[i]) + e.what());
    }
  });
}

inline std::vector<std::string> axis_columns(const Scenario& s) {
  std::vector<std::string> cols;
  for (const SweepAxis& a : s.sweep) cols.push_back(a.param);
  return cols;
}

inline OverlapProfile overlap_for(const Scenario& s, double od_per_labs) {
  switch (s.propagation.overlap) {
    case PropagationBlock::Overlap::kNone: return OverlapProfile{};
    case PropagationBlock::Overlap::kConstant: return OverlapProfile::constant(s.propagation.beta);
    case PropagationBlock::Overlap::kGeometry: return overlap_profile(s.geometry, meters_per_labs(s.geometry, od_per_labs));
  }
  return OverlapProfile{};
}

inline PropagationTrace run_trace(const Scenario& s, const RunOptions& opt) {
  const CouplingConstants c = s.couplings();
  const double od_per_labs = optical_depth_per_labs(c, s.atom);
  PropagationOptions po;
  po.z_max = s.propagation.z_max(od_per_labs);
  po.step = opt.step.value_or(s.propagation.step);
  po.self_check = s.propagation.self_check;
  return propagate_with_overlap(s.fields, s.atom, c, po, overlap_for(s, od_per_labs));
}

inline void run_steady(const Scenario& s, const RunOptions& opt, RunResult& r) {
  struct Point {
    SteadyStateReport report;
    double dark = 0.0;
  };
  const auto pts = over_grid<Point>(s, opt.workers, [](const Scenario& local, const GridPoint&) {
    Point p;
    p.report = steady_state_report(build_liouvillian(build_hamiltonian(local.fields, local.atom), local.atom));
    p.dark = safe_dark_probability(p.report.rho, local.fields);
    return p;
  });
  const auto grid = grid_points(s);
  Table t{"steady", axis_columns(s), {}};
  for (const char* c : {"re_rho21", "im_rho21", "re_rho61", "im_rho61", "re_rho41", "im_rho41", "rho11", "rho22",
                        "rho44", "rho66", "dark_probability", "residual"}) {
    t.columns.push_back(c);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const DensityMatrix& rho = pts[i].report.rho;
    std::vector<double> row = grid[i].coords;
    for (cplx v : {rho(kProbeExcited, kGround), rho(kLowerExcited, kGround), rho(kRydberg4, kGround)}) {
      row.push_back(v.real());
      row.push_back(v.imag());
    }
    for (int k : {kGround, kProbeExcited, kRydberg4, kLowerExcited}) row.push_back(rho(k, k).real());
    row.push_back(pts[i].dark);
    row.push_back(pts[i].report.residual);
    worst = std::max(worst, pts[i].report.residual);
    t.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(t));
  if (s.sweep.empty()) {
    Table m{"rho", {"row", "col", "re", "im"}, {}};
    const DensityMatrix& rho = pts.front().report.rho;
    for (int i = 0; i < kLevels; ++i) {
      for (int j = 0; j < kLevels; ++j) {
        m.rows.push_back({double(i + 1), double(j + 1), rho(i, j).real(), rho(i, j).imag()});
      }
    }
    r.tables.push_back(std::move(m));
  }
  r.summary.push_back({"max_residual", worst});
}

inline void run_propagate(const Scenario& s, const RunOptions& opt, RunResult& r) {
  struct Point {
    EfficiencyPeak peak;
    double od_star = 0.0;
    double eta_end = 0.0;
    double max_residual = 0.0;
    double step = 0.0;
    double refinement = std::numeric_limits<double>::quiet_NaN();
    PropagationTrace trace;
  };
  const bool keep_trace = s.sweep.empty();
  const auto pts = over_grid<Point>(s, opt.workers, [&](const Scenario& local, const GridPoint&) {
    Point p;
    PropagationTrace tr = run_trace(local, opt);
    p.peak = max_efficiency(tr);
    p.od_star = p.peak.z_star * tr.od_per_labs;
    p.eta_end = tr.nodes.back().efficiency;
    p.max_residual = tr.max_residual;
    p.step = tr.step;
    if (tr.refinement_delta) p.refinement = *tr.refinement_delta;
    if (keep_trace) p.trace = std::move(tr);
    return p;
  });

  const auto grid = grid_points(s);
  Table sum{"efficiency", axis_columns(s), {}};
  for (const char* c : {"eta_max", "z_star_labs", "od_star", "eta_end", "max_residual", "step_labs", "refinement_delta"}) {
    sum.columns.push_back(c);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> row = grid[i].coords;
    const Point& p = pts[i];
    for (double v : {p.peak.eta_max, p.peak.z_star, p.od_star, p.eta_end, p.max_residual, p.step, p.refinement}) {
      row.push_back(v);
    }
    worst = std::max(worst, p.max_residual);
    sum.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(sum));
  r.summary.push_back({"max_residual", worst});

  if (keep_trace) {
    const PropagationTrace& tr = pts.front().trace;
    Table t{"trace",
            {"z_labs", "od", "re_omega_p_gamma", "im_omega_p_gamma", "re_omega_a_gamma", "im_omega_a_gamma",
             "re_omega_m_gamma", "im_omega_m_gamma", "re_omega_l_gamma", "im_omega_l_gamma", "dark_probability", "eta"},
            {}};
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const TraceNode& n = tr.nodes[i];
      t.rows.push_back({n.z, tr.optical_depth(i), n.fields.omega_p.real(), n.fields.omega_p.imag(),
                        n.fields.omega_a.real(), n.fields.omega_a.imag(), n.fields.omega_m.real(),
                        n.fields.omega_m.imag(), n.fields.omega_l.real(), n.fields.omega_l.imag(), n.dark_probability,
                        n.efficiency});
    }
    r.tables.push_back(std::move(t));
    const Point& p = pts.front();
    r.summary.push_back({"eta_max", p.peak.eta_max});
    r.summary.push_back({"z_star_labs", p.peak.z_star});
    r.summary.push_back({"od_star", p.od_star});
    r.summary.push_back({"od_per_labs", tr.od_per_labs});
    r.summary.push_back({"step_labs", tr.step});
    r.summary.push_back({"refinement_delta", p.refinement});
  }
}

/// Converted-field efficiency at the end of the medium versus microwave
/// detuning. Detuning the signal shifts |5> and, through energy
/// conservation, the generated field.
inline Spectrum microwave_spectrum(const Scenario& s, const RunOptions& opt, unsigned workers) {
  const ScanBlock& scan = s.spectrum->microwave;
  const std::vector<double> detunings = linear_grid(scan.start, scan.stop, scan.points);
  const std::vector<double> eta = parallel_map<double>(detunings.size(), workers, [&](std::size_t i) {
    Scenario local = s;
    const double d = detunings[i] * s.to_gamma();
    local.atom.delta_5 += d;
    local.atom.delta_l += d;
    return run_trace(local, opt).nodes.back().efficiency;
  });
  Spectrum out;
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    out.detuning.push_back(constants::two_pi * detunings[i] * s.to_gamma() * s.gamma_hz());
    out.value.push_back(eta[i]);
  }
  out.validate();
  return out;
}

inline Spectrum synthesize_eia(const EiaBlock& b, std::uint64_t seed, std::uint64_t stream) {
  std::vector<double> scan = linear_grid(b.scan_hz.start, b.scan_hz.stop, b.scan_hz.points);
  for (double& x : scan) x *= constants::two_pi;
  Spectrum sp = transmission_spectrum(scan, b.params, b.optical_depth);
  if (b.noise > 0.0) {
    std::seed_seq seq{seed, stream};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, b.noise);
    for (double& v : sp.value) v *= 1.0 + gauss(rng);
  }
  return sp;
}

inline void push_spectrum(RunResult& r, const Spectrum& sp, const char* value_name) {
  Table t{"spectrum", {"detuning_hz", value_name}, {}};
  for (std::size_t i = 0; i < sp.size(); ++i) t.rows.push_back({sp.detuning[i] / constants::two_pi, sp.value[i]});
  r.tables.push_back(std::move(t));
}

inline void run_spectrum(const Scenario& s, const RunOptions& opt, RunResult& r) {
  const SpectrumBlock& b = *s.spectrum;
  if (b.type == SpectrumBlock::Type::kEia) {
    push_spectrum(r, synthesize_eia(b.eia, s.seed, 0), "transmission");
    return;
  }
  if (s.sweep.empty()) {
    const Spectrum sp = microwave_spectrum(s, opt, opt.workers);
    push_spectrum(r, sp, "eta");
    const LorentzFit f = lorentz_fit(sp);
    r.summary.push_back({"peak", f.peak()});
    r.summary.push_back({"fwhm_hz", f.fwhm_hz()});
    r.summary.push_back({"center_hz", f.center / constants::two_pi});
    r.summary.push_back({"fit_residual", f.residual_norm});
    return;
  }
  const auto fits = over_grid<LorentzFit>(s, opt.workers, [&](const Scenario& local, const GridPoint&) {
    return lorentz_fit(microwave_spectrum(local, opt, 1));
  });
  const auto grid = grid_points(s);
  Table t{"bandwidth", axis_columns(s), {}};
  for (const char* c : {"peak", "fwhm_hz", "center_hz", "fit_residual"}) t.columns.push_back(c);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    std::vector<double> row = grid[i].coords;
    row.push_back(fits[i].peak());
    row.push_back(fits[i].fwhm_hz());
    row.push_back(fits[i].center / constants::two_pi);
    row.push_back(fits[i].residual_norm);
    t.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(t));
}

inline void run_calibrate(const Scenario& s, const RunOptions& opt, RunResult& r) {
  const CalibrateBlock& b = *s.calibrate;
  const auto fits = parallel_map<CalibrationResult>(b.points.size(), opt.workers, [&](std::size_t i) {
    const CalibrationPoint& p = b.points[i];
    const Spectrum sp = p.synthetic ? synthesize_eia(*p.synthetic, s.seed, i)
                                    : read_spectrum_csv((s.base_dir / *p.spectrum_csv).string());
    try {
      return fit_eia(sp, b.fixed, b.init);
    } catch (const Error& e) {
      throw SolverError("calibration point " + std::to_string(i) + ": " + e.what());
    }
  });
  Table t{"fits",
          {"power", "omega_m_hz", "gamma_4_hz", "gamma_5_hz", "sigma_omega_m_hz", "field_v_per_m", "intensity_w_per_m2",
           "residual_norm"},
          {}};
  std::vector<std::pair<double, double>> map_points;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const CalibrationResult& f = fits[i];
    const MicrowaveField mw = microwave_intensity(f.omega_m, b.dipole);
    t.rows.push_back({b.points[i].power, f.omega_m / constants::two_pi, f.gamma_4 / constants::two_pi,
                      f.gamma_5 / constants::two_pi, std::sqrt(std::max(0.0, f.covariance(0, 0))) / constants::two_pi,
                      mw.field, mw.intensity, f.residual_norm});
    map_points.push_back({b.points[i].power, mw.intensity});
  }
  r.tables.push_back(std::move(t));
  const PowerCalibration map = fit_power_map(map_points);
  r.summary.push_back({"slope_w_per_m2_per_power", map.slope});
  r.summary.push_back({"relative_rms", map.relative_rms});
  if (!b.extrapolate_powers.empty()) {
    Table e{"extrapolation", {"power", "intensity_w_per_m2", "omega_m_hz"}, {}};
    for (double p : b.extrapolate_powers) {
      const double i = map.intensity(p);
      e.rows.push_back({p, i, rabi_from_intensity(i, b.dipole) / constants::two_pi});
    }
    r.tables.push_back(std::move(e));
  }
}

inline void run_geometry(const Scenario& s, const RunOptions& opt, RunResult& r) {
  struct Point {
    CrossSection cs;
    double d_area = 0.0;
    double avg = 0.0;
    double peak = 0.0;
    double beta_end = 0.0;
  };
  const auto pts = over_grid<Point>(s, opt.workers, [](const Scenario& local, const GridPoint&) {
    const MediumGeometry& g = local.geometry;
    Point p;
    p.cs = averaged_cross_section(g);
    p.d_area = cross_section_uncertainty(g, local.d_length_m, local.d_waist_m);
    p.avg = average_density(g);
    p.peak = peak_density(g);
    p.beta_end = overlap_ratio(g.length, g);
    return p;
  });
  const auto grid = grid_points(s);
  Table t{"cross_section", axis_columns(s), {}};
  for (const char* c : {"area_m2", "mean_radius_m", "d_area_m2", "relative_d_area", "average_density_m3",
                        "peak_density_m3", "beta_at_end"}) {
    t.columns.push_back(c);
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point& p = pts[i];
    std::vector<double> row = grid[i].coords;
    for (double v : {p.cs.area, p.cs.mean_radius, p.d_area, p.d_area / p.cs.area, p.avg, p.peak, p.beta_end}) {
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(t));
  if (s.sweep.empty()) {
    const MediumGeometry& g = s.geometry;
    Table prof{"profile", {"z_m", "density_m3", "blue_radius_m", "probe_radius_m", "beta"}, {}};
    for (double z : linear_grid(0.0, g.length, s.profile_points)) {
      prof.rows.push_back({z, density_profile(z, g), blue_radius(z, g), probe_radius(z, g), overlap_ratio(z, g)});
    }
    r.tables.push_back(std::move(prof));
  }
}

/// eta(l) from propagation, with z converted to metres through the geometry.
inline EfficiencyCurve propagated_efficiency(const Scenario& s, double length, double step, const RunOptions& opt) {
  const CouplingConstants c = s.couplings();
  const double od_per_labs = optical_depth_per_labs(c, s.atom);
  const double mpl = meters_per_labs(s.geometry, od_per_labs);
  PropagationOptions po;
  po.z_max = length / mpl * (1.0 + 1e-9);
  po.step = opt.step.value_or(step);
  const PropagationTrace tr = propagate_with_overlap(s.fields, s.atom, c, po, overlap_for(s, od_per_labs));
  std::vector<double> l;
  std::vector<double> eta;
  for (const TraceNode& n : tr.nodes) {
    l.push_back(n.z * mpl);
    eta.push_back(n.efficiency);
  }
  return {std::move(l), std::move(eta)};
}

inline void run_thermal(const Scenario& s, const RunOptions& opt, RunResult& r) {
  ThermalScenario t = s.thermal->scenario;
  if (s.thermal->eta_from_propagation) t.eta = propagated_efficiency(s, t.length, s.thermal->eta_step, opt);
  const double flux = thermal_photon_flux(t);
  const double n_th = polarized_photon_count(flux, t.window);
  const double converted = converted_thermal_photons(t);
  r.summary.push_back({"flux_hz", flux});
  r.summary.push_back({"n_th", n_th});
  r.summary.push_back({"occupation", thermal_occupation(t.frequency, t.temperature)});
  r.summary.push_back({"theta_min_rad", t.theta_min()});
  r.summary.push_back({"eta_at_length", t.eta(std::min(t.length, t.eta.max_length()))});
  r.summary.push_back({"eta_max", t.eta.max_value()});
  r.summary.push_back({"s_photon", converted});
  Table curve{"eta_curve", {"length_m", "eta"}, {}};
  for (double l : linear_grid(t.eta.min_length(), t.eta.max_length(), 201)) curve.rows.push_back({l, t.eta(l)});
  r.tables.push_back(std::move(curve));
}

inline void run_fidelity(const Scenario& s, const RunOptions& opt, RunResult& r) {
  const FidelityBlock& b = *s.fidelity;
  struct Trial {
    double delay = 0.0;
    double fidelity = 0.0;
  };
  const auto trials = parallel_map<Trial>(b.trials, opt.workers, [&](std::size_t k) {
    std::seed_seq seq{s.seed, static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> phi_m(b.samples);
    std::vector<double> phi_l(b.samples);
    for (std::size_t i = 0; i < b.samples; ++i) {
      const double t = static_cast<double>(i) * b.sample_period_s;
      phi_m[i] = b.amplitude_rad * std::sin(constants::two_pi * b.modulation_hz * t);
      const double noise = b.noise_rad > 0.0 ? b.noise_rad * gauss(rng) : 0.0;
      phi_l[i] = b.amplitude_rad * std::sin(constants::two_pi * b.modulation_hz * (t - b.delay_s)) + noise;
    }
    if (b.max_delay_s) {
      const FidelityScan best = phase_fidelity_scan(phi_m, phi_l, b.sample_period_s, *b.max_delay_s);
      return Trial{best.delay, best.fidelity};
    }
    return Trial{b.delay_s, phase_fidelity(phi_m, phi_l, b.sample_period_s, b.delay_s)};
  });
  Table t{"trials", {"trial", "delay_s", "fidelity"}, {}};
  double mean = 0.0;
  double lo = 1.0;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    t.rows.push_back({double(k), trials[k].delay, trials[k].fidelity});
    mean += trials[k].fidelity;
    lo = std::min(lo, trials[k].fidelity);
  }
  r.tables.push_back(std::move(t));
  r.summary.push_back({"mean_fidelity", mean / static_cast<double>(trials.size())});
  r.summary.push_back({"min_fidelity", lo});
}

}  // namespace detail

/// Runs a validated scenario.
inline RunResult run(const Scenario& s, const RunOptions& opt = {}) {
  if (opt.step && !(*opt.step > 0.0)) throw ValidationError("step override must be > 0");
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.name = s.name;
  r.kind = kind_name(s.kind);
  r.scenario = s.echo;
  switch (s.kind) {
    case ScenarioKind::kSteady: detail::run_steady(s, opt, r); break;
    case ScenarioKind::kPropagate:
    case ScenarioKind::kEfficiencyMap: detail::run_propagate(s, opt, r); break;
    case ScenarioKind::kSpectrum: detail::run_spectrum(s, opt, r); break;
    case ScenarioKind::kCalibrate: detail::run_calibrate(s, opt, r); break;
    case ScenarioKind::kGeometry: detail::run_geometry(s, opt, r); break;
    case ScenarioKind::kThermal: detail::run_thermal(s, opt, r); break;
    case ScenarioKind::kFidelity: detail::run_fidelity(s, opt, r); break;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

enum class Format { kCsv, kJson };

namespace detail {

// Shortest representation that reads back to the same double.
inline std::string number_text(double v) { return fmt::format("{}", v); }

inline std::string csv_table(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += number_text(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::string csv_summary(const RunResult& r) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : r.summary) out += k + "," + number_text(v) + "\n";
  return out;
}

inline json number_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline std::string json_text(const RunResult& r) {
  json doc;
  doc["name"] = r.name;
  doc["kind"] = r.kind;
  doc["scenario"] = r.scenario;
  json tables = json::object();
  for (const Table& t : r.tables) {
    json rows = json::array();
    for (const auto& row : t.rows) {
      json jr = json::array();
      for (double v : row) jr.push_back(number_json(v));
      rows.push_back(std::move(jr));
    }
    tables[t.name] = {{"columns", t.columns}, {"rows", std::move(rows)}};
  }
  doc["tables"] = std::move(tables);
  json summary = json::object();
  for (const auto& [k, v] : r.summary) summary[k] = number_json(v);
  doc["summary"] = std::move(summary);
  return doc.dump(2) + "\n";
}

// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace detail

/// Writes the result tables. CSV gives one file per table plus a key,value
/// summary; JSON gives a single document. Wall-clock timing goes to a
/// separate file so the data files stay byte-identical across reruns.
inline std::vector<std::filesystem::path> emit(const RunResult& r, const std::filesystem::path& dir, Format format) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  if (format == Format::kCsv) {
    for (const Table& t : r.tables) {
      if (t.name == "summary") throw Error("table name 'summary' is reserved for the key,value file");
      written.push_back(dir / (r.name + "_" + t.name + ".csv"));
      detail::write_atomic(written.back(), detail::csv_table(t));
    }
    written.push_back(dir / (r.name + "_summary.csv"));
    detail::write_atomic(written.back(), detail::csv_summary(r));
  } else {
    written.push_back(dir / (r.name + ".json"));
    detail::write_atomic(written.back(), detail::json_text(r));
  }
  json timing{{"name", r.name}, {"wall_seconds", r.wall_seconds}};
  written.push_back(dir / (r.name + ".timing.json"));
  detail::write_atomic(written.back(), timing.dump(2) + "\n");
  return written;
}

}  // namespace rydmix
