#pragma once

// Small numerical toolkit shared by the physics modules.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "rydmix/error.hpp"

namespace rydmix::numerics {

namespace detail {

template <class F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                       int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
///
/// The interval is first split into `initial_panels` pieces so that narrow
/// features are not missed by the first coarse estimate. The tolerance is
/// relative to a coarse estimate of the magnitude of the integral.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double rel_tol = 1e-6, int initial_panels = 16,
                        int max_depth = 40) {
  if (a == b) return 0.0;
  const double width = (b - a) / initial_panels;
  std::vector<double> xs(2 * initial_panels + 1);
  std::vector<double> fs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = a + 0.5 * width * static_cast<double>(i);
    fs[i] = f(xs[i]);
  }
  double coarse_abs = 0.0;
  std::vector<double> wholes(initial_panels);
  for (int p = 0; p < initial_panels; ++p) {
    wholes[p] = width / 6.0 * (fs[2 * p] + 4.0 * fs[2 * p + 1] + fs[2 * p + 2]);
    coarse_abs += width / 6.0 * (std::abs(fs[2 * p]) + 4.0 * std::abs(fs[2 * p + 1]) + std::abs(fs[2 * p + 2]));
  }
  const double tol = rel_tol * std::max(coarse_abs, std::numeric_limits<double>::min());
  double total = 0.0;
  for (int p = 0; p < initial_panels; ++p) {
    total += detail::simpson_recurse(f, xs[2 * p], xs[2 * p + 2], fs[2 * p], fs[2 * p + 1], fs[2 * p + 2], wholes[p],
                                     tol / initial_panels, max_depth);
  }
  return total;
}

/// Central finite difference with a relative step.
template <class F>
double central_difference(const F& f, double x, double rel_step = 1e-6) {
  const double h = rel_step * std::max(std::abs(x), 1e-300);
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead minimization with standard coefficients.
template <class F>
SimplexResult nelder_mead(const F& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& initial_step,
                          double f_tol = 1e-14, int max_iter = 4000) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1](i) += initial_step(i);
  for (int i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  std::vector<int> order(n + 1);
  SimplexResult res;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[n - 1];
    if (std::abs(vals[worst] - vals[best]) <= f_tol * (std::abs(vals[best]) + f_tol)) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[order[i]];
    centroid /= n;

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = f(reflected);
    if (fr < vals[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(contracted);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = f(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::MatrixXd covariance;  // (J^T J)^-1 scaled by the residual variance
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) with forward-difference Jacobian.
///
/// `residuals(x)` returns the residual vector. Convergence is declared when
/// the relative parameter step falls below `step_tol`.
template <class R>
LeastSquaresResult levenberg_marquardt(const R& residuals, Eigen::VectorXd x, double step_tol = 1e-8,
                                       int max_iter = 200) {
  const int n = static_cast<int>(x.size());
  LeastSquaresResult res;
  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  Eigen::MatrixXd jac(r.size(), n);

  auto jacobian = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& r0) {
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd xp = at;
      const double h = 1e-7 * std::max(std::abs(at(j)), 1e-8);
      xp(j) += h;
      jac.col(j) = (residuals(xp) - r0) / h;
    }
  };

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    jacobian(x, r);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    const double diag_max = jtj.diagonal().cwiseAbs().maxCoeff();
    if (!(diag_max > 0.0) || !std::isfinite(diag_max)) {
      res.rank_deficient = true;
      break;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> rank_probe(jtj);
    rank_probe.setThreshold(1e-12);
    if (rank_probe.rank() < n) {
      res.rank_deficient = true;
      break;
    }

    bool accepted = false;
    Eigen::VectorXd step;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal();
      step = -a.ldlt().solve(g);
      const Eigen::VectorXd trial = x + step;
      const Eigen::VectorXd rt = residuals(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct <= cost) {
        x = trial;
        r = rt;
        cost = ct;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    const double rel_step = step.norm() / std::max(x.norm(), 1e-300);
    if (rel_step < step_tol || (accepted && cost == 0.0)) {
      res.converged = true;
      break;
    }
    if (!accepted) {
      // No descent direction improves the cost; we sit at a minimum to
      // working precision.
      res.converged = rel_step < 1e-4;
      break;
    }
  }

  res.x = x;
  res.residual_norm = std::sqrt(cost);
  jacobian(x, r);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const int dof = std::max<int>(1, static_cast<int>(r.size()) - n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible()) {
    res.covariance = lu.inverse() * (cost / dof);
  } else {
    res.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    res.rank_deficient = true;
  }
  return res;
}

}  // namespace rydmix::numerics
