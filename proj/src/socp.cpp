#include "tbmimo/socp.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace tbmimo {

namespace {

struct ConeWork {
  const SocpCone* cone;
  double radius2;   // rho^2 for cap cones, unused for fit cones
  bool uses_t;
  Eigen::MatrixXd AtA;  // precomputed A^T A
};

// g = s^2 - ||r||^2 for the cone's bound s (t or rho); must stay positive.
// The epigraph bound must itself stay positive or the barrier would accept
// the mirror nappe ||r|| <= -t, where the objective is unbounded below.
double cone_gap(const ConeWork& c, const Eigen::VectorXd& x, double t) {
  if (c.uses_t && !(t > 0.0)) return -1.0;
  const double rn2 = (c.cone->A * x - c.cone->b).squaredNorm();
  const double s2 = c.uses_t ? t * t : c.radius2;
  return s2 - rn2;
}

}  // namespace

SocpSolution solve_minimax_socp(const MinimaxSocp& prob, const SocpOptions& opts) {
  if (prob.fit.empty())
    throw std::invalid_argument("solve_minimax_socp: no fit cones");
  if (prob.cap.size() != static_cast<size_t>(prob.cap_radius.size()))
    throw std::invalid_argument("solve_minimax_socp: cap_radius size mismatch");

  const int n = static_cast<int>(prob.fit[0].A.cols());
  std::vector<ConeWork> cones;
  cones.reserve(prob.fit.size() + prob.cap.size());
  for (const auto& c : prob.fit) {
    if (c.A.cols() != n) throw std::invalid_argument("solve_minimax_socp: mixed widths");
    cones.push_back({&c, 0.0, true, c.A.transpose() * c.A});
  }
  for (size_t j = 0; j < prob.cap.size(); ++j) {
    const auto& c = prob.cap[j];
    if (c.A.cols() != n) throw std::invalid_argument("solve_minimax_socp: mixed widths");
    const double rho = prob.cap_radius(static_cast<Eigen::Index>(j));
    if (!(rho > 0.0))
      throw std::invalid_argument("solve_minimax_socp: cap radius must be positive");
    if (c.b.norm() >= rho)
      throw std::runtime_error(
          "solve_minimax_socp: infeasible, origin violates a cap cone (radius too small)");
    cones.push_back({&c, rho * rho, false, c.A.transpose() * c.A});
  }

  // strictly feasible start: x = 0, t above the worst fit residual
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double t = 0.0;
  for (const auto& c : prob.fit) t = std::max(t, c.b.norm());
  t = 1.1 * t + 0.1;

  const double nu_total = 2.0 * static_cast<double>(cones.size());
  const int dim = n + 1;
  SocpSolution sol;

  double m = 1.0;
  Eigen::VectorXd grad(dim);
  Eigen::MatrixXd hess(dim, dim);

  while (sol.newton_iters < opts.max_newton) {
    // center for current m (approximately; the gap certificate only needs
    // the decrement to be small, not zero)
    for (int stage_iters = 0; stage_iters < opts.max_stage_newton; ++stage_iters) {
      if (sol.newton_iters >= opts.max_newton) break;
      grad.setZero();
      hess.setZero();
      grad(n) = m;
      bool bad = !(t > 0.0);
      for (const auto& c : cones) {
        if (bad) break;
        const Eigen::VectorXd r = c.cone->A * x - c.cone->b;
        const double s2 = c.uses_t ? t * t : c.radius2;
        const double g = s2 - r.squaredNorm();
        if (!(g > 0.0)) { bad = true; break; }
        const Eigen::VectorXd Atr = c.cone->A.transpose() * r;
        grad.head(n) += (2.0 / g) * Atr;
        hess.topLeftCorner(n, n) += (2.0 / g) * c.AtA + (4.0 / (g * g)) * (Atr * Atr.transpose());
        if (c.uses_t) {
          grad(n) += -2.0 * t / g;
          hess.block(0, n, n, 1) += (-4.0 * t / (g * g)) * Atr;
          hess(n, n) += -2.0 / g + 4.0 * t * t / (g * g);
        }
      }
      if (bad)
        throw std::runtime_error("solve_minimax_socp: lost strict feasibility");
      hess.block(n, 0, 1, n) = hess.block(0, n, n, 1).transpose();

      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd step = -ldlt.solve(grad);
      if (!step.allFinite() || ldlt.info() != Eigen::Success) {
        const double ridge = 1e-12 * std::max(1.0, hess.trace() / dim);
        hess.diagonal().array() += ridge;
        ldlt.compute(hess);
        step = -ldlt.solve(grad);
        if (!step.allFinite())
          throw std::runtime_error("solve_minimax_socp: Newton system solve failed");
      }
      const double decrement2 = -grad.dot(step);
      ++sol.newton_iters;
      if (decrement2 / 2.0 <= opts.decrement_tol) break;

      // backtrack to strict feasibility, then Armijo on m*t + barrier
      auto barrier_value = [&](const Eigen::VectorXd& xx, double tt) {
        double v = m * tt;
        for (const auto& c : cones) {
          const double g = cone_gap(c, xx, tt);
          if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
          v -= std::log(g);
        }
        return v;
      };
      const double f0 = barrier_value(x, t);
      double alpha = 1.0;
      const Eigen::VectorXd dx = step.head(n);
      const double dt = step(n);
      for (int ls = 0; ls < 60; ++ls) {
        const double f1 = barrier_value(x + alpha * dx, t + alpha * dt);
        if (f1 <= f0 - 0.25 * alpha * decrement2) break;
        alpha *= 0.5;
      }
      x += alpha * dx;
      t += alpha * dt;
      if (alpha * std::sqrt(std::max(decrement2, 0.0)) < 1e-15) break;
    }

    sol.gap = nu_total / m;
    if (std::getenv("TBMIMO_SOCP_TRACE"))
      std::fprintf(stderr, "socp: m=%.3g gap=%.3g t=%.8g |x|=%.5f iters=%d\n", m,
                   sol.gap, t, x.norm(), sol.newton_iters);
    if (sol.gap <= opts.gap_tol * std::max(1.0, std::abs(t))) {
      sol.converged = true;
      break;
    }
    m *= opts.mu;
  }

  sol.x = x;
  sol.t = t;
  return sol;
}

}  // namespace tbmimo
