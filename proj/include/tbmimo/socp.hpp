#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tbmimo {

// One second-order cone constraint on the residual r = A x - b.
struct SocpCone {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

// minimize t  subject to  ||A_i x - b_i|| <= t      (fit cones)
//                         ||A_j x - b_j|| <= rho_j  (cap cones)
// The origin must be strictly feasible for every cap cone (||b_j|| < rho_j);
// the epigraph variable makes the fit cones feasible for free.
struct MinimaxSocp {
  std::vector<SocpCone> fit;
  std::vector<SocpCone> cap;
  Eigen::VectorXd cap_radius;
};

struct SocpOptions {
  double gap_tol = 1e-9;        // duality-gap target, relative to max(1, |t|)
  double mu = 20.0;             // barrier parameter growth factor
  int max_newton = 20000;       // total Newton iteration budget
  double decrement_tol = 1e-8;  // centering exit on decrement^2 / 2
  int max_stage_newton = 120;   // per-centering cap (approximate centering
                                // keeps the path-following certificate valid)
};

struct SocpSolution {
  Eigen::VectorXd x;
  double t = 0.0;             // epigraph value at the last central point
  double gap = 0.0;           // duality-gap certificate (2 * cones / m)
  bool converged = false;
  int newton_iters = 0;
};

// Dense log-barrier Newton solver.  Problem sizes here are tiny (tens of
// variables, hundreds of cones) so a direct method is both simple and robust.
SocpSolution solve_minimax_socp(const MinimaxSocp& prob, const SocpOptions& opts = {});

}  // namespace tbmimo
