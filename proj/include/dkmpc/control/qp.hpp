#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dkmpc::control {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class QpInfeasibleError : public std::runtime_error
{
public:
  explicit QpInfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

class QpSolverError : public std::runtime_error
{
public:
  explicit QpSolverError(const std::string& what) : std::runtime_error(what) {}
};

/**
 * min 0.5 x'Hx + f'x  s.t.  G x <= h,  Aeq x = beq.
 *
 * H must be symmetric positive definite (the dual active-set method factors it).
 * Empty G / Aeq mean no constraints of that kind.
 */
struct QpProblem
{
  MatrixXd H;
  VectorXd f;
  MatrixXd G;
  VectorXd h;
  MatrixXd Aeq;
  VectorXd beq;

  double objective(const VectorXd& x) const { return 0.5 * x.dot(H * x) + f.dot(x); }
};

struct KktResiduals
{
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const;
};

struct QpSolution
{
  VectorXd x;
  VectorXd lambda;  // inequality multipliers, >= 0
  VectorXd nu;      // equality multipliers
  double objective = 0.0;
  int iterations = 0;
  KktResiduals kkt;
};

KktResiduals kkt_residuals(const QpProblem& qp, const VectorXd& x, const VectorXd& lambda, const VectorXd& nu);

/// Goldfarb-Idnani dual active-set method. Deterministic; throws
/// QpInfeasibleError or QpSolverError (iteration cap, indefinite H).
QpSolution qp_solve(const QpProblem& qp, int max_iterations = 0);

}  // namespace dkmpc::control
