#include "dkmpc/control/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dkmpc::control {

double KktResiduals::max() const
{
  return std::max({stationarity, primal, dual, complementarity});
}

KktResiduals kkt_residuals(const QpProblem& qp, const VectorXd& x, const VectorXd& lambda, const VectorXd& nu)
{
  KktResiduals r;
  VectorXd grad = qp.H * x + qp.f;
  if (qp.G.rows() > 0) {
    grad += qp.G.transpose() * lambda;
    const VectorXd slack = qp.h - qp.G * x;
    r.primal = std::max(0.0, -slack.minCoeff());
    r.dual = std::max(0.0, -lambda.minCoeff());
    r.complementarity = (lambda.array() * slack.array()).abs().maxCoeff();
  }
  if (qp.Aeq.rows() > 0) {
    grad += qp.Aeq.transpose() * nu;
    r.primal = std::max(r.primal, (qp.Aeq * x - qp.beq).cwiseAbs().maxCoeff());
  }
  r.stationarity = grad.cwiseAbs().maxCoeff();
  return r;
}

namespace {

// Active constraints are stored as normals n with the convention n'x + c >= 0
// (inequalities) or n'x + c = 0 (equalities).
struct ActiveSet
{
  std::vector<int> index;  // >= 0 inequality row, < 0 equality row (-1 - k)
  std::vector<double> u;   // multipliers in the n'x + c convention
};

class Factor
{
public:
  Factor(const MatrixXd& linv, const MatrixXd& normals)
  {
    const Eigen::Index n = linv.rows();
    k_ = normals.cols();
    if (k_ == 0) {
      j_ = linv.transpose();
      return;
    }
    Eigen::HouseholderQR<MatrixXd> qr(linv * normals);
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
    r_ = qr.matrixQR().topLeftCorner(k_, k_).triangularView<Eigen::Upper>();
    j_ = linv.transpose() * q;
  }

  // Primal step direction z and dual direction r for adding normal np.
  void directions(const VectorXd& np, VectorXd& z, VectorXd& r) const
  {
    const VectorXd d = j_.transpose() * np;
    const Eigen::Index n = j_.cols();
    z = j_.rightCols(n - k_) * d.tail(n - k_);
    if (k_ > 0)
      r = r_.triangularView<Eigen::Upper>().solve(d.head(k_));
    else
      r.resize(0);
  }

private:
  Eigen::Index k_ = 0;
  MatrixXd j_;
  MatrixXd r_;
};

}  // namespace

QpSolution qp_solve(const QpProblem& qp, int max_iterations)
{
  const Eigen::Index n = qp.H.rows();
  if (n == 0 || qp.H.cols() != n || qp.f.size() != n)
    throw std::invalid_argument("QP cost dimensions are inconsistent");
  const Eigen::Index mi = qp.G.rows();
  const Eigen::Index me = qp.Aeq.rows();
  if ((mi > 0 && (qp.G.cols() != n || qp.h.size() != mi)) || (me > 0 && (qp.Aeq.cols() != n || qp.beq.size() != me)))
    throw std::invalid_argument("QP constraint dimensions are inconsistent");
  if (max_iterations <= 0)
    max_iterations = static_cast<int>(50 * (n + mi + me) + 100);

  Eigen::LLT<MatrixXd> llt(0.5 * (qp.H + qp.H.transpose()));
  if (llt.info() != Eigen::Success)
    throw QpSolverError("QP Hessian is not positive definite");
  const MatrixXd l = llt.matrixL();
  const MatrixXd linv = l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));

  auto normal = [&](int idx) -> VectorXd {
    if (idx >= 0)
      return -qp.G.row(idx).transpose();
    return qp.Aeq.row(-1 - idx).transpose();
  };
  auto value = [&](int idx, const VectorXd& x) -> double {
    if (idx >= 0)
      return qp.h(idx) - qp.G.row(idx).dot(x);
    return qp.Aeq.row(-1 - idx).dot(x) - qp.beq(-1 - idx);
  };
  auto tolerance = [&](int idx) -> double {
    const double c = idx >= 0 ? qp.h(idx) : qp.beq(-1 - idx);
    return 1e-11 * std::max(1.0, std::abs(c));
  };

  VectorXd x = -llt.solve(qp.f);
  ActiveSet active;
  auto normals = [&]() {
    MatrixXd nm(n, static_cast<Eigen::Index>(active.index.size()));
    for (std::size_t i = 0; i < active.index.size(); ++i)
      nm.col(static_cast<Eigen::Index>(i)) = normal(active.index[i]);
    return nm;
  };

  int iterations = 0;
  VectorXd z, r;

  for (Eigen::Index k = 0; k < me; ++k) {
    const int idx = -1 - static_cast<int>(k);
    const VectorXd np = normal(idx);
    Factor(linv, normals()).directions(np, z, r);
    const double s = value(idx, x);
    const double zn = z.dot(np);
    if (std::abs(zn) <= 1e-14 * std::max(1.0, np.squaredNorm())) {
      if (std::abs(s) > 1e-9 * std::max(1.0, std::abs(qp.beq(k))))
        throw QpInfeasibleError("equality constraints are inconsistent");
      continue;
    }
    const double t = -s / zn;
    x += t * z;
    for (std::size_t i = 0; i < active.u.size(); ++i)
      active.u[i] -= t * r(static_cast<Eigen::Index>(i));
    active.index.push_back(idx);
    active.u.push_back(t);
    ++iterations;
  }

  while (true) {
    int p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < mi; ++i) {
      const int idx = static_cast<int>(i);
      if (std::find(active.index.begin(), active.index.end(), idx) != active.index.end())
        continue;
      const double s = value(idx, x);
      if (s < -tolerance(idx) && s < worst) {
        worst = s;
        p = idx;
      }
    }
    if (p < 0)
      break;

    const VectorXd np = normal(p);
    double up = 0.0;
    while (true) {
      if (++iterations > max_iterations)
        throw QpSolverError("QP iteration limit reached");
      Factor(linv, normals()).directions(np, z, r);

      double t1 = std::numeric_limits<double>::infinity();
      std::size_t drop = active.index.size();
      for (std::size_t i = 0; i < active.index.size(); ++i) {
        if (active.index[i] < 0)
          continue;
        const double ri = r(static_cast<Eigen::Index>(i));
        if (ri > 1e-14) {
          const double ti = active.u[i] / ri;
          if (ti < t1) {
            t1 = ti;
            drop = i;
          }
        }
      }
      double t2 = std::numeric_limits<double>::infinity();
      const double zn = z.dot(np);
      if (z.lpNorm<Eigen::Infinity>() > 1e-14 && zn > 1e-14 * np.squaredNorm())
        t2 = -value(p, x) / zn;

      if (!std::isfinite(t1) && !std::isfinite(t2))
        throw QpInfeasibleError("QP constraints are infeasible");

      const double t = std::min(t1, t2);
      if (std::isfinite(t2))
        x += t * z;
      for (std::size_t i = 0; i < active.u.size(); ++i)
        active.u[i] -= t * r(static_cast<Eigen::Index>(i));
      up += t;

      if (t2 <= t1) {
        active.index.push_back(p);
        active.u.push_back(up);
        break;
      }
      active.index.erase(active.index.begin() + static_cast<std::ptrdiff_t>(drop));
      active.u.erase(active.u.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }

  QpSolution sol;
  sol.x = x;
  sol.lambda = VectorXd::Zero(mi);
  sol.nu = VectorXd::Zero(me);
  for (std::size_t i = 0; i < active.index.size(); ++i) {
    const int idx = active.index[i];
    if (idx >= 0)
      sol.lambda(idx) = std::max(0.0, active.u[i]);
    else
      sol.nu(-1 - idx) = -active.u[i];
  }
  sol.objective = qp.objective(x);
  sol.iterations = iterations;
  sol.kkt = kkt_residuals(qp, x, sol.lambda, sol.nu);
  return sol;
}

}  // namespace dkmpc::control
