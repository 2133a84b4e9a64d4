#include "dkmpc/eso/eso.hpp"

#include <Eigen/Eigenvalues>

#include <complex>
#include <limits>
#include <sstream>

namespace dkmpc::eso {

LiftedLinearModel LiftedLinearModel::from(const koopman::KoopmanModel& model)
{
  return {model.A(), model.B(), model.drift()};
}

EsoGains::EsoGains(const MatrixXd& a, double beta1, double beta2) : beta1_(beta1), beta2_(beta2)
{
  if (!std::isfinite(beta1) || !std::isfinite(beta2))
    throw std::invalid_argument("observer gains must be finite");
  const double rho = spectral_radius(error_matrix(a, *this));
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "observer gains (" << beta1 << ", " << beta2 << ") give spectral radius " << rho << " >= 1";
    throw std::invalid_argument(os.str());
  }
}

EsoGains EsoGains::unchecked(double beta1, double beta2)
{
  EsoGains g;
  g.beta1_ = beta1;
  g.beta2_ = beta2;
  return g;
}

EsoState EsoState::initial(const VectorXd& z_meas)
{
  return {z_meas, VectorXd::Zero(z_meas.size())};
}

EsoState eso_step(const LiftedLinearModel& model, const EsoGains& gains, const EsoState& est,
                  const VectorXd& z_meas, const VectorXd& u_scaled)
{
  const Eigen::Index q = model.q();
  if (est.z_hat.size() != q || est.w_hat.size() != q || z_meas.size() != q)
    throw nn::ShapeError("observer state does not match the lifted dimension");
  const VectorXd e = est.z_hat - z_meas;
  EsoState next;
  next.z_hat = model.a * est.z_hat + model.b * u_scaled + model.drift + est.w_hat - gains.beta1() * e;
  next.w_hat = est.w_hat - gains.beta2() * e;
  return next;
}

EsoState eso_step(const koopman::KoopmanModel& model, const EsoGains& gains, const EsoState& est,
                  const VectorXd& z_meas, const vehicle::ControlInput& u)
{
  return eso_step(LiftedLinearModel::from(model), gains, est, z_meas, model.scale_input(u));
}

VectorXd corrected_disturbance(const EsoGains& gains, const EsoState& est, const VectorXd& z_meas)
{
  if (est.z_hat.size() != z_meas.size() || est.w_hat.size() != z_meas.size())
    throw nn::ShapeError("observer state does not match the lifted dimension");
  return est.w_hat - gains.beta2() * (est.z_hat - z_meas);
}

MatrixXd error_matrix(const MatrixXd& a, const EsoGains& gains)
{
  if (a.rows() != a.cols())
    throw nn::ShapeError("lifted matrix must be square");
  const Eigen::Index q = a.rows();
  const MatrixXd eye = MatrixXd::Identity(q, q);
  MatrixXd theta(2 * q, 2 * q);
  theta.topLeftCorner(q, q) = a - gains.beta1() * eye;
  theta.topRightCorner(q, q) = eye;
  theta.bottomLeftCorner(q, q) = -gains.beta2() * eye;
  theta.bottomRightCorner(q, q) = eye;
  return theta;
}

double spectral_radius(const MatrixXd& m)
{
  if (m.rows() != m.cols() || m.size() == 0)
    throw nn::ShapeError("spectral radius needs a non-empty square matrix");
  if (!m.allFinite())
    throw std::invalid_argument("spectral radius of a non-finite matrix");
  Eigen::EigenSolver<MatrixXd> solver(m, false);
  if (solver.info() != Eigen::Success)
    throw EigenError("eigenvalue iteration did not converge");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// Spectral radius of the error dynamics from the eigenvalues of a: each
// eigenvalue mu contributes the roots of l^2 - (mu - b1 + 1) l + (mu - b1 + b2).
double modal_radius(const Eigen::VectorXcd& mus, double b1, double b2)
{
  double rho = 0.0;
  for (Eigen::Index i = 0; i < mus.size(); ++i) {
    const std::complex<double> mu = mus(i);
    const std::complex<double> p = mu - b1 + 1.0;
    const std::complex<double> c = mu - b1 + b2;
    const std::complex<double> disc = std::sqrt(p * p - 4.0 * c);
    rho = std::max({rho, std::abs(0.5 * (p + disc)), std::abs(0.5 * (p - disc))});
  }
  return rho;
}

}  // namespace

EsoGains design_gains(const MatrixXd& a, double target_rho)
{
  if (!(target_rho > 0.0 && target_rho < 1.0))
    throw std::invalid_argument("target spectral radius must lie in (0, 1)");
  Eigen::EigenSolver<MatrixXd> solver(a, false);
  if (solver.info() != Eigen::Success)
    throw EigenError("eigenvalue iteration did not converge");
  const Eigen::VectorXcd mus = solver.eigenvalues();

  double best_rho = std::numeric_limits<double>::infinity();
  int best_i = 0;
  int best_j = 0;
  // Integer grid indices keep the search exact and the tie-break well defined.
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double rho = modal_radius(mus, i / 100.0, j / 100.0);
      if (rho < best_rho - 1e-12) {
        best_rho = rho;
        best_i = i;
        best_j = j;
      }
    }
  }
  const double b1 = best_i / 100.0;
  const double b2 = best_j / 100.0;
  const double rho = spectral_radius(error_matrix(a, EsoGains::unchecked(b1, b2)));
  if (!(rho <= target_rho)) {
    std::ostringstream os;
    os << "no gains on the search grid reach spectral radius " << target_rho << " (best " << rho << ")";
    throw InfeasibleGainsError(os.str(), rho);
  }
  return EsoGains(a, b1, b2);
}

}  // namespace dkmpc::eso
