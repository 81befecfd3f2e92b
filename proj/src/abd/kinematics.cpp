#include <abd/kinematics.hpp>

#include <abd/deformation.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace abd {

namespace {

void require_config(const Configuration& c, const char* what) {
  if (!(c.phi.variance() == tag::mixed_VU))
    throw TagMismatch(std::string(what) + ": internal configuration must carry the V<-U tag");
  if (c.x.size() != c.phi.dim())
    throw DimensionMismatch(std::string(what) + ": position and phi dimensions differ");
}

void require_metrics(const MetricTensor& eta, const MetricTensor& g, int n, const char* what) {
  if (eta.space() != Space::U)
    throw TagMismatch(std::string(what) + ": material metric must live on U");
  if (g.space() != Space::V)
    throw TagMismatch(std::string(what) + ": spatial metric must live on V");
  require_same_dim(eta.dim(), n, what);
  require_same_dim(g.dim(), n, what);
}

}  // namespace

BodyInertia::BodyInertia(double m, Mat J) : m_(m), j_(std::move(J)) {
  if (!(m_ > 0.0) || !std::isfinite(m_))
    throw ValidationError("BodyInertia: mass must be positive");
  if (j_.rows() != j_.cols()) throw ValidationError("BodyInertia: J must be square");
  require_dim(static_cast<int>(j_.rows()));
  double scale = std::max(j_.cwiseAbs().maxCoeff(), 1e-300);
  if ((j_ - j_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError("BodyInertia: J must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(j_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-10 * scale)
    throw ValidationError("BodyInertia: J must be positive definite");
}

BodyInertia BodyInertia::isotropic(double m, double scalar, const MetricTensor& eta) {
  if (!(scalar > 0.0)) throw ValidationError("BodyInertia: isotropic scalar must be positive");
  return BodyInertia(m, Mat(scalar * eta.inverse()));
}

AffineVelocities affine_velocities(const Configuration& c, const VelocityState& vel,
                                   const MetricTensor& eta, const MetricTensor& g) {
  require_config(c, "affine_velocities");
  if (!(vel.V.variance() == tag::mixed_VU))
    throw TagMismatch("affine_velocities: V must carry the V<-U tag");
  const int n = c.phi.dim();
  require_same_dim(vel.V.dim(), n, "affine_velocities");
  if (vel.v.size() != n)
    throw DimensionMismatch("affine_velocities: translational velocity dimension");
  require_metrics(eta, g, n, "affine_velocities");

  Mat phi_inv = checked_inverse(c.phi.matrix());
  Mat omega_big = vel.V.matrix() * phi_inv;
  Mat omega_hat = phi_inv * vel.V.matrix();

  Mat om_tg = g.inverse() * omega_big.transpose() * g.components();
  Mat oh_te = eta.inverse() * omega_hat.transpose() * eta.components();

  Mat gr = green(c.phi, g).matrix();
  Mat dh = 0.5 * (gr * omega_hat + (gr * omega_hat).transpose());

  return AffineVelocities{LinMap(omega_big, tag::endo_V),
                          LinMap(omega_hat, tag::endo_U),
                          Vec(phi_inv * vel.v),
                          LinMap(0.5 * (omega_big - om_tg), tag::endo_V),
                          LinMap(0.5 * (omega_big + om_tg), tag::endo_V),
                          LinMap(0.5 * (omega_hat - oh_te), tag::endo_U),
                          LinMap(0.5 * (omega_hat + oh_te), tag::endo_U),
                          LinMap(dh, tag::covariant_UU)};
}

double check_comoving_caveat(const AffineVelocities& av, const Configuration& c,
                             const MetricTensor& g) {
  require_config(c, "check_comoving_caveat");
  Mat phi_inv = checked_inverse(c.phi.matrix());
  Mat om = 0.5 * (av.Omega.matrix() -
                  g.inverse() * av.Omega.matrix().transpose() * g.components());
  Mat conjugated = phi_inv * om * c.phi.matrix();
  return (av.omega_tilde.matrix() - conjugated).cwiseAbs().maxCoeff();
}

LinMap green_rate(const Configuration& before, const Configuration& after, double dt,
                  const MetricTensor& g) {
  require_config(before, "green_rate");
  require_config(after, "green_rate");
  require_same_dim(before.phi.dim(), after.phi.dim(), "green_rate");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ValidationError("green_rate: dt must be positive");
  Mat g0 = green(before.phi, g).matrix();
  Mat g1 = green(after.phi, g).matrix();
  return LinMap(Mat((g1 - g0) / (2.0 * dt)), tag::covariant_UU);
}

Vec eulerian_velocity(const Configuration& c, const AffineVelocities& av, const Vec& y) {
  require_config(c, "eulerian_velocity");
  if (y.size() != c.x.size())
    throw DimensionMismatch("eulerian_velocity: field point dimension");
  Vec v = c.phi.matrix() * av.v_hat;
  return Vec(v + av.Omega.matrix() * (y - c.x));
}

LinMap spatial_inertia(const LinMap& phi, const LinMap& J) {
  if (!(phi.variance() == tag::mixed_VU))
    throw TagMismatch("spatial_inertia: phi must carry the V<-U tag");
  if (!(J.variance() == tag::contravariant_UU))
    throw TagMismatch("spatial_inertia: J must be contravariant on U");
  require_same_dim(phi.dim(), J.dim(), "spatial_inertia");
  Mat pushed = phi.matrix() * J.matrix() * phi.matrix().transpose();
  pushed = 0.5 * (pushed + pushed.transpose());
  return LinMap(pushed, tag::contravariant_VV);
}

ConstraintReport constraint_predicates(const AffineVelocities& av, const MetricTensor& eta,
                                       const MetricTensor& g, double tol) {
  const Mat& om = av.Omega.matrix();
  const Mat& oh = av.Omega_hat.matrix();
  Mat om_tg = g.inverse() * om.transpose() * g.components();
  Mat oh_te = eta.inverse() * oh.transpose() * eta.components();

  double tr = om.trace();
  double tr_hat = oh.trace();
  double scale = std::max({1.0, om.cwiseAbs().maxCoeff(), oh.cwiseAbs().maxCoeff()});
  if (std::abs(tr - tr_hat) > 1e-9 * scale)
    throw Error("constraint_predicates: Tr Omega and Tr Omega_hat disagree");

  return ConstraintReport{(om + om_tg).cwiseAbs().maxCoeff() <= tol,
                          (oh + oh_te).cwiseAbs().maxCoeff() <= tol,
                          std::abs(tr) <= tol,
                          (om - om_tg).cwiseAbs().maxCoeff() <= tol};
}

}  // namespace abd
