#pragma once

#include <abd/spaces.hpp>

namespace abd {

// Centre-of-mass position plus internal configuration phi: U -> V.
struct Configuration {
  Vec x;
  LinMap phi;  // mixed V<-U; operations that invert it throw SingularMap
};

struct VelocityState {
  Vec v;     // dx/dt
  LinMap V;  // dphi/dt, mixed V<-U
};

// Total mass and contravariant quadrupole moment J^AB of the material mass
// distribution. J must be symmetric positive definite.
class BodyInertia {
 public:
  BodyInertia(double m, Mat J);
  // J = scalar * eta^{-1}; the inertially isotropic special case.
  static BodyInertia isotropic(double m, double scalar, const MetricTensor& eta);

  double m() const { return m_; }
  const Mat& J() const { return j_; }

 private:
  double m_;
  Mat j_;
};

// Velocities in Lie-algebraic form. Omega acts on V, Omega_hat on U; the
// skew/symmetric splits are taken in the respective metric senses. d_hat is
// the covariant distortion rate, equal to half the time derivative of the
// Green tensor (the mixed-metric lowering of d_tilde reproduces it only for
// isometric phi).
struct AffineVelocities {
  LinMap Omega;        // endo V: V phi^{-1}
  LinMap Omega_hat;    // endo U: phi^{-1} V
  Vec v_hat;           // phi^{-1} v
  LinMap omega;        // g-skew part of Omega
  LinMap d;            // g-symmetric part of Omega
  LinMap omega_tilde;  // eta-skew part of Omega_hat
  LinMap d_tilde;      // eta-symmetric part of Omega_hat
  LinMap d_hat;        // covariant on U: (G Omega_hat + Omega_hat^T G) / 2
};

AffineVelocities affine_velocities(const Configuration& c, const VelocityState& vel,
                                   const MetricTensor& eta, const MetricTensor& g);

// Max-norm of omega_tilde minus the conjugated spatial omega. Zero exactly
// when phi is isometric; generically positive, which is why omega_tilde must
// not be read as co-moving components of omega.
double check_comoving_caveat(const AffineVelocities& av, const Configuration& c,
                             const MetricTensor& g);

// Two-point rate of the Green tensor: (G[after] - G[before]) / (2 dt).
// Approximates d_hat at the midpoint configuration to second order in dt.
LinMap green_rate(const Configuration& before, const Configuration& after, double dt,
                  const MetricTensor& g);

// Velocity field of the affine motion at a spatial point y.
Vec eulerian_velocity(const Configuration& c, const AffineVelocities& av, const Vec& y);

// Push-forward of the quadrupole moment: J[phi]^kl = phi^k_A phi^l_B J^AB.
LinMap spatial_inertia(const LinMap& phi, const LinMap& J);

struct ConstraintReport {
  bool rigid_spatial;    // Omega g-skew
  bool rigid_material;   // Omega_hat eta-skew
  bool incompressible;   // Tr Omega = 0
  bool rotation_free;    // Omega g-symmetric
};

ConstraintReport constraint_predicates(const AffineVelocities& av, const MetricTensor& eta,
                                       const MetricTensor& g, double tol = 1e-9);

}  // namespace abd
