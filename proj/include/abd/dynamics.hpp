#pragma once

#include <abd/kinematics.hpp>

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace abd {

// ---------------------------------------------------------------------------
// Kinetic-energy models
// ---------------------------------------------------------------------------

// Classical model: translational mass m and a constant contravariant inertia
// quadrupole J^{AB} of the reference mass distribution.
//   T = (m/2) g_ij v^i v^j + (1/2) g_ij V^i_A V^j_B J^{AB}.
struct DAlembert {
  double m = 1.0;
  Mat J;
};

// Model invariant under all affine transformations of physical space and
// under material rotations (isotropic triple) or any linear-group subgroup
// preserving the general rank-4 coefficient block:
//   T = (m/2) eta_AB vhat^A vhat^B + (1/2) L[Ohat, Ohat],
// isotropic form:
//   T_int = (I/2) Tr(Ohat^{T eta} Ohat) + (A/2) Tr(Ohat^2) + (B/2) (Tr Ohat)^2.
// The general block, when present, is stored as an n^2 x n^2 matrix whose row
// index M*n+A pairs with the velocity component Ohat^M_A (row-major); it must
// be symmetric (the bi-index symmetry of a quadratic form).
struct LeftAffine {
  double m = 1.0;
  double I = 1.0;
  double A = 0.0;
  double B = 0.0;
  std::optional<Mat> L;  // overrides (I, A, B) when present
};

// Mirror-image model: invariant under all affine transformations of the
// material space and under spatial rotations:
//   T = (m/2) g_ij v^i v^j
//     + (I/2) Tr(Omega^{T g} Omega) + (A/2) Tr(Omega^2) + (B/2) (Tr Omega)^2.
struct RightAffine {
  double m = 1.0;
  double I = 1.0;
  double A = 0.0;
  double B = 0.0;
};

// The most general kinetic energy invariant under spatial and material
// isometries, with terms graded by their additional affine invariance:
//   T = (1/2)(m1 G_AB + m2 eta_AB) vhat^A vhat^B
//     + (1/2)(I1 G_KL G^MN + I2 eta_KL eta^MN + I3 G_KL eta^MN
//             + I4 eta_KL G^MN) Ohat^K_M Ohat^L_N
//     + (A/2) Tr(Ohat^2) + (B/2)(Tr Ohat)^2,
// where G = G[phi] and G^MN are the entries of its inverse.
struct IsometricGeneral {
  double m1 = 1.0;
  double m2 = 0.0;
  double I1 = 1.0;
  double I2 = 0.0;
  double I3 = 0.0;
  double I4 = 0.0;
  double A = 0.0;
  double B = 0.0;
};

using KineticModel =
    std::variant<DAlembert, LeftAffine, RightAffine, IsometricGeneral>;

// Validates the model parameters against dimension n (shape and symmetry of
// J / L, finiteness of scalars). Throws ValidationError on violation.
void validate_model(const KineticModel& model, int n);

// ---------------------------------------------------------------------------
// Canonical state and momentum maps
// ---------------------------------------------------------------------------

// Canonical state of one body: positions (x, phi) and conjugate momenta
// (p, P). p_i is conjugate to x^i; P^A_i is conjugate to phi^i_A.
struct PhaseState {
  Vec x;
  LinMap phi;  // mixed V<-U
  Vec p;
  LinMap P;  // mixed U<-V
};

// Generators of the canonical group actions, derived from a phase state.
struct MomentumMaps {
  LinMap Spin;       // endo of V: Sigma = phi P
  LinMap Spin_hat;   // endo of U: Sigma_hat = P phi
  Vec p_hat;         // covector on U: p_hat_A = p_i phi^i_A
  LinMap Lambda;     // endo of V: (x - origin)^i p_j
  LinMap J_total;    // endo of V: Lambda + Spin
  LinMap S;          // endo of V: Sigma - g-transpose of Sigma
  LinMap Vorticity;  // endo of U: Sigma_hat - eta-transpose of Sigma_hat
  Vec p;             // covector on V: the linear momentum itself
};

MomentumMaps momentum_maps(const PhaseState& state, const MetricTensor& eta,
                           const MetricTensor& g, const Vec& origin);

// ---------------------------------------------------------------------------
// Kinetic energy, mass matrix, Legendre transform
// ---------------------------------------------------------------------------

// Evaluates the model's defining closed form. Throws SingularMap when the
// model needs phi^{-1} and phi is singular.
double kinetic_energy(const KineticModel& model, const Configuration& c,
                      const VelocityState& vel, const MetricTensor& eta,
                      const MetricTensor& g);

// Evaluates the same energy through the alternative representation (hatted
// forms rewritten spatially and vice versa); used to cross-check the two
// closed forms, which must agree to rounding.
double kinetic_energy_alt(const KineticModel& model, const Configuration& c,
                          const VelocityState& vel, const MetricTensor& eta,
                          const MetricTensor& g);

// Kinetic energy as a function of canonical momenta: inverts the Legendre
// transform and evaluates the closed form. Throws SingularInertia when the
// mass matrix is singular at this configuration.
double kinetic_energy_momenta(const KineticModel& model,
                              const Configuration& c, const Vec& p,
                              const LinMap& P, const MetricTensor& eta,
                              const MetricTensor& g);

// Symmetric (n + n^2) x (n + n^2) mass matrix in the flattened chart
// [x^1..x^n, phi^1_1, phi^1_2, ..., phi^n_n] (phi row-major), such that
// T = (1/2) qdot^T Gamma qdot.
Mat mass_matrix(const KineticModel& model, const Configuration& c,
                const MetricTensor& eta, const MetricTensor& g);

// Velocities -> momenta: (p, P) = Gamma(q) (v, V), returned together with the
// configuration as a full phase state.
PhaseState legendre(const KineticModel& model, const Configuration& c,
                    const VelocityState& vel, const MetricTensor& eta,
                    const MetricTensor& g);

// Momenta -> velocities: solves Gamma(q) (v, V) = (p, P). Throws
// SingularInertia when Gamma is singular at this configuration (degenerate
// inertial parameters such as I = +/-A sectors).
VelocityState legendre_inverse(const KineticModel& model,
                               const Configuration& c, const Vec& p,
                               const LinMap& P, const MetricTensor& eta,
                               const MetricTensor& g);

// ---------------------------------------------------------------------------
// Flat canonical chart over one or more bodies
// ---------------------------------------------------------------------------

// Stacked chart z = [q(0), ..., q(N-1), pblock(0), ..., pblock(N-1)], where
// each q block is [x^1..x^n, phi^1_1, ..., phi^n_n] and the momentum block is
// aligned slot-for-slot: the slot conjugate to phi^i_A holds P^A_i.
struct ChartLayout {
  int nbodies = 1;
  int n = 0;

  int block() const { return n + n * n; }
  int half() const { return nbodies * block(); }
  int size() const { return 2 * half(); }

  int q_x(int body, int i) const { return body * block() + i; }
  int q_phi(int body, int i, int a) const {
    return body * block() + n + i * n + a;
  }
  int p_lin(int body, int i) const { return half() + body * block() + i; }
  int p_int(int body, int i, int a) const {
    return half() + body * block() + n + i * n + a;
  }
};

Vec pack_state(const ChartLayout& chart, const std::vector<PhaseState>& bodies);
std::vector<PhaseState> unpack_state(const ChartLayout& chart, const Vec& z);

// ---------------------------------------------------------------------------
// Poisson brackets
// ---------------------------------------------------------------------------

// Scalar function on the flat chart. When `gradient` is empty, brackets fall
// back to central finite differences with per-coordinate step
// h_mu = cbrt(machine eps) * max(1, |z_mu|).
struct PhaseFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // optional
};

// Central finite-difference gradient of f at z (step as above).
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& z);

// Analytic gradient when available, finite differences otherwise.
Vec phase_gradient(const PhaseFunction& f, const Vec& z);

// {F, G} = sum_mu (dF/dq^mu dG/dp_mu - dF/dp_mu dG/dq^mu); z holds the q
// coordinates in its first half and the conjugate momenta in its second.
double poisson_bracket(const PhaseFunction& F, const PhaseFunction& G,
                       const Vec& z);

// Convenience overload for a single body.
double poisson_bracket(const PhaseFunction& F, const PhaseFunction& G,
                       const PhaseState& state);

// Component generators on the flat chart, with analytic gradients.
PhaseFunction gen_position(const ChartLayout& chart, int body, int i);
PhaseFunction gen_momentum(const ChartLayout& chart, int body, int i);
PhaseFunction gen_spin(const ChartLayout& chart, int body, int i, int j);
PhaseFunction gen_spin_hat(const ChartLayout& chart, int body, int a, int b);
PhaseFunction gen_p_hat(const ChartLayout& chart, int body, int a);
PhaseFunction gen_lambda(const ChartLayout& chart, int body, int i, int j,
                         const Vec& origin);
PhaseFunction gen_j_total(const ChartLayout& chart, int body, int i, int j,
                          const Vec& origin);

// ---------------------------------------------------------------------------
// Hamiltonians and integration
// ---------------------------------------------------------------------------

class HamiltonianBase {
 public:
  virtual ~HamiltonianBase() = default;
  virtual const ChartLayout& chart() const = 0;
  virtual double energy(const Vec& z) const = 0;
  // Gradients with respect to the q block / p block (each of length half()).
  virtual Vec grad_q(const Vec& z) const = 0;
  virtual Vec grad_p(const Vec& z) const = 0;

  // View of the energy as a bracketable phase function. The Hamiltonian must
  // outlive the returned object.
  PhaseFunction as_phase_function() const;
};

// Configuration potential on the q block (length chart.half()); analytic
// gradient optional (finite differences otherwise).
struct PotentialFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // optional
};

// H = sum_K T_K(q_K, p_K) + V(q): one kinetic model per body over shared
// metrics, plus an optional configuration potential. dH/dp is evaluated
// analytically (one linear solve per body); the kinetic dH/dq is analytic
// where the mass matrix is configuration-independent and finite differences
// otherwise; the potential's gradient is used when provided.
class CanonicalHamiltonian : public HamiltonianBase {
 public:
  CanonicalHamiltonian(std::vector<KineticModel> models, MetricTensor eta,
                       MetricTensor g,
                       std::optional<PotentialFunction> potential = {});

  const ChartLayout& chart() const override { return chart_; }
  double energy(const Vec& z) const override;
  Vec grad_q(const Vec& z) const override;
  Vec grad_p(const Vec& z) const override;

  double kinetic(const Vec& z) const;
  double potential(const Vec& z) const;

  const std::vector<KineticModel>& models() const { return models_; }
  const MetricTensor& eta() const { return eta_; }
  const MetricTensor& g() const { return g_; }

 private:
  std::vector<KineticModel> models_;
  MetricTensor eta_;
  MetricTensor g_;
  std::optional<PotentialFunction> potential_;
  ChartLayout chart_;
};

// dz/dt = (dH/dp, -dH/dq).
Vec hamilton_rhs(const HamiltonianBase& H, const Vec& z);

enum class Integrator { rk4, implicit_midpoint };

// One integration step. The implicit midpoint rule is solved by fixed-point
// iteration to a 1e-12 residual (scale-aware), at most 50 iterations; throws
// NonConvergence on failure.
Vec step(Integrator method, const HamiltonianBase& H, const Vec& z, double dt);

// Single-body convenience overload.
PhaseState step(Integrator method, const HamiltonianBase& H,
                const PhaseState& state, double dt);

struct TrajectorySample {
  double t = 0.0;
  Vec z;
  double energy = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
};

// Integrates from z0 to t_end in steps of dt, recording the initial state,
// every output_stride-th step, and the final state.
Trajectory simulate(Integrator method, const HamiltonianBase& H, const Vec& z0,
                    double dt, double t_end, int output_stride);

}  // namespace abd
