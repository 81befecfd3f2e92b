#include <abd/dynamics.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace abd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_metrics(const MetricTensor& eta, const MetricTensor& g, int n,
                     const char* what) {
  if (eta.space() != Space::U)
    throw TagMismatch(std::string(what) + ": material metric must live on U");
  if (g.space() != Space::V)
    throw TagMismatch(std::string(what) + ": spatial metric must live on V");
  require_same_dim(eta.dim(), n, what);
  require_same_dim(g.dim(), n, what);
}

void require_config(const Configuration& c, const char* what) {
  if (!(c.phi.variance() == tag::mixed_VU))
    throw TagMismatch(std::string(what) +
                      ": internal configuration must carry the V<-U tag");
  if (c.x.size() != c.phi.dim())
    throw DimensionMismatch(std::string(what) +
                            ": position and phi dimensions differ");
}

void require_velocity(const VelocityState& vel, int n, const char* what) {
  if (!(vel.V.variance() == tag::mixed_VU))
    throw TagMismatch(std::string(what) +
                      ": internal velocity must carry the V<-U tag");
  require_same_dim(vel.V.dim(), n, what);
  if (vel.v.size() != n)
    throw DimensionMismatch(std::string(what) +
                            ": translational velocity dimension");
}

void require_phase(const PhaseState& s, const char* what) {
  if (!(s.phi.variance() == tag::mixed_VU))
    throw TagMismatch(std::string(what) + ": phi must carry the V<-U tag");
  if (!(s.P.variance() == tag::mixed_UV))
    throw TagMismatch(std::string(what) + ": P must carry the U<-V tag");
  int n = s.phi.dim();
  require_same_dim(s.P.dim(), n, what);
  if (s.x.size() != n)
    throw DimensionMismatch(std::string(what) + ": position dimension");
  if (s.p.size() != n)
    throw DimensionMismatch(std::string(what) + ": linear momentum dimension");
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value))
    throw ValidationError(std::string(what) + ": non-finite parameter");
}

void require_chart(const ChartLayout& chart, const char* what) {
  require_dim(chart.n);
  if (chart.nbodies < 1)
    throw ValidationError(std::string(what) + ": chart needs at least one body");
}

void require_component(int idx, int n, const char* what) {
  if (idx < 0 || idx >= n)
    throw ValidationError(std::string(what) + ": component index out of range");
}

void require_body(const ChartLayout& chart, int body, const char* what) {
  require_chart(chart, what);
  if (body < 0 || body >= chart.nbodies)
    throw ValidationError(std::string(what) + ": body index out of range");
}

// Flattened q-block slot of phi^i_A (after the n translational slots).
inline int phi_slot(int n, int i, int a) { return n + i * n + a; }

// Row-major flattening of an endomorphism-velocity component matrix: slot
// u*n + w holds X^u_w.
Vec flatten_rowmajor(const Mat& x) {
  int n = static_cast<int>(x.rows());
  Vec w(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) w(r * n + c) = x(r, c);
  return w;
}

// Isotropic rank-4 coefficient block over a metric k (components) and its
// inverse. Slot (u*n + w) pairs with the velocity component X^u_w, so that
// (1/2) vec(X)^T L vec(X)
//   = (I/2) Tr(X^{Tk} X) + (A/2) Tr(X^2) + (B/2) (Tr X)^2.
Mat isotropic_rank4(double coef_i, double coef_a, double coef_b, const Mat& k,
                    const Mat& kinv) {
  int n = static_cast<int>(k.rows());
  Mat L = Mat::Zero(n * n, n * n);
  for (int u = 0; u < n; ++u)
    for (int w = 0; w < n; ++w)
      for (int u2 = 0; u2 < n; ++u2)
        for (int w2 = 0; w2 < n; ++w2) {
          double value = coef_i * kinv(w, w2) * k(u, u2);
          if (w == u2 && w2 == u) value += coef_a;
          if (w == u && w2 == u2) value += coef_b;
          L(u * n + w, u2 * n + w2) = value;
        }
  return L;
}

// (1/2) vec(X)^T L vec(X) with the row-major slot convention above.
double rank4_quadratic(const Mat& L, const Mat& x) {
  Vec w = flatten_rowmajor(x);
  return 0.5 * w.dot(L * w);
}

double isotropic_internal(double coef_i, double coef_a, double coef_b,
                          const Mat& x, const Mat& k, const Mat& kinv) {
  Mat xt = endo_metric_transpose(x, k, kinv);
  double tr = x.trace();
  return 0.5 * coef_i * (xt * x).trace() + 0.5 * coef_a * (x * x).trace() +
         0.5 * coef_b * tr * tr;
}

Configuration config_at(const ChartLayout& chart, const Vec& z, int body) {
  int n = chart.n;
  Vec x(n);
  Mat phi(n, n);
  for (int i = 0; i < n; ++i) {
    x(i) = z(chart.q_x(body, i));
    for (int a = 0; a < n; ++a) phi(i, a) = z(chart.q_phi(body, i, a));
  }
  return Configuration{x, LinMap(phi, tag::mixed_VU)};
}

void momenta_at(const ChartLayout& chart, const Vec& z, int body, Vec& p,
                Mat& P) {
  int n = chart.n;
  p.resize(n);
  P.resize(n, n);
  for (int i = 0; i < n; ++i) {
    p(i) = z(chart.p_lin(body, i));
    for (int a = 0; a < n; ++a) P(a, i) = z(chart.p_int(body, i, a));
  }
}

const double kFdStep = std::cbrt(std::numeric_limits<double>::epsilon());

// Representable central-difference step around the base value.
double fd_step(double base) {
  double h = kFdStep * std::max(1.0, std::abs(base));
  double t = base + h;
  return t - base;
}

}  // namespace

void validate_model(const KineticModel& model, int n) {
  require_dim(n);
  std::visit(
      overloaded{
          [&](const DAlembert& k) {
            require_finite(k.m, "DAlembert model");
            if (k.J.rows() != n || k.J.cols() != n)
              throw ValidationError(
                  "DAlembert model: inertia quadrupole must be n x n");
            double scale = std::max(k.J.cwiseAbs().maxCoeff(), 1e-300);
            if ((k.J - k.J.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
              throw ValidationError(
                  "DAlembert model: inertia quadrupole must be symmetric");
          },
          [&](const LeftAffine& k) {
            require_finite(k.m, "LeftAffine model");
            require_finite(k.I, "LeftAffine model");
            require_finite(k.A, "LeftAffine model");
            require_finite(k.B, "LeftAffine model");
            if (k.L) {
              if (k.L->rows() != n * n || k.L->cols() != n * n)
                throw ValidationError(
                    "LeftAffine model: coefficient block must be n^2 x n^2");
              double scale = std::max(k.L->cwiseAbs().maxCoeff(), 1e-300);
              if ((*k.L - k.L->transpose()).cwiseAbs().maxCoeff() >
                  1e-12 * scale)
                throw ValidationError(
                    "LeftAffine model: coefficient block must be symmetric in "
                    "its bi-indices");
            }
          },
          [&](const RightAffine& k) {
            require_finite(k.m, "RightAffine model");
            require_finite(k.I, "RightAffine model");
            require_finite(k.A, "RightAffine model");
            require_finite(k.B, "RightAffine model");
          },
          [&](const IsometricGeneral& k) {
            for (double v : {k.m1, k.m2, k.I1, k.I2, k.I3, k.I4, k.A, k.B})
              require_finite(v, "IsometricGeneral model");
          }},
      model);
}

MomentumMaps momentum_maps(const PhaseState& state, const MetricTensor& eta,
                           const MetricTensor& g, const Vec& origin) {
  require_phase(state, "momentum_maps");
  int n = state.phi.dim();
  require_metrics(eta, g, n, "momentum_maps");
  if (origin.size() != n)
    throw DimensionMismatch("momentum_maps: origin dimension");

  LinMap spin = state.phi * state.P;      // endo of V
  LinMap spin_hat = state.P * state.phi;  // endo of U
  Vec p_hat = state.phi.matrix().transpose() * state.p;
  Mat lambda = (state.x - origin) * state.p.transpose();
  Mat s = spin.matrix() -
          endo_metric_transpose(spin.matrix(), g.components(), g.inverse());
  Mat vort = spin_hat.matrix() - endo_metric_transpose(spin_hat.matrix(),
                                                       eta.components(),
                                                       eta.inverse());
  return MomentumMaps{spin,
                      spin_hat,
                      p_hat,
                      LinMap(lambda, tag::endo_V),
                      LinMap(lambda + spin.matrix(), tag::endo_V),
                      LinMap(s, tag::endo_V),
                      LinMap(vort, tag::endo_U),
                      state.p};
}

double kinetic_energy(const KineticModel& model, const Configuration& c,
                      const VelocityState& vel, const MetricTensor& eta,
                      const MetricTensor& g) {
  require_config(c, "kinetic_energy");
  int n = c.phi.dim();
  require_velocity(vel, n, "kinetic_energy");
  require_metrics(eta, g, n, "kinetic_energy");
  validate_model(model, n);

  return std::visit(
      overloaded{
          [&](const DAlembert& k) {
            double ttr = 0.5 * k.m * vel.v.dot(g.components() * vel.v);
            Mat vgv =
                vel.V.matrix().transpose() * g.components() * vel.V.matrix();
            double tint = 0.5 * (vgv * k.J).trace();
            return ttr + tint;
          },
          [&](const LeftAffine& k) {
            Mat phi_inv = checked_inverse(c.phi.matrix());
            Vec vhat = phi_inv * vel.v;
            Mat ohat = phi_inv * vel.V.matrix();
            double ttr = 0.5 * k.m * vhat.dot(eta.components() * vhat);
            double tint =
                k.L ? rank4_quadratic(*k.L, ohat)
                    : isotropic_internal(k.I, k.A, k.B, ohat, eta.components(),
                                         eta.inverse());
            return ttr + tint;
          },
          [&](const RightAffine& k) {
            Mat phi_inv = checked_inverse(c.phi.matrix());
            Mat omega = vel.V.matrix() * phi_inv;
            double ttr = 0.5 * k.m * vel.v.dot(g.components() * vel.v);
            double tint = isotropic_internal(k.I, k.A, k.B, omega,
                                             g.components(), g.inverse());
            return ttr + tint;
          },
          [&](const IsometricGeneral& k) {
            Mat phi_inv = checked_inverse(c.phi.matrix());
            Vec vhat = phi_inv * vel.v;
            Mat ohat = phi_inv * vel.V.matrix();
            Mat gmat =
                c.phi.matrix().transpose() * g.components() * c.phi.matrix();
            gmat = 0.5 * (gmat + gmat.transpose()).eval();
            Mat ginv = checked_inverse(gmat);
            double ttr = 0.5 * k.m1 * vhat.dot(gmat * vhat) +
                         0.5 * k.m2 * vhat.dot(eta.components() * vhat);
            Mat ot = ohat.transpose();
            double tint =
                0.5 * (k.I1 * (gmat * ohat * ginv * ot).trace() +
                       k.I2 * (eta.components() * ohat * eta.inverse() * ot)
                                  .trace() +
                       k.I3 * (gmat * ohat * eta.inverse() * ot).trace() +
                       k.I4 * (eta.components() * ohat * ginv * ot).trace());
            double tr = ohat.trace();
            tint += 0.5 * k.A * (ohat * ohat).trace() + 0.5 * k.B * tr * tr;
            return ttr + tint;
          }},
      model);
}

double kinetic_energy_alt(const KineticModel& model, const Configuration& c,
                          const VelocityState& vel, const MetricTensor& eta,
                          const MetricTensor& g) {
  require_config(c, "kinetic_energy_alt");
  int n = c.phi.dim();
  require_velocity(vel, n, "kinetic_energy_alt");
  require_metrics(eta, g, n, "kinetic_energy_alt");
  validate_model(model, n);

  Mat phi_inv = checked_inverse(c.phi.matrix());

  return std::visit(
      overloaded{
          [&](const DAlembert& k) {
            // Hatted rewriting: pull everything back through phi.
            Vec vhat = phi_inv * vel.v;
            Mat ohat = phi_inv * vel.V.matrix();
            Mat gmat =
                c.phi.matrix().transpose() * g.components() * c.phi.matrix();
            double ttr = 0.5 * k.m * vhat.dot(gmat * vhat);
            double tint =
                0.5 * (ohat.transpose() * gmat * ohat * k.J).trace();
            return ttr + tint;
          },
          [&](const LeftAffine& k) {
            // Spatial rewriting through the inverse deformation tensor.
            Mat cmat = phi_inv.transpose() * eta.components() * phi_inv;
            Mat cinv =
                c.phi.matrix() * eta.inverse() * c.phi.matrix().transpose();
            Mat omega = vel.V.matrix() * phi_inv;
            double ttr = 0.5 * k.m * vel.v.dot(cmat * vel.v);
            double tint;
            if (k.L) {
              Mat ohat = phi_inv * omega * c.phi.matrix();
              tint = rank4_quadratic(*k.L, ohat);
            } else {
              double tr = omega.trace();
              tint = 0.5 * k.I *
                         (cinv * omega.transpose() * cmat * omega).trace() +
                     0.5 * k.A * (omega * omega).trace() +
                     0.5 * k.B * tr * tr;
            }
            return ttr + tint;
          },
          [&](const RightAffine& k) {
            // Hatted rewriting through the deformation tensor.
            Vec vhat = phi_inv * vel.v;
            Mat ohat = phi_inv * vel.V.matrix();
            Mat gmat =
                c.phi.matrix().transpose() * g.components() * c.phi.matrix();
            Mat ginv = checked_inverse(0.5 * (gmat + gmat.transpose()).eval());
            double ttr = 0.5 * k.m * vhat.dot(gmat * vhat);
            double tr = ohat.trace();
            double tint =
                0.5 * k.I * (ginv * ohat.transpose() * gmat * ohat).trace() +
                0.5 * k.A * (ohat * ohat).trace() + 0.5 * k.B * tr * tr;
            return ttr + tint;
          },
          [&](const IsometricGeneral& k) {
            // Spatial form over g and the inverse deformation tensor.
            Mat cmat = phi_inv.transpose() * eta.components() * phi_inv;
            Mat cinv =
                c.phi.matrix() * eta.inverse() * c.phi.matrix().transpose();
            Mat omega = vel.V.matrix() * phi_inv;
            Mat ot = omega.transpose();
            double ttr = 0.5 * k.m1 * vel.v.dot(g.components() * vel.v) +
                         0.5 * k.m2 * vel.v.dot(cmat * vel.v);
            double tint =
                0.5 * (k.I1 * (ot * g.components() * omega * g.inverse())
                                  .trace() +
                       k.I2 * (ot * cmat * omega * cinv).trace() +
                       k.I3 * (ot * g.components() * omega * cinv).trace() +
                       k.I4 * (ot * cmat * omega * g.inverse()).trace());
            double tr = omega.trace();
            tint += 0.5 * k.A * (omega * omega).trace() + 0.5 * k.B * tr * tr;
            return ttr + tint;
          }},
      model);
}

Mat mass_matrix(const KineticModel& model, const Configuration& c,
                const MetricTensor& eta, const MetricTensor& g) {
  require_config(c, "mass_matrix");
  int n = c.phi.dim();
  require_metrics(eta, g, n, "mass_matrix");
  validate_model(model, n);

  int m = n + n * n;
  Mat gamma = Mat::Zero(m, m);

  std::visit(
      overloaded{
          [&](const DAlembert& k) {
            gamma.topLeftCorner(n, n) = k.m * g.components();
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a)
                for (int j = 0; j < n; ++j)
                  for (int b = 0; b < n; ++b)
                    gamma(phi_slot(n, i, a), phi_slot(n, j, b)) =
                        g.components()(i, j) * k.J(a, b);
          },
          [&](const LeftAffine& k) {
            Mat phi_inv = checked_inverse(c.phi.matrix());
            Mat cmat = phi_inv.transpose() * eta.components() * phi_inv;
            gamma.topLeftCorner(n, n) = k.m * cmat;
            Mat L = k.L ? *k.L
                        : isotropic_rank4(k.I, k.A, k.B, eta.components(),
                                          eta.inverse());
            // Hatted velocities transform on their upper index:
            // Ohat^M_A = phi^{-1M}_i V^i_A.
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a)
                for (int j = 0; j < n; ++j)
                  for (int b = 0; b < n; ++b) {
                    double s = 0.0;
                    for (int u = 0; u < n; ++u)
                      for (int w = 0; w < n; ++w)
                        s += L(u * n + a, w * n + b) * phi_inv(u, i) *
                             phi_inv(w, j);
                    gamma(phi_slot(n, i, a), phi_slot(n, j, b)) = s;
                  }
          },
          [&](const RightAffine& k) {
            Mat phi_inv = checked_inverse(c.phi.matrix());
            gamma.topLeftCorner(n, n) = k.m * g.components();
            Mat L =
                isotropic_rank4(k.I, k.A, k.B, g.components(), g.inverse());
            // Spatial velocities transform on their lower index:
            // Omega^i_j = V^i_A phi^{-1A}_j.
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a)
                for (int j = 0; j < n; ++j)
                  for (int b = 0; b < n; ++b) {
                    double s = 0.0;
                    for (int u = 0; u < n; ++u)
                      for (int w = 0; w < n; ++w)
                        s += L(i * n + u, j * n + w) * phi_inv(a, u) *
                             phi_inv(b, w);
                    gamma(phi_slot(n, i, a), phi_slot(n, j, b)) = s;
                  }
          },
          [&](const IsometricGeneral& k) {
            Mat phi_inv = checked_inverse(c.phi.matrix());
            Mat cmat = phi_inv.transpose() * eta.components() * phi_inv;
            Mat gmat =
                c.phi.matrix().transpose() * g.components() * c.phi.matrix();
            gmat = 0.5 * (gmat + gmat.transpose()).eval();
            Mat ginv = checked_inverse(gmat);
            gamma.topLeftCorner(n, n) =
                k.m1 * g.components() + k.m2 * cmat;
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a)
                for (int j = 0; j < n; ++j)
                  for (int b = 0; b < n; ++b)
                    gamma(phi_slot(n, i, a), phi_slot(n, j, b)) =
                        k.I1 * g.components()(i, j) * ginv(a, b) +
                        k.I2 * cmat(i, j) * eta.inverse()(a, b) +
                        k.I3 * g.components()(i, j) * eta.inverse()(a, b) +
                        k.I4 * cmat(i, j) * ginv(a, b) +
                        k.A * phi_inv(a, j) * phi_inv(b, i) +
                        k.B * phi_inv(a, i) * phi_inv(b, j);
          }},
      model);

  return 0.5 * (gamma + gamma.transpose()).eval();
}

PhaseState legendre(const KineticModel& model, const Configuration& c,
                    const VelocityState& vel, const MetricTensor& eta,
                    const MetricTensor& g) {
  int n = c.phi.dim();
  require_velocity(vel, n, "legendre");
  Mat gamma = mass_matrix(model, c, eta, g);
  int m = n + n * n;
  Vec qdot(m);
  qdot.head(n) = vel.v;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      qdot(phi_slot(n, i, a)) = vel.V.matrix()(i, a);
  Vec w = gamma * qdot;
  Vec p = w.head(n);
  Mat P(n, n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) P(a, i) = w(phi_slot(n, i, a));
  return PhaseState{c.x, c.phi, p, LinMap(P, tag::mixed_UV)};
}

VelocityState legendre_inverse(const KineticModel& model,
                               const Configuration& c, const Vec& p,
                               const LinMap& P, const MetricTensor& eta,
                               const MetricTensor& g) {
  int n = c.phi.dim();
  if (!(P.variance() == tag::mixed_UV))
    throw TagMismatch("legendre_inverse: P must carry the U<-V tag");
  require_same_dim(P.dim(), n, "legendre_inverse");
  if (p.size() != n)
    throw DimensionMismatch("legendre_inverse: linear momentum dimension");
  Mat gamma = mass_matrix(model, c, eta, g);
  Eigen::FullPivLU<Mat> lu(gamma);
  if (!lu.isInvertible())
    throw SingularInertia(
        "mass matrix is singular at this configuration (degenerate inertial "
        "parameters)");
  int m = n + n * n;
  Vec w(m);
  w.head(n) = p;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) w(phi_slot(n, i, a)) = P.matrix()(a, i);
  Vec qdot = lu.solve(w);
  Vec v = qdot.head(n);
  Mat V(n, n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) V(i, a) = qdot(phi_slot(n, i, a));
  return VelocityState{v, LinMap(V, tag::mixed_VU)};
}

double kinetic_energy_momenta(const KineticModel& model,
                              const Configuration& c, const Vec& p,
                              const LinMap& P, const MetricTensor& eta,
                              const MetricTensor& g) {
  VelocityState vel = legendre_inverse(model, c, p, P, eta, g);
  // Euler's theorem for the quadratic models: T = (p.v + Tr(P V)) / 2.
  return 0.5 * (p.dot(vel.v) + (P.matrix() * vel.V.matrix()).trace());
}

Vec pack_state(const ChartLayout& chart,
               const std::vector<PhaseState>& bodies) {
  require_chart(chart, "pack_state");
  if (static_cast<int>(bodies.size()) != chart.nbodies)
    throw DimensionMismatch("pack_state: body count does not match the chart");
  Vec z(chart.size());
  for (int k = 0; k < chart.nbodies; ++k) {
    const PhaseState& s = bodies[k];
    require_phase(s, "pack_state");
    require_same_dim(s.phi.dim(), chart.n, "pack_state");
    for (int i = 0; i < chart.n; ++i) {
      z(chart.q_x(k, i)) = s.x(i);
      z(chart.p_lin(k, i)) = s.p(i);
      for (int a = 0; a < chart.n; ++a) {
        z(chart.q_phi(k, i, a)) = s.phi.matrix()(i, a);
        z(chart.p_int(k, i, a)) = s.P.matrix()(a, i);
      }
    }
  }
  return z;
}

std::vector<PhaseState> unpack_state(const ChartLayout& chart, const Vec& z) {
  require_chart(chart, "unpack_state");
  if (z.size() != chart.size())
    throw DimensionMismatch("unpack_state: flat state size does not match");
  std::vector<PhaseState> bodies;
  bodies.reserve(chart.nbodies);
  for (int k = 0; k < chart.nbodies; ++k) {
    Configuration c = config_at(chart, z, k);
    Vec p;
    Mat P;
    momenta_at(chart, z, k, p, P);
    bodies.push_back(PhaseState{c.x, c.phi, p, LinMap(P, tag::mixed_UV)});
  }
  return bodies;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& z) {
  if (!f) throw ValidationError("fd_gradient: missing value function");
  Vec grad(z.size());
  Vec zp = z;
  for (int mu = 0; mu < z.size(); ++mu) {
    double base = z(mu);
    double h = fd_step(base);
    zp(mu) = base + h;
    double fp = f(zp);
    zp(mu) = base - h;
    double fm = f(zp);
    zp(mu) = base;
    grad(mu) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

Vec phase_gradient(const PhaseFunction& f, const Vec& z) {
  if (f.gradient) {
    Vec grad = f.gradient(z);
    if (grad.size() != z.size())
      throw DimensionMismatch("phase_gradient: gradient size mismatch");
    return grad;
  }
  return fd_gradient(f.value, z);
}

double poisson_bracket(const PhaseFunction& F, const PhaseFunction& G,
                       const Vec& z) {
  if (z.size() % 2 != 0)
    throw DimensionMismatch(
        "poisson_bracket: phase vector must split into (q, p) halves");
  int half = static_cast<int>(z.size()) / 2;
  Vec gf = phase_gradient(F, z);
  Vec gg = phase_gradient(G, z);
  double sum = 0.0;
  for (int mu = 0; mu < half; ++mu)
    sum += gf(mu) * gg(half + mu) - gf(half + mu) * gg(mu);
  return sum;
}

double poisson_bracket(const PhaseFunction& F, const PhaseFunction& G,
                       const PhaseState& state) {
  require_phase(state, "poisson_bracket");
  ChartLayout chart{1, state.phi.dim()};
  return poisson_bracket(F, G, pack_state(chart, {state}));
}

PhaseFunction gen_position(const ChartLayout& chart, int body, int i) {
  require_body(chart, body, "gen_position");
  require_component(i, chart.n, "gen_position");
  int slot = chart.q_x(body, i);
  return PhaseFunction{
      [slot](const Vec& z) { return z(slot); },
      [slot](const Vec& z) {
        Vec grad = Vec::Zero(z.size());
        grad(slot) = 1.0;
        return grad;
      }};
}

PhaseFunction gen_momentum(const ChartLayout& chart, int body, int i) {
  require_body(chart, body, "gen_momentum");
  require_component(i, chart.n, "gen_momentum");
  int slot = chart.p_lin(body, i);
  return PhaseFunction{
      [slot](const Vec& z) { return z(slot); },
      [slot](const Vec& z) {
        Vec grad = Vec::Zero(z.size());
        grad(slot) = 1.0;
        return grad;
      }};
}

PhaseFunction gen_spin(const ChartLayout& chart, int body, int i, int j) {
  require_body(chart, body, "gen_spin");
  require_component(i, chart.n, "gen_spin");
  require_component(j, chart.n, "gen_spin");
  return PhaseFunction{
      [chart, body, i, j](const Vec& z) {
        double s = 0.0;
        for (int a = 0; a < chart.n; ++a)
          s += z(chart.q_phi(body, i, a)) * z(chart.p_int(body, j, a));
        return s;
      },
      [chart, body, i, j](const Vec& z) {
        Vec grad = Vec::Zero(z.size());
        for (int a = 0; a < chart.n; ++a) {
          grad(chart.q_phi(body, i, a)) += z(chart.p_int(body, j, a));
          grad(chart.p_int(body, j, a)) += z(chart.q_phi(body, i, a));
        }
        return grad;
      }};
}

PhaseFunction gen_spin_hat(const ChartLayout& chart, int body, int a, int b) {
  require_body(chart, body, "gen_spin_hat");
  require_component(a, chart.n, "gen_spin_hat");
  require_component(b, chart.n, "gen_spin_hat");
  return PhaseFunction{
      [chart, body, a, b](const Vec& z) {
        double s = 0.0;
        for (int i = 0; i < chart.n; ++i)
          s += z(chart.p_int(body, i, a)) * z(chart.q_phi(body, i, b));
        return s;
      },
      [chart, body, a, b](const Vec& z) {
        Vec grad = Vec::Zero(z.size());
        for (int i = 0; i < chart.n; ++i) {
          grad(chart.p_int(body, i, a)) += z(chart.q_phi(body, i, b));
          grad(chart.q_phi(body, i, b)) += z(chart.p_int(body, i, a));
        }
        return grad;
      }};
}

PhaseFunction gen_p_hat(const ChartLayout& chart, int body, int a) {
  require_body(chart, body, "gen_p_hat");
  require_component(a, chart.n, "gen_p_hat");
  return PhaseFunction{
      [chart, body, a](const Vec& z) {
        double s = 0.0;
        for (int i = 0; i < chart.n; ++i)
          s += z(chart.p_lin(body, i)) * z(chart.q_phi(body, i, a));
        return s;
      },
      [chart, body, a](const Vec& z) {
        Vec grad = Vec::Zero(z.size());
        for (int i = 0; i < chart.n; ++i) {
          grad(chart.p_lin(body, i)) += z(chart.q_phi(body, i, a));
          grad(chart.q_phi(body, i, a)) += z(chart.p_lin(body, i));
        }
        return grad;
      }};
}

PhaseFunction gen_lambda(const ChartLayout& chart, int body, int i, int j,
                         const Vec& origin) {
  require_body(chart, body, "gen_lambda");
  require_component(i, chart.n, "gen_lambda");
  require_component(j, chart.n, "gen_lambda");
  if (origin.size() != chart.n)
    throw DimensionMismatch("gen_lambda: origin dimension");
  double oi = origin(i);
  return PhaseFunction{
      [chart, body, i, j, oi](const Vec& z) {
        return (z(chart.q_x(body, i)) - oi) * z(chart.p_lin(body, j));
      },
      [chart, body, i, j, oi](const Vec& z) {
        Vec grad = Vec::Zero(z.size());
        grad(chart.q_x(body, i)) += z(chart.p_lin(body, j));
        grad(chart.p_lin(body, j)) += z(chart.q_x(body, i)) - oi;
        return grad;
      }};
}

PhaseFunction gen_j_total(const ChartLayout& chart, int body, int i, int j,
                          const Vec& origin) {
  PhaseFunction lam = gen_lambda(chart, body, i, j, origin);
  PhaseFunction spin = gen_spin(chart, body, i, j);
  return PhaseFunction{
      [lam, spin](const Vec& z) { return lam.value(z) + spin.value(z); },
      [lam, spin](const Vec& z) {
        return (lam.gradient(z) + spin.gradient(z)).eval();
      }};
}

PhaseFunction HamiltonianBase::as_phase_function() const {
  return PhaseFunction{
      [this](const Vec& z) { return energy(z); },
      [this](const Vec& z) {
        int half = chart().half();
        Vec grad(2 * half);
        grad.head(half) = grad_q(z);
        grad.tail(half) = grad_p(z);
        return grad;
      }};
}

CanonicalHamiltonian::CanonicalHamiltonian(
    std::vector<KineticModel> models, MetricTensor eta, MetricTensor g,
    std::optional<PotentialFunction> potential)
    : models_(std::move(models)),
      eta_(std::move(eta)),
      g_(std::move(g)),
      potential_(std::move(potential)) {
  if (models_.empty())
    throw ValidationError("CanonicalHamiltonian: at least one body required");
  int n = eta_.dim();
  require_metrics(eta_, g_, n, "CanonicalHamiltonian");
  for (const KineticModel& model : models_) validate_model(model, n);
  if (potential_ && !potential_->value)
    throw ValidationError(
        "CanonicalHamiltonian: potential needs a value function");
  chart_ = ChartLayout{static_cast<int>(models_.size()), n};
}

double CanonicalHamiltonian::kinetic(const Vec& z) const {
  if (z.size() != chart_.size())
    throw DimensionMismatch("CanonicalHamiltonian: flat state size");
  double total = 0.0;
  for (int k = 0; k < chart_.nbodies; ++k) {
    Configuration c = config_at(chart_, z, k);
    Vec p;
    Mat P;
    momenta_at(chart_, z, k, p, P);
    try {
      total += kinetic_energy_momenta(models_[k], c, p,
                                      LinMap(P, tag::mixed_UV), eta_, g_);
    } catch (const SingularInertia& e) {
      throw SingularInertia("body " + std::to_string(k) + ": " + e.what());
    }
  }
  return total;
}

double CanonicalHamiltonian::potential(const Vec& z) const {
  if (z.size() != chart_.size())
    throw DimensionMismatch("CanonicalHamiltonian: flat state size");
  if (!potential_) return 0.0;
  return potential_->value(z.head(chart_.half()));
}

double CanonicalHamiltonian::energy(const Vec& z) const {
  return kinetic(z) + potential(z);
}

Vec CanonicalHamiltonian::grad_p(const Vec& z) const {
  if (z.size() != chart_.size())
    throw DimensionMismatch("CanonicalHamiltonian: flat state size");
  Vec out = Vec::Zero(chart_.half());
  for (int k = 0; k < chart_.nbodies; ++k) {
    Configuration c = config_at(chart_, z, k);
    Vec p;
    Mat P;
    momenta_at(chart_, z, k, p, P);
    std::optional<VelocityState> vel;
    try {
      vel = legendre_inverse(models_[k], c, p, LinMap(P, tag::mixed_UV), eta_,
                             g_);
    } catch (const SingularInertia& e) {
      throw SingularInertia("body " + std::to_string(k) + ": " + e.what());
    }
    for (int i = 0; i < chart_.n; ++i) {
      out(chart_.q_x(k, i)) = vel->v(i);
      for (int a = 0; a < chart_.n; ++a)
        out(chart_.q_phi(k, i, a)) = vel->V.matrix()(i, a);
    }
  }
  return out;
}

Vec CanonicalHamiltonian::grad_q(const Vec& z) const {
  if (z.size() != chart_.size())
    throw DimensionMismatch("CanonicalHamiltonian: flat state size");
  Vec out = Vec::Zero(chart_.half());

  // Kinetic part: zero for configuration-independent mass matrices, central
  // finite differences over the body's own configuration block otherwise.
  Vec zp = z;
  for (int k = 0; k < chart_.nbodies; ++k) {
    if (std::holds_alternative<DAlembert>(models_[k])) continue;
    Vec p;
    Mat P;
    momenta_at(chart_, z, k, p, P);
    LinMap Pmap(P, tag::mixed_UV);
    int base_index = k * chart_.block();
    for (int slot = 0; slot < chart_.block(); ++slot) {
      int mu = base_index + slot;
      double base = z(mu);
      double h = fd_step(base);
      double fp, fm;
      try {
        zp(mu) = base + h;
        fp = kinetic_energy_momenta(models_[k], config_at(chart_, zp, k), p,
                                    Pmap, eta_, g_);
        zp(mu) = base - h;
        fm = kinetic_energy_momenta(models_[k], config_at(chart_, zp, k), p,
                                    Pmap, eta_, g_);
      } catch (const SingularInertia& e) {
        zp(mu) = base;
        throw SingularInertia("body " + std::to_string(k) + ": " + e.what());
      }
      zp(mu) = base;
      out(mu) += (fp - fm) / (2.0 * h);
    }
  }

  if (potential_) {
    Vec q = z.head(chart_.half());
    Vec vgrad = potential_->gradient ? potential_->gradient(q)
                                     : fd_gradient(potential_->value, q);
    if (vgrad.size() != chart_.half())
      throw DimensionMismatch(
          "CanonicalHamiltonian: potential gradient size mismatch");
    out += vgrad;
  }
  return out;
}

Vec hamilton_rhs(const HamiltonianBase& H, const Vec& z) {
  int half = H.chart().half();
  if (z.size() != 2 * half)
    throw DimensionMismatch("hamilton_rhs: flat state size");
  Vec zdot(2 * half);
  zdot.head(half) = H.grad_p(z);
  zdot.tail(half) = -H.grad_q(z);
  return zdot;
}

Vec step(Integrator method, const HamiltonianBase& H, const Vec& z,
         double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ValidationError("step: dt must be positive");
  switch (method) {
    case Integrator::rk4: {
      Vec k1 = hamilton_rhs(H, z);
      Vec k2 = hamilton_rhs(H, z + (0.5 * dt) * k1);
      Vec k3 = hamilton_rhs(H, z + (0.5 * dt) * k2);
      Vec k4 = hamilton_rhs(H, z + dt * k3);
      return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    case Integrator::implicit_midpoint: {
      // Fixed-point iteration with a scale-aware residual target.
      double tol = 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff());
      Vec y = z + dt * hamilton_rhs(H, z);
      for (int iter = 0; iter < 50; ++iter) {
        Vec ynew = z + dt * hamilton_rhs(H, 0.5 * (z + y));
        double res = (ynew - y).cwiseAbs().maxCoeff();
        y = ynew;
        if (res <= tol) return y;
      }
      throw NonConvergence(
          "implicit midpoint fixed point did not converge in 50 iterations");
    }
  }
  throw ValidationError("step: unknown integrator");
}

PhaseState step(Integrator method, const HamiltonianBase& H,
                const PhaseState& state, double dt) {
  if (H.chart().nbodies != 1)
    throw ValidationError(
        "step: the single-body overload needs a one-body chart");
  Vec z = pack_state(H.chart(), {state});
  return unpack_state(H.chart(), step(method, H, z, dt))[0];
}

Trajectory simulate(Integrator method, const HamiltonianBase& H, const Vec& z0,
                    double dt, double t_end, int output_stride) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ValidationError("simulate: dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end))
    throw ValidationError("simulate: t_end must be non-negative");
  if (output_stride < 1)
    throw ValidationError("simulate: output_stride must be positive");
  long long nsteps = std::llround(t_end / dt);
  Trajectory traj;
  Vec z = z0;
  traj.samples.push_back(TrajectorySample{0.0, z, H.energy(z)});
  for (long long k = 1; k <= nsteps; ++k) {
    z = step(method, H, z, dt);
    if (k % output_stride == 0 || k == nsteps)
      traj.samples.push_back(
          TrajectorySample{static_cast<double>(k) * dt, z, H.energy(z)});
  }
  return traj;
}

}  // namespace abd
