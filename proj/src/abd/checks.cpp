#include <abd/checks.hpp>

#include <abd/deformation.hpp>
#include <abd/dynamics.hpp>
#include <abd/kinematics.hpp>
#include <abd/mutual.hpp>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <utility>

namespace abd {

Mat random_gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Mat random_orthogonal(std::mt19937_64& rng, int n) {
  Mat a = random_gaussian(rng, n, n);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  // sign fix makes the draw Haar-distributed
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Mat random_conditioned(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> logsv(std::log(0.1), std::log(10.0));
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = std::exp(logsv(rng));
  return random_orthogonal(rng, n) * d * random_orthogonal(rng, n);
}

Mat random_spd(std::mt19937_64& rng, int n) {
  Mat a = random_conditioned(rng, n);
  return Mat(a * a.transpose());
}

namespace {

// Cholesky factor L with metric = L L^T; definite metrics only.
Mat chol_lower(const MetricTensor& m, const char* what) {
  if (m.pseudo())
    throw ValidationError(std::string(what) + ": random isometries need a definite metric");
  Eigen::LLT<Mat> llt(m.components());
  if (llt.info() != Eigen::Success)
    throw ValidationError(std::string(what) + ": Cholesky factorization failed");
  return llt.matrixL();
}

}  // namespace

Mat random_isometry(std::mt19937_64& rng, const MetricTensor& g) {
  Mat l = chol_lower(g, "random_isometry");
  Mat q = random_orthogonal(rng, g.dim());
  // (L^{-T} Q L^T)^T g (L^{-T} Q L^T) = L Q^T L^{-1} L L^T L^{-T} Q L^T = g
  return l.transpose().template triangularView<Eigen::Upper>().solve(q * l.transpose());
}

Mat random_two_metric_isometry(std::mt19937_64& rng, const MetricTensor& eta,
                               const MetricTensor& g) {
  require_same_dim(eta.dim(), g.dim(), "random_two_metric_isometry");
  Mat lg = chol_lower(g, "random_two_metric_isometry");
  Mat le = chol_lower(eta, "random_two_metric_isometry");
  Mat q = random_orthogonal(rng, g.dim());
  return lg.transpose().template triangularView<Eigen::Upper>().solve(q * le.transpose());
}

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent, reproducible stream per (suite, dimension, trial): trials can
// run in any order or in parallel without changing any draw.
std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t suite, int n, int trial) {
  std::uint64_t key = splitmix64(seed) ^ splitmix64((suite << 40) + (std::uint64_t(n) << 32) +
                                                    std::uint64_t(trial) + 0x51ed2701ull);
  return std::mt19937_64(splitmix64(key));
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

double rel_dev(const Mat& got, const Mat& want) {
  return max_abs(got - want) / (1.0 + max_abs(want));
}

double rel_dev(double got, double want) {
  return std::abs(got - want) / (1.0 + std::abs(want));
}

// Invertible with singular values in [0.5, 2]: conditioning stays mild so
// round-trip identities hold near machine precision.
Mat mild_invertible(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> sv(0.5, 2.0);
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = sv(rng);
  return random_orthogonal(rng, n) * d * random_orthogonal(rng, n);
}

Mat mild_spd(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> ev(0.5, 2.0);
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = ev(rng);
  Mat q = random_orthogonal(rng, n);
  return Mat(q * d * q.transpose());
}

Mat box_mat(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

Vec box_vec(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

LinMap vu(const Mat& m) { return LinMap(m, tag::mixed_VU); }

// The two metric transposes undo each other, and the plain conjugate is an
// involution as well.
double suite_involution(std::mt19937_64& rng, int n) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  LinMap psi = vu(random_conditioned(rng, n));
  LinMap twice = metric_transpose(metric_transpose(psi, eta, g), eta, g);
  double err = rel_dev(twice.matrix(), psi.matrix());
  LinMap conj2 = conjugate(conjugate(psi));
  return std::max(err, rel_dev(conj2.matrix(), psi.matrix()));
}

// Transposition reverses composition: (x psi)^T = psi^T x^T for an
// endomorphism x of V and a placement psi, in both the conjugate and the
// two-metric forms.
double suite_anti_representation(std::mt19937_64& rng, int n) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  Mat x = random_conditioned(rng, n);
  LinMap psi = vu(random_conditioned(rng, n));

  LinMap composed = LinMap(Mat(x * psi.matrix()), tag::mixed_VU);
  Mat lhs = metric_transpose(composed, eta, g).matrix();
  Mat rhs = metric_transpose(psi, eta, g).matrix() *
            endo_metric_transpose(x, g.components(), g.inverse());
  double err = rel_dev(lhs, rhs);

  LinMap xe(x, tag::endo_V);
  LinMap conj_lhs = conjugate(xe * psi);
  LinMap conj_rhs = conjugate(psi) * conjugate(xe);
  return std::max(err, rel_dev(conj_lhs.matrix(), conj_rhs.matrix()));
}

// The metric transpose factors through the index-lowering conjugates: once
// for the map itself and once for its inverse.
double suite_factorization(std::mt19937_64& rng, int n) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  LinMap p = vu(random_conditioned(rng, n));

  LinMap lhs = metric_transpose(p, eta, g);
  LinMap rhs = eta.raising() * g_transpose(p, g);
  double err = rel_dev(lhs.matrix(), rhs.matrix());

  LinMap lhs2 = metric_transpose(p.inverse(), eta, g);
  LinMap rhs2 = g.raising() * eta_transpose_of_inverse(p, eta);
  return std::max(err, rel_dev(lhs2.matrix(), rhs2.matrix()));
}

// Equivariance of the mutual tensors and displacements under left spatial
// and right material actions. `flip` is the harness hook: it negates one
// transported tensor, so a correct engine must report the failure.
double suite_transformation_rules(std::mt19937_64& rng, int n, bool flip) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  LinMap psi = vu(random_conditioned(rng, n));
  LinMap phi = vu(random_conditioned(rng, n));
  MutualTensors mt0 = mutual_tensors(psi, phi, eta, g);
  MutualDisplacement d0 = mutual_displacement(psi, phi);
  double err = 0.0;

  // left isometric action: G and Gamma invariant, Sigma conjugated
  Mat ai = random_isometry(rng, g);
  LinMap psi_l = vu(Mat(ai * psi.matrix()));
  LinMap phi_l = vu(Mat(ai * phi.matrix()));
  MutualTensors mtl = mutual_tensors(psi_l, phi_l, eta, g);
  MutualDisplacement dl = mutual_displacement(psi_l, phi_l);
  Mat g_left = mtl.G_mut.matrix();
  if (flip) g_left = -g_left;
  err = std::max(err, rel_dev(g_left, mt0.G_mut.matrix()));
  err = std::max(err, rel_dev(dl.Gamma.matrix(), d0.Gamma.matrix()));
  err = std::max(err, rel_dev(dl.Sigma_disp.matrix(),
                              Mat(ai * d0.Sigma_disp.matrix() * ai.inverse())));

  // left general-linear action pushes J forward
  Mat agl = random_conditioned(rng, n);
  MutualTensors mtg =
      mutual_tensors(vu(Mat(agl * psi.matrix())), vu(Mat(agl * phi.matrix())), eta, g);
  err = std::max(err, rel_dev(mtg.J_mut.matrix(),
                              Mat(agl * mt0.J_mut.matrix() * agl.transpose())));

  // right general-linear action: G pulled back, Gamma conjugated, Sigma fixed
  Mat bgl = random_conditioned(rng, n);
  LinMap psi_r = vu(Mat(psi.matrix() * bgl));
  LinMap phi_r = vu(Mat(phi.matrix() * bgl));
  MutualTensors mtr = mutual_tensors(psi_r, phi_r, eta, g);
  MutualDisplacement dr = mutual_displacement(psi_r, phi_r);
  err = std::max(err, rel_dev(mtr.G_mut.matrix(),
                              Mat(bgl.transpose() * mt0.G_mut.matrix() * bgl)));
  err = std::max(err, rel_dev(dr.Gamma.matrix(),
                              Mat(bgl.inverse() * d0.Gamma.matrix() * bgl)));
  err = std::max(err, rel_dev(dr.Sigma_disp.matrix(), d0.Sigma_disp.matrix()));

  // right isometric action leaves C and J alone
  Mat bi = random_isometry(rng, eta);
  MutualTensors mti =
      mutual_tensors(vu(Mat(psi.matrix() * bi)), vu(Mat(phi.matrix() * bi)), eta, g);
  err = std::max(err, rel_dev(mti.C_mut().matrix(), mt0.C_mut().matrix()));
  err = std::max(err, rel_dev(mti.J_mut.matrix(), mt0.J_mut.matrix()));
  return err;
}

// M_a is unchanged by any simultaneous invertible left and right action.
double suite_affine_invariance(std::mt19937_64& rng, int n) {
  LinMap psi = vu(random_conditioned(rng, n));
  LinMap phi = vu(random_conditioned(rng, n));
  Mat a = random_conditioned(rng, n);
  Mat b = random_conditioned(rng, n);
  std::vector<double> base = affine_invariants(psi, phi);
  std::vector<double> moved =
      affine_invariants(vu(Mat(a * psi.matrix() * b)), vu(Mat(a * phi.matrix() * b)));
  double err = 0.0;
  for (int k = 0; k < n; ++k) err = std::max(err, rel_dev(moved[k], base[k]));
  return err;
}

// K_a is unchanged by left spatial isometries and right material isometries.
double suite_metric_invariance(std::mt19937_64& rng, int n) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  LinMap psi = vu(random_conditioned(rng, n));
  LinMap phi = vu(random_conditioned(rng, n));
  Mat a = random_isometry(rng, g);
  Mat b = random_isometry(rng, eta);
  std::vector<double> base = mutual_metric_invariants(psi, phi, eta, g);
  std::vector<double> moved = mutual_metric_invariants(
      vu(Mat(a * psi.matrix() * b)), vu(Mat(a * phi.matrix() * b)), eta, g);
  double err = 0.0;
  for (int k = 0; k < n; ++k) err = std::max(err, rel_dev(moved[k], base[k]));
  return err;
}

// Positive powers of the mutual G-hat trace to the same values as the
// matching inverse powers of the mutual C-hat.
double suite_trace_consistency(std::mt19937_64& rng, int n) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  LinMap psi = vu(random_conditioned(rng, n));
  LinMap phi = vu(random_conditioned(rng, n));
  MutualTensors mt = mutual_tensors(psi, phi, eta, g);
  Mat ghat = mt.G_mut_hat.matrix();
  Mat chat_inv = mt.C_mut_hat().matrix().inverse();
  Mat pg = Mat::Identity(n, n);
  Mat pc = Mat::Identity(n, n);
  double err = 0.0;
  for (int a = 1; a <= n; ++a) {
    pg = Mat(pg * ghat);
    pc = Mat(pc * chat_inv);
    err = std::max(err, rel_dev(pg.trace(), pc.trace()));
  }
  return err;
}

// With an isometric first placement the mutual G-hat collapses to the
// relative displacement Gamma; with an isometric second placement the mutual
// C-hat collapses to Sigma.
double suite_isometry_specialization(std::mt19937_64& rng, int n) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);

  LinMap psi_iso = vu(random_two_metric_isometry(rng, eta, g));
  LinMap phi = vu(random_conditioned(rng, n));
  MutualTensors a = mutual_tensors(psi_iso, phi, eta, g);
  MutualDisplacement da = mutual_displacement(psi_iso, phi);
  double err = rel_dev(a.G_mut_hat.matrix(), da.Gamma.matrix());

  LinMap phi_iso = vu(random_two_metric_isometry(rng, eta, g));
  LinMap psi = vu(random_conditioned(rng, n));
  MutualTensors b = mutual_tensors(psi, phi_iso, eta, g);
  MutualDisplacement db = mutual_displacement(psi, phi_iso);
  return std::max(err, rel_dev(b.C_mut_hat().matrix(), db.Sigma_disp.matrix()));
}

PhaseState box_phase(std::mt19937_64& rng, int n) {
  Vec x = box_vec(rng, n);
  LinMap phi(box_mat(rng, n, n), tag::mixed_VU);
  Vec p = box_vec(rng, n);
  LinMap momentum(box_mat(rng, n, n), tag::mixed_UV);
  return PhaseState{std::move(x), std::move(phi), std::move(p), std::move(momentum)};
}

// Closure of the momentum-map component brackets: each bracket of two
// components reproduces the expected linear combination of components.
double suite_bracket_structure(std::mt19937_64& rng, int n) {
  ChartLayout chart{1, n};
  Vec origin = Vec::Zero(n);
  MetricTensor eta = MetricTensor::euclidean(n, Space::U);
  MetricTensor g = MetricTensor::euclidean(n, Space::V);
  PhaseState s = box_phase(rng, n);
  Vec z = pack_state(chart, {s});
  MomentumMaps mm = momentum_maps(s, eta, g, origin);
  const Mat sigma = mm.Spin.matrix();
  const Mat sigma_hat = mm.Spin_hat.matrix();
  const Mat lambda = mm.Lambda.matrix();
  const Mat jtot = mm.J_total.matrix();
  const Vec p_hat = mm.p_hat;
  double err = 0.0;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double canon = poisson_bracket(gen_position(chart, 0, i),
                                     gen_momentum(chart, 0, j), z);
      err = std::max(err, std::abs(canon - (i == j ? 1.0 : 0.0)));
      err = std::max(err, std::abs(poisson_bracket(gen_position(chart, 0, i),
                                                   gen_position(chart, 0, j), z)));
      err = std::max(err, std::abs(poisson_bracket(gen_momentum(chart, 0, i),
                                                   gen_momentum(chart, 0, j), z)));
    }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double want_s =
              (i == l ? sigma(k, j) : 0.0) - (k == j ? sigma(i, l) : 0.0);
          err = std::max(err, std::abs(poisson_bracket(gen_spin(chart, 0, i, j),
                                                       gen_spin(chart, 0, k, l), z) -
                                       want_s));
          double want_h =
              (k == j ? sigma_hat(i, l) : 0.0) - (i == l ? sigma_hat(k, j) : 0.0);
          err = std::max(err,
                         std::abs(poisson_bracket(gen_spin_hat(chart, 0, i, j),
                                                  gen_spin_hat(chart, 0, k, l), z) -
                                  want_h));
          err = std::max(err, std::abs(poisson_bracket(gen_spin(chart, 0, i, j),
                                                       gen_spin_hat(chart, 0, k, l), z)));
          double want_l =
              (i == l ? lambda(k, j) : 0.0) - (k == j ? lambda(i, l) : 0.0);
          err = std::max(
              err, std::abs(poisson_bracket(gen_lambda(chart, 0, i, j, origin),
                                            gen_lambda(chart, 0, k, l, origin), z) -
                            want_l));
          double want_j =
              (i == l ? jtot(k, j) : 0.0) - (k == j ? jtot(i, l) : 0.0);
          err = std::max(
              err, std::abs(poisson_bracket(gen_j_total(chart, 0, i, j, origin),
                                            gen_j_total(chart, 0, k, l, origin), z) -
                            want_j));
        }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double want = (a == c ? -p_hat(b) : 0.0);
        err = std::max(err, std::abs(poisson_bracket(gen_spin_hat(chart, 0, a, b),
                                                     gen_p_hat(chart, 0, c), z) -
                                     want));
      }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double want = (i == k ? s.p(j) : 0.0);
        err = std::max(err,
                       std::abs(poisson_bracket(gen_lambda(chart, 0, i, j, origin),
                                                gen_momentum(chart, 0, k), z) -
                                want));
        err = std::max(err,
                       std::abs(poisson_bracket(gen_j_total(chart, 0, i, j, origin),
                                                gen_momentum(chart, 0, k), z) -
                                want));
      }
  return err;
}

// {F^2, G} = 2 F {F, G} for several generator pairs.
double suite_bracket_chain_rule(std::mt19937_64& rng, int n) {
  ChartLayout chart{1, n};
  Vec origin = Vec::Zero(n);
  PhaseState s = box_phase(rng, n);
  Vec z = pack_state(chart, {s});

  std::vector<std::pair<PhaseFunction, PhaseFunction>> pairs;
  pairs.emplace_back(gen_spin(chart, 0, 0, 1 % n), gen_spin_hat(chart, 0, 1 % n, 0));
  pairs.emplace_back(gen_spin(chart, 0, 0, 0), gen_momentum(chart, 0, n - 1));
  pairs.emplace_back(gen_lambda(chart, 0, 0, 1 % n, origin), gen_spin(chart, 0, 1 % n, 0));
  pairs.emplace_back(gen_position(chart, 0, 0), gen_j_total(chart, 0, 0, n - 1, origin));

  double err = 0.0;
  for (const auto& [f, gfun] : pairs) {
    PhaseFunction fsq{
        [f](const Vec& w) {
          double v = f.value(w);
          return v * v;
        },
        [f](const Vec& w) { return Vec(2.0 * f.value(w) * phase_gradient(f, w)); }};
    double lhs = poisson_bracket(fsq, gfun, z);
    double rhs = 2.0 * f.value(z) * poisson_bracket(f, gfun, z);
    err = std::max(err, std::abs(lhs - rhs));
  }
  return err;
}

std::vector<KineticModel> standard_models(std::mt19937_64& rng, int n) {
  std::vector<KineticModel> models;
  models.push_back(DAlembert{1.7, mild_spd(rng, n)});
  models.push_back(LeftAffine{1.2, 1.4, 0.5, 0.3, {}});
  models.push_back(RightAffine{0.9, 1.1, -0.4, 0.2});
  models.push_back(IsometricGeneral{1.0, 0.4, 1.3, 0.3, 0.15, 0.1, 0.25, 0.1});
  return models;
}

// Velocities -> momenta -> velocities is the identity, and the canonical
// pairing of the momenta with the velocities is twice the kinetic energy.
double suite_legendre_round_trip(std::mt19937_64& rng, int n) {
  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  Configuration c{box_vec(rng, n), LinMap(mild_invertible(rng, n), tag::mixed_VU)};
  VelocityState vel{box_vec(rng, n), LinMap(box_mat(rng, n, n), tag::mixed_VU)};
  double err = 0.0;
  for (const KineticModel& model : standard_models(rng, n)) {
    PhaseState ps = legendre(model, c, vel, eta, g);
    VelocityState back = legendre_inverse(model, c, ps.p, ps.P, eta, g);
    double scale = 1.0 + std::max(vel.v.cwiseAbs().maxCoeff(), max_abs(vel.V.matrix()));
    err = std::max(err, (back.v - vel.v).cwiseAbs().maxCoeff() / scale);
    err = std::max(err, max_abs(back.V.matrix() - vel.V.matrix()) / scale);

    double twice_t = 2.0 * kinetic_energy(model, c, vel, eta, g);
    double pairing = ps.p.dot(vel.v) +
                     (ps.P.matrix().transpose().cwiseProduct(vel.V.matrix())).sum();
    err = std::max(err, rel_dev(pairing, twice_t));
  }
  return err;
}

// Analytic gradients of the component generators and of the canonical
// Hamiltonian's momentum side agree with central finite differences.
double suite_gradient_consistency(std::mt19937_64& rng, int n) {
  ChartLayout chart{1, n};
  Vec origin = Vec::Zero(n);
  PhaseState s = box_phase(rng, n);
  Vec z = pack_state(chart, {s});
  double err = 0.0;

  std::vector<PhaseFunction> gens;
  for (int i = 0; i < n; ++i) {
    gens.push_back(gen_position(chart, 0, i));
    gens.push_back(gen_momentum(chart, 0, i));
    gens.push_back(gen_p_hat(chart, 0, i));
    for (int j = 0; j < n; ++j) {
      gens.push_back(gen_spin(chart, 0, i, j));
      gens.push_back(gen_spin_hat(chart, 0, i, j));
      gens.push_back(gen_lambda(chart, 0, i, j, origin));
      gens.push_back(gen_j_total(chart, 0, i, j, origin));
    }
  }
  for (const PhaseFunction& f : gens) {
    Vec analytic = phase_gradient(f, z);
    Vec fd = fd_gradient(f.value, z);
    err = std::max(err, (analytic - fd).cwiseAbs().maxCoeff());
  }

  MetricTensor eta(mild_spd(rng, n), Space::U);
  MetricTensor g(mild_spd(rng, n), Space::V);
  PhaseState sm = box_phase(rng, n);
  sm.phi = LinMap(mild_invertible(rng, n), tag::mixed_VU);
  Vec zm = pack_state(chart, {sm});
  for (const KineticModel& model : standard_models(rng, n)) {
    CanonicalHamiltonian h({model}, eta, g);
    Vec analytic = h.grad_p(zm);
    Vec fd = fd_gradient([&h](const Vec& w) { return h.energy(w); }, zm);
    err = std::max(err, (analytic - fd.tail(chart.half())).cwiseAbs().maxCoeff());
  }
  return err;
}

}  // namespace

CheckReport run_check_suite(const CheckOptions& options) {
  if (options.dim != 0 && (options.dim < 2 || options.dim > 4))
    throw ValidationError("check: dimension must be between 2 and 4");
  if (options.trials < 1) throw ValidationError("check: trials must be positive");
  if (!(options.tol > 0.0)) throw ValidationError("check: tolerance must be positive");

  const std::vector<int> dims =
      options.dim == 0 ? std::vector<int>{2, 3} : std::vector<int>{options.dim};
  const bool flip = options.inject_flip;

  struct Suite {
    const char* name;
    std::function<double(std::mt19937_64&, int)> run;
  };
  const std::vector<Suite> suites = {
      {"transpose involution", [](std::mt19937_64& r, int n) { return suite_involution(r, n); }},
      {"transpose anti-representation",
       [](std::mt19937_64& r, int n) { return suite_anti_representation(r, n); }},
      {"transpose factorization",
       [](std::mt19937_64& r, int n) { return suite_factorization(r, n); }},
      {"mutual transformation rules",
       [flip](std::mt19937_64& r, int n) { return suite_transformation_rules(r, n, flip); }},
      {"affine invariant invariance",
       [](std::mt19937_64& r, int n) { return suite_affine_invariance(r, n); }},
      {"metric invariant invariance",
       [](std::mt19937_64& r, int n) { return suite_metric_invariance(r, n); }},
      {"metric trace consistency",
       [](std::mt19937_64& r, int n) { return suite_trace_consistency(r, n); }},
      {"isometry specialization",
       [](std::mt19937_64& r, int n) { return suite_isometry_specialization(r, n); }},
      {"bracket structure constants",
       [](std::mt19937_64& r, int n) { return suite_bracket_structure(r, n); }},
      {"bracket chain rule",
       [](std::mt19937_64& r, int n) { return suite_bracket_chain_rule(r, n); }},
      {"legendre round trip",
       [](std::mt19937_64& r, int n) { return suite_legendre_round_trip(r, n); }},
      {"gradient consistency",
       [](std::mt19937_64& r, int n) { return suite_gradient_consistency(r, n); }},
  };

  CheckReport report;
  for (std::size_t sidx = 0; sidx < suites.size(); ++sidx) {
    const Suite& suite = suites[sidx];
    const long long total = static_cast<long long>(dims.size()) * options.trials;
    std::vector<double> errors(static_cast<std::size_t>(total), 0.0);
    std::exception_ptr failure;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long idx = 0; idx < total; ++idx) {
      try {
        const int n = dims[static_cast<std::size_t>(idx) / options.trials];
        const int trial = static_cast<int>(idx % options.trials);
        std::mt19937_64 rng =
            trial_stream(options.seed, static_cast<std::uint64_t>(sidx), n, trial);
        errors[static_cast<std::size_t>(idx)] = suite.run(rng, n);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);

    double max_error = 0.0;
    for (double e : errors) max_error = std::max(max_error, e);
    PropertyResult result;
    result.name = suite.name;
    result.max_error = max_error;
    result.tol = options.tol;
    result.pass = std::isfinite(max_error) && max_error <= options.tol;
    report.all_pass = report.all_pass && result.pass;
    report.properties.push_back(std::move(result));
  }
  return report;
}

std::string format_check_report(const CheckReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-32s  %12s  %9s  %s\n", "property", "max error", "tol",
                "verdict");
  out += line;
  for (const PropertyResult& p : report.properties) {
    std::snprintf(line, sizeof line, "%-32s  %12.5e  %9.2e  %s\n", p.name.c_str(), p.max_error,
                  p.tol, p.pass ? "PASS" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "all properties within tolerance: %s\n",
                report.all_pass ? "yes" : "no");
  out += line;
  return out;
}

}  // namespace abd
