#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <abd/checks.hpp>
#include <abd/deformation.hpp>
#include <abd/mutual.hpp>

using namespace abd;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

MetricTensor eu(int n, Space s) { return MetricTensor::euclidean(n, s); }

LinMap vu(Mat m) { return LinMap(std::move(m), tag::mixed_VU); }

}  // namespace

TEST_CASE("coincident placements have trivial mutual displacement") {
  std::mt19937_64 rng(211);
  for (int t = 0; t < 20; ++t) {
    LinMap psi = vu(random_conditioned(rng, 3));
    MutualDisplacement d = mutual_displacement(psi, psi);
    CHECK(max_abs(d.Gamma.matrix() - Mat::Identity(3, 3)) <= 1e-10);
    CHECK(max_abs(d.Sigma_disp.matrix() - Mat::Identity(3, 3)) <= 1e-10);
    CHECK(max_abs(d.gamma_small.matrix()) <= 1e-10);
    CHECK(max_abs(d.sigma_small.matrix()) <= 1e-10);
    CHECK(max_abs(d.alpha().matrix()) <= 1e-9);
    CHECK(max_abs(d.beta().matrix()) <= 1e-9);
  }
}

TEST_CASE("mutual displacement worked diagonal case") {
  MutualDisplacement d = mutual_displacement(vu(Mat(Mat::Identity(2, 2))), vu(m2(2, 0, 0, 3)));
  CHECK(max_abs(d.Gamma.matrix() - m2(2, 0, 0, 3)) <= 1e-14);
  CHECK(max_abs(d.Sigma_disp.matrix() - m2(2, 0, 0, 3)) <= 1e-14);
  CHECK(d.Gamma.variance() == tag::endo_U);
  CHECK(d.Sigma_disp.variance() == tag::endo_V);
  CHECK(d.alpha().matrix()(0, 0) == doctest::Approx(std::log(2.0)));
  CHECK(d.beta().matrix()(1, 1) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("argument swap inverts the displacements") {
  std::mt19937_64 rng(223);
  for (int t = 0; t < 50; ++t) {
    LinMap psi = vu(random_conditioned(rng, 3));
    LinMap phi = vu(random_conditioned(rng, 3));
    MutualDisplacement ab = mutual_displacement(psi, phi);
    MutualDisplacement ba = mutual_displacement(phi, psi);
    CHECK(max_abs((ab.Gamma * ba.Gamma).matrix() - Mat::Identity(3, 3)) <= 1e-10);
    CHECK(max_abs((ab.Sigma_disp * ba.Sigma_disp).matrix() - Mat::Identity(3, 3)) <= 1e-10);
  }
}

TEST_CASE("mutual displacement flags missing logs and singular inputs") {
  CHECK_THROWS_AS(mutual_displacement(vu(m2(1, 0, 0, 0)), vu(Mat(Mat::Identity(2, 2)))),
                  SingularMap);
  CHECK_THROWS_AS(mutual_displacement(vu(Mat(Mat::Identity(2, 2))), vu(m2(1, 0, 0, 0))),
                  SingularMap);

  // Gamma = -identity has no principal log but the displacement itself exists
  MutualDisplacement d =
      mutual_displacement(vu(Mat(Mat::Identity(2, 2))), vu(Mat(-Mat::Identity(2, 2))));
  CHECK(max_abs(d.Gamma.matrix() + Mat::Identity(2, 2)) <= 1e-14);
  CHECK_FALSE(d.has_alpha());
  CHECK_FALSE(d.has_beta());
  CHECK_THROWS_AS(d.alpha(), LogUndefined);
  CHECK_THROWS_AS(d.beta(), LogUndefined);
}

TEST_CASE("mutual tensors collapse to the one-placement tensors on the diagonal") {
  std::mt19937_64 rng(227);
  for (int t = 0; t < 20; ++t) {
    MetricTensor eta(random_spd(rng, 3), Space::U);
    MetricTensor g(random_spd(rng, 3), Space::V);
    LinMap psi = vu(random_conditioned(rng, 3));
    MutualTensors mt = mutual_tensors(psi, psi, eta, g);
    CHECK(max_abs(mt.G_mut.matrix() - green(psi, g).matrix()) <= 1e-12);
    CHECK(max_abs(mt.J_mut.matrix() - cauchy_family(psi, eta, g).J_push.matrix()) <= 1e-12);
    CHECK(max_abs(mt.C_mut().matrix() - cauchy_family(psi, eta, g).C().matrix()) <= 1e-9);
  }
}

TEST_CASE("mutual tensors worked case and isometry specializations") {
  LinMap psi = vu(Mat(Mat::Identity(2, 2)));
  LinMap phi = vu(m2(2, 0, 0, 3));
  MutualTensors mt = mutual_tensors(psi, phi, eu(2, Space::U), eu(2, Space::V));
  CHECK(max_abs(mt.G_mut_hat.matrix() - m2(2, 0, 0, 3)) <= 1e-14);
  MutualDisplacement d = mutual_displacement(psi, phi);
  CHECK(max_abs(mt.G_mut_hat.matrix() - d.Gamma.matrix()) <= 1e-14);

  // psi isometric: G_mut_hat = Gamma; phi isometric: C_mut_hat = Sigma_disp
  std::mt19937_64 rng(229);
  for (int t = 0; t < 30; ++t) {
    MetricTensor eta(random_spd(rng, 3), Space::U);
    MetricTensor g(random_spd(rng, 3), Space::V);
    LinMap iso = vu(random_two_metric_isometry(rng, eta, g));
    LinMap any = vu(random_conditioned(rng, 3));

    MutualTensors a = mutual_tensors(iso, any, eta, g);
    MutualDisplacement da = mutual_displacement(iso, any);
    CHECK(max_abs(a.G_mut_hat.matrix() - da.Gamma.matrix()) <=
          1e-9 * (1.0 + max_abs(da.Gamma.matrix())));

    MutualTensors b = mutual_tensors(any, iso, eta, g);
    MutualDisplacement db = mutual_displacement(any, iso);
    CHECK(max_abs(b.C_mut_hat().matrix() - db.Sigma_disp.matrix()) <=
          1e-9 * (1.0 + max_abs(db.Sigma_disp.matrix())));
  }
}

TEST_CASE("mutual C inverts mutual J on random invertible pairs") {
  std::mt19937_64 rng(233);
  for (int t = 0; t < 100; ++t) {
    const int n = (t % 2 == 0) ? 2 : 3;
    MetricTensor eta(random_spd(rng, n), Space::U);
    MetricTensor g(random_spd(rng, n), Space::V);
    MutualTensors mt = mutual_tensors(vu(random_conditioned(rng, n)),
                                      vu(random_conditioned(rng, n)), eta, g);
    CHECK(max_abs(mt.J_mut.matrix() * mt.C_mut().matrix() - Mat::Identity(n, n)) <= 1e-9);
  }
}

TEST_CASE("argument swap transposes the mutual tensors") {
  std::mt19937_64 rng(239);
  for (int t = 0; t < 50; ++t) {
    MetricTensor eta(random_spd(rng, 3), Space::U);
    MetricTensor g(random_spd(rng, 3), Space::V);
    LinMap psi = vu(random_conditioned(rng, 3));
    LinMap phi = vu(random_conditioned(rng, 3));
    MutualTensors ab = mutual_tensors(psi, phi, eta, g);
    MutualTensors ba = mutual_tensors(phi, psi, eta, g);

    CHECK(max_abs(ab.G_mut.matrix().transpose() - ba.G_mut.matrix()) <= 1e-12);
    CHECK(max_abs(ab.C_mut().matrix().transpose() - ba.C_mut().matrix()) <= 1e-9);

    // the hat variant swaps under the material metric transpose
    Mat mt = endo_metric_transpose(ab.G_mut_hat.matrix(), eta.components(), eta.inverse());
    CHECK(max_abs(mt - ba.G_mut_hat.matrix()) <= 1e-10 * (1.0 + max_abs(mt)));
  }
}

TEST_CASE("mutual tensors keep the invertible-free fields for singular placements") {
  LinMap sing = vu(m2(1, 0, 0, 0));
  LinMap ok = vu(m2(2, 0, 0, 3));
  MutualTensors mt = mutual_tensors(sing, ok, eu(2, Space::U), eu(2, Space::V));
  CHECK(max_abs(mt.G_mut.matrix() - m2(2, 0, 0, 0)) <= 1e-14);
  CHECK_FALSE(mt.has_C_mut());
  CHECK_THROWS_AS(mt.C_mut(), SingularMap);
  CHECK_THROWS_AS(mt.C_mut_hat(), SingularMap);
  CHECK_THROWS_AS(mt.C_mut_tilde(), SingularMap);
}

TEST_CASE("affine invariants worked cases") {
  std::vector<double> triv = affine_invariants(vu(m2(1, 2, 3, 4)), vu(m2(1, 2, 3, 4)));
  CHECK(triv[0] == doctest::Approx(2.0));
  CHECK(triv[1] == doctest::Approx(2.0));

  std::vector<double> m = affine_invariants(vu(Mat(Mat::Identity(2, 2))), vu(m2(2, 0, 0, 3)));
  REQUIRE(m.size() == 2);
  CHECK(m[0] == doctest::Approx(5.0));
  CHECK(m[1] == doctest::Approx(13.0));

  CHECK_THROWS_AS(affine_invariants(vu(m2(1, 0, 0, 0)), vu(m2(2, 0, 0, 3))), SingularMap);
}

TEST_CASE("affine invariants survive the two-sided group action") {
  std::mt19937_64 rng(241);
  for (int t = 0; t < 100; ++t) {
    LinMap psi = vu(random_conditioned(rng, 3));
    LinMap phi = vu(random_conditioned(rng, 3));
    Mat a = random_conditioned(rng, 3);
    Mat b = random_conditioned(rng, 3);
    std::vector<double> m0 = affine_invariants(psi, phi);
    std::vector<double> m1 = affine_invariants(vu(Mat(a * psi.matrix() * b)),
                                               vu(Mat(a * phi.matrix() * b)));
    for (size_t i = 0; i < m0.size(); ++i)
      CHECK(std::abs(m0[i] - m1[i]) <= 1e-8 * std::max(1.0, std::abs(m0[i])));
  }
}

TEST_CASE("mutual metric invariants worked cases and isometric invariance") {
  std::vector<double> k = mutual_metric_invariants(vu(Mat(Mat::Identity(2, 2))),
                                                   vu(m2(2, 0, 0, 3)), eu(2, Space::U),
                                                   eu(2, Space::V));
  REQUIRE(k.size() == 2);
  CHECK(k[0] == doctest::Approx(5.0));
  CHECK(k[1] == doctest::Approx(13.0));

  std::mt19937_64 rng(251);
  MetricTensor eta(random_spd(rng, 3), Space::U);
  MetricTensor g(random_spd(rng, 3), Space::V);

  LinMap iso = vu(random_two_metric_isometry(rng, eta, g));
  for (double ka : mutual_metric_invariants(iso, iso, eta, g)) CHECK(ka == doctest::Approx(3.0));

  for (int t = 0; t < 100; ++t) {
    LinMap psi = vu(random_conditioned(rng, 3));
    LinMap phi = vu(random_conditioned(rng, 3));
    Mat a = random_isometry(rng, g);
    Mat b = random_isometry(rng, eta);
    std::vector<double> k0 = mutual_metric_invariants(psi, phi, eta, g);
    std::vector<double> k1 = mutual_metric_invariants(vu(Mat(a * psi.matrix() * b)),
                                                      vu(Mat(a * phi.matrix() * b)), eta, g);
    for (size_t i = 0; i < k0.size(); ++i)
      CHECK(std::abs(k0[i] - k1[i]) <= 1e-9 * std::max(1.0, std::abs(k0[i])));
  }
}

TEST_CASE("metric invariants equal inverse-power Cauchy traces when invertible") {
  std::mt19937_64 rng(257);
  for (int t = 0; t < 50; ++t) {
    MetricTensor eta(random_spd(rng, 3), Space::U);
    MetricTensor g(random_spd(rng, 3), Space::V);
    LinMap psi = vu(random_conditioned(rng, 3));
    LinMap phi = vu(random_conditioned(rng, 3));
    MutualTensors mt = mutual_tensors(psi, phi, eta, g);
    std::vector<double> k = mutual_metric_invariants(psi, phi, eta, g);
    Mat chat_inv = mt.C_mut_hat().matrix().inverse();
    Mat p = Mat::Identity(3, 3);
    for (size_t a = 0; a < k.size(); ++a) {
      p = p * chat_inv;
      CHECK(std::abs(k[a] - p.trace()) <= 1e-9 * std::max(1.0, std::abs(k[a])));
    }
  }
}

TEST_CASE("transformation rules for mutual objects") {
  std::mt19937_64 rng(263);
  MetricTensor eta(random_spd(rng, 3), Space::U);
  MetricTensor g(random_spd(rng, 3), Space::V);
  for (int t = 0; t < 100; ++t) {
    LinMap psi = vu(random_conditioned(rng, 3));
    LinMap phi = vu(random_conditioned(rng, 3));
    MutualTensors mt0 = mutual_tensors(psi, phi, eta, g);
    MutualDisplacement d0 = mutual_displacement(psi, phi);

    // left isometric action: G and Gamma invariant, Sigma conjugated
    Mat ai = random_isometry(rng, g);
    LinMap psi_l = vu(Mat(ai * psi.matrix()));
    LinMap phi_l = vu(Mat(ai * phi.matrix()));
    MutualTensors mtl = mutual_tensors(psi_l, phi_l, eta, g);
    MutualDisplacement dl = mutual_displacement(psi_l, phi_l);
    CHECK(max_abs(mtl.G_mut.matrix() - mt0.G_mut.matrix()) <=
          1e-8 * (1.0 + max_abs(mt0.G_mut.matrix())));
    CHECK(max_abs(dl.Gamma.matrix() - d0.Gamma.matrix()) <=
          1e-8 * (1.0 + max_abs(d0.Gamma.matrix())));
    Mat sig_conj = ai * d0.Sigma_disp.matrix() * ai.inverse();
    CHECK(max_abs(dl.Sigma_disp.matrix() - sig_conj) <= 1e-8 * (1.0 + max_abs(sig_conj)));

    // left GL action pushes J forward
    Mat agl = random_conditioned(rng, 3);
    MutualTensors mtg =
        mutual_tensors(vu(Mat(agl * psi.matrix())), vu(Mat(agl * phi.matrix())), eta, g);
    Mat j_push = agl * mt0.J_mut.matrix() * agl.transpose();
    CHECK(max_abs(mtg.J_mut.matrix() - j_push) <= 1e-8 * (1.0 + max_abs(j_push)));

    // right GL action: G pulled back, Gamma conjugated, Sigma invariant
    Mat bgl = random_conditioned(rng, 3);
    LinMap psi_r = vu(Mat(psi.matrix() * bgl));
    LinMap phi_r = vu(Mat(phi.matrix() * bgl));
    MutualTensors mtr = mutual_tensors(psi_r, phi_r, eta, g);
    MutualDisplacement dr = mutual_displacement(psi_r, phi_r);
    Mat g_pull = bgl.transpose() * mt0.G_mut.matrix() * bgl;
    CHECK(max_abs(mtr.G_mut.matrix() - g_pull) <= 1e-8 * (1.0 + max_abs(g_pull)));
    Mat gam_conj = bgl.inverse() * d0.Gamma.matrix() * bgl;
    CHECK(max_abs(dr.Gamma.matrix() - gam_conj) <= 1e-8 * (1.0 + max_abs(gam_conj)));
    CHECK(max_abs(dr.Sigma_disp.matrix() - d0.Sigma_disp.matrix()) <=
          1e-8 * (1.0 + max_abs(d0.Sigma_disp.matrix())));

    // right isometric action leaves C and J alone
    Mat bi = random_isometry(rng, eta);
    MutualTensors mti =
        mutual_tensors(vu(Mat(psi.matrix() * bi)), vu(Mat(phi.matrix() * bi)), eta, g);
    CHECK(max_abs(mti.C_mut().matrix() - mt0.C_mut().matrix()) <=
          1e-8 * (1.0 + max_abs(mt0.C_mut().matrix())));
    CHECK(max_abs(mti.J_mut.matrix() - mt0.J_mut.matrix()) <=
          1e-8 * (1.0 + max_abs(mt0.J_mut.matrix())));
  }
}

TEST_CASE("affine invariants separate pairs with identical metric invariants") {
  // Two pairs with the same K_1..K_n but different M_1: the mutual metric
  // tensor of (S, S^{-1} D) coincides with that of (identity, D) for symmetric
  // S, while Gamma picks up S^{-2}.
  MetricTensor eta = eu(2, Space::U);
  MetricTensor g = eu(2, Space::V);
  LinMap psi1 = vu(Mat(Mat::Identity(2, 2)));
  LinMap phi1 = vu(m2(2, 0, 0, 3));
  Mat s = m2(2, 0, 0, 1);
  LinMap psi2 = vu(s);
  LinMap phi2 = vu(Mat(s.inverse() * m2(2, 0, 0, 3)));

  std::vector<double> k1 = mutual_metric_invariants(psi1, phi1, eta, g);
  std::vector<double> k2 = mutual_metric_invariants(psi2, phi2, eta, g);
  for (size_t i = 0; i < k1.size(); ++i) CHECK(k1[i] == doctest::Approx(k2[i]));

  std::vector<double> ma = affine_invariants(psi1, phi1);
  std::vector<double> mb = affine_invariants(psi2, phi2);
  CHECK(ma[0] == doctest::Approx(5.0));
  CHECK(mb[0] == doctest::Approx(3.5));
  CHECK(std::abs(ma[0] - mb[0]) > 1.0);
}
