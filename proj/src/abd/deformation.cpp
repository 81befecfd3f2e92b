#include <abd/deformation.hpp>

#include "internal.hpp"

namespace abd {

namespace {

void require_placement(const LinMap& phi, const MetricTensor* eta, const MetricTensor* g,
                       const char* what) {
  if (!(phi.variance() == tag::mixed_VU))
    throw TagMismatch(std::string(what) + ": placement must carry the mixed V<-U tag, got " +
                      variance_name(phi.variance()));
  if (eta) {
    if (eta->space() != Space::U)
      throw TagMismatch(std::string(what) + ": material metric must live on U");
    require_same_dim(phi.dim(), eta->dim(), what);
  }
  if (g) {
    if (g->space() != Space::V)
      throw TagMismatch(std::string(what) + ": spatial metric must live on V");
    require_same_dim(phi.dim(), g->dim(), what);
  }
}

}  // namespace

const LinMap& GreenFamily::G_inv() const {
  if (!G_inv_opt) throw SingularMap("GreenFamily: G is singular, no inverse");
  return *G_inv_opt;
}

const LinMap& GreenFamily::log_strain() const {
  if (!log_strain_opt)
    throw LogUndefined("GreenFamily: spectrum of G_hat is not strictly positive");
  return *log_strain_opt;
}

const LinMap& CauchyFamily::C() const {
  if (!C_opt) throw SingularMap("CauchyFamily: psi is singular, C undefined");
  return *C_opt;
}

const LinMap& CauchyFamily::C_hat() const {
  if (!C_hat_opt) throw SingularMap("CauchyFamily: psi is singular, C_hat undefined");
  return *C_hat_opt;
}

const LinMap& CauchyFamily::C_tilde() const {
  if (!C_tilde_opt) throw SingularMap("CauchyFamily: psi is singular, C_tilde undefined");
  return *C_tilde_opt;
}

const LinMap& CauchyFamily::e() const {
  if (!e_opt) throw SingularMap("CauchyFamily: psi is singular, e undefined");
  return *e_opt;
}

const LinMap& CauchyFamily::log_strain() const {
  if (!C_opt) throw SingularMap("CauchyFamily: psi is singular, log strain undefined");
  if (!log_strain_opt)
    throw LogUndefined("CauchyFamily: spectrum of C_hat is not strictly positive");
  return *log_strain_opt;
}

LinMap green(const LinMap& phi, const MetricTensor& g) {
  require_placement(phi, nullptr, &g, "green");
  Mat gm = phi.matrix().transpose() * g.components() * phi.matrix();
  gm = 0.5 * (gm + gm.transpose());  // kill rounding asymmetry
  return LinMap(gm, tag::covariant_UU);
}

GreenFamily green_family(const LinMap& phi, const MetricTensor& eta, const MetricTensor& g) {
  require_placement(phi, &eta, &g, "green_family");
  LinMap gt = green(phi, g);
  const Mat& gm = gt.matrix();
  const Mat& ei = eta.inverse();
  Mat e_cov = 0.5 * (gm - eta.components());

  GreenFamily out{
      gt,
      LinMap(ei * gm, tag::endo_U),
      LinMap(ei * gm * ei, tag::contravariant_UU),
      LinMap(e_cov, tag::covariant_UU),
      LinMap(ei * e_cov, tag::endo_U),
      LinMap(ei * e_cov * ei, tag::contravariant_UU),
      std::nullopt,
      std::nullopt,
  };
  if (!nearly_singular(gm)) out.G_inv_opt = LinMap(gm.inverse(), tag::contravariant_UU);
  try {
    out.log_strain_opt = LinMap(0.5 * log_selfadjoint_pos(gm, eta), tag::endo_U);
  } catch (const LogUndefined&) {
    // G_hat has spectrum touching the closed negative axis; leave absent
  }
  return out;
}

CauchyFamily cauchy_family(const LinMap& psi, const MetricTensor& eta, const MetricTensor& g) {
  require_placement(psi, &eta, &g, "cauchy_family");
  Mat j = psi.matrix() * eta.inverse() * psi.matrix().transpose();
  j = 0.5 * (j + j.transpose());

  CauchyFamily out{LinMap(j, tag::contravariant_VV),
                   std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (nearly_singular(psi.matrix())) return out;

  Mat pinv = psi.matrix().inverse();
  Mat c = pinv.transpose() * eta.components() * pinv;
  c = 0.5 * (c + c.transpose());
  const Mat& gi = g.inverse();
  out.C_opt = LinMap(c, tag::covariant_VV);
  out.C_hat_opt = LinMap(gi * c, tag::endo_V);
  out.C_tilde_opt = LinMap(gi * c * gi, tag::contravariant_VV);
  out.e_opt = LinMap(0.5 * (g.components() - c), tag::covariant_VV);
  try {
    out.log_strain_opt = LinMap(-0.5 * log_selfadjoint_pos(c, g), tag::endo_V);
  } catch (const LogUndefined&) {
  }
  return out;
}

std::vector<double> deformation_invariants(const LinMap& psi, const MetricTensor& eta,
                                           const MetricTensor& g, int count) {
  require_placement(psi, &eta, &g, "deformation_invariants");
  const int c = detail::resolve_count(count, psi.dim(), "deformation_invariants");
  Mat ghat = eta.inverse() * psi.matrix().transpose() * g.components() * psi.matrix();
  return detail::power_traces(ghat, c);
}

}  // namespace abd
