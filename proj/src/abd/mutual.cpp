#include <abd/mutual.hpp>

#include "internal.hpp"

#include <cmath>

namespace abd {

namespace {

void require_pair(const LinMap& psi, const LinMap& phi, const char* what) {
  if (!(psi.variance() == tag::mixed_VU) || !(phi.variance() == tag::mixed_VU))
    throw TagMismatch(std::string(what) + ": both placements must carry the mixed V<-U tag");
  require_same_dim(psi.dim(), phi.dim(), what);
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

const LinMap& MutualDisplacement::alpha() const {
  if (!alpha_opt) throw LogUndefined("MutualDisplacement: Gamma has no principal log");
  return *alpha_opt;
}

const LinMap& MutualDisplacement::beta() const {
  if (!beta_opt) throw LogUndefined("MutualDisplacement: Sigma_disp has no principal log");
  return *beta_opt;
}

const LinMap& MutualTensors::C_mut() const {
  if (!C_mut_opt) throw SingularMap("MutualTensors: a placement is singular, C_mut undefined");
  return *C_mut_opt;
}

const LinMap& MutualTensors::C_mut_hat() const {
  if (!C_mut_hat_opt)
    throw SingularMap("MutualTensors: a placement is singular, C_mut_hat undefined");
  return *C_mut_hat_opt;
}

const LinMap& MutualTensors::C_mut_tilde() const {
  if (!C_mut_tilde_opt)
    throw SingularMap("MutualTensors: a placement is singular, C_mut_tilde undefined");
  return *C_mut_tilde_opt;
}

MutualDisplacement mutual_displacement(const LinMap& psi, const LinMap& phi) {
  require_pair(psi, phi, "mutual_displacement");
  if (nearly_singular(phi.matrix()))
    throw SingularMap("mutual_displacement: phi is singular");
  const int n = psi.dim();
  LinMap gamma = psi.inverse() * phi;
  LinMap sigma = phi * psi.inverse();

  MutualDisplacement out{gamma,
                         sigma,
                         gamma - LinMap::identity(n, tag::endo_U),
                         sigma - LinMap::identity(n, tag::endo_V),
                         std::nullopt,
                         std::nullopt};
  try {
    out.alpha_opt = mat_log(gamma);
  } catch (const LogUndefined&) {
  }
  try {
    out.beta_opt = mat_log(sigma);
  } catch (const LogUndefined&) {
  }
  return out;
}

MutualTensors mutual_tensors(const LinMap& psi, const LinMap& phi, const MetricTensor& eta,
                             const MetricTensor& g) {
  require_pair(psi, phi, "mutual_tensors");
  require_metrics(eta, g, psi.dim(), "mutual_tensors");
  const Mat& ei = eta.inverse();

  Mat gm = psi.matrix().transpose() * g.components() * phi.matrix();
  Mat jm = psi.matrix() * ei * phi.matrix().transpose();

  MutualTensors out{LinMap(gm, tag::covariant_UU),
                    LinMap(ei * gm, tag::endo_U),
                    LinMap(ei * gm * ei, tag::contravariant_UU),
                    LinMap(jm, tag::contravariant_VV),
                    std::nullopt,
                    std::nullopt,
                    std::nullopt};
  if (nearly_singular(psi.matrix()) || nearly_singular(phi.matrix())) return out;

  Mat cm = phi.matrix().inverse().transpose() * eta.components() * psi.matrix().inverse();
  const Mat& gi = g.inverse();
  out.C_mut_opt = LinMap(cm, tag::covariant_VV);
  out.C_mut_hat_opt = LinMap(gi * cm, tag::endo_V);
  out.C_mut_tilde_opt = LinMap(gi * cm * gi, tag::contravariant_VV);
  return out;
}

std::vector<double> affine_invariants(const LinMap& psi, const LinMap& phi, int count) {
  require_pair(psi, phi, "affine_invariants");
  const int c = detail::resolve_count(count, psi.dim(), "affine_invariants");
  if (nearly_singular(phi.matrix()))
    throw SingularMap("affine_invariants: phi is singular");
  Mat pinv = checked_inverse(psi.matrix());
  Mat gamma = pinv * phi.matrix();
  Mat sigma = phi.matrix() * pinv;

  std::vector<double> mg = detail::power_traces(gamma, c);
  std::vector<double> ms = detail::power_traces(sigma, c);
  for (int a = 0; a < c; ++a) {
    double scale = std::max({1.0, std::abs(mg[a]), std::abs(ms[a])});
    if (std::abs(mg[a] - ms[a]) > 1e-10 * scale)
      throw Error("affine_invariants: material and spatial traces disagree at order " +
                  std::to_string(a + 1));
  }
  return mg;
}

std::vector<double> mutual_metric_invariants(const LinMap& psi, const LinMap& phi,
                                             const MetricTensor& eta, const MetricTensor& g,
                                             int count) {
  require_pair(psi, phi, "mutual_metric_invariants");
  require_metrics(eta, g, psi.dim(), "mutual_metric_invariants");
  const int c = detail::resolve_count(count, psi.dim(), "mutual_metric_invariants");
  Mat ghat = eta.inverse() * psi.matrix().transpose() * g.components() * phi.matrix();
  return detail::power_traces(ghat, c);
}

}  // namespace abd
