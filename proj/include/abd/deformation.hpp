#pragma once

#include <abd/spaces.hpp>

#include <optional>
#include <vector>

namespace abd {

// Deformation state of a single placement phi: U -> V, measured against the
// material metric eta on U and the spatial metric g on V. Every field is
// computed eagerly; the two that need extra hypotheses are stored only when
// those hold and their accessors throw otherwise.
struct GreenFamily {
  LinMap G;        // covariant on U: G_AB = g_ij phi^i_A phi^j_B
  LinMap G_hat;    // endomorphism of U: eta^{-1} G
  LinMap G_tilde;  // contravariant on U: eta^{-1} G eta^{-1}
  LinMap E;        // covariant strain: (G - eta) / 2
  LinMap E_hat;    // endomorphism: eta^{-1} E
  LinMap E_tilde;  // contravariant: eta^{-1} E eta^{-1}
  std::optional<LinMap> G_inv_opt;       // contravariant on U; absent for singular G
  std::optional<LinMap> log_strain_opt;  // endomorphism of U: log(G_hat) / 2

  bool has_G_inv() const { return G_inv_opt.has_value(); }
  bool has_log_strain() const { return log_strain_opt.has_value(); }
  const LinMap& G_inv() const;       // throws SingularMap when absent
  const LinMap& log_strain() const;  // throws LogUndefined when absent
};

// Spatial counterpart for a placement psi. The push-forward J exists for any
// psi, singular ones included; the remaining fields invert psi.
struct CauchyFamily {
  LinMap J_push;  // contravariant on V: J^ij = psi^i_A psi^j_B eta^AB
  std::optional<LinMap> C_opt;        // covariant on V, inverse of J_push
  std::optional<LinMap> C_hat_opt;    // endomorphism of V: g^{-1} C
  std::optional<LinMap> C_tilde_opt;  // contravariant on V: g^{-1} C g^{-1}
  std::optional<LinMap> e_opt;        // covariant strain: (g - C) / 2
  std::optional<LinMap> log_strain_opt;  // endomorphism of V: -log(C_hat) / 2

  bool has_C() const { return C_opt.has_value(); }
  bool has_log_strain() const { return log_strain_opt.has_value(); }
  const LinMap& C() const;  // throws SingularMap when absent
  const LinMap& C_hat() const;
  const LinMap& C_tilde() const;
  const LinMap& e() const;
  const LinMap& log_strain() const;  // SingularMap or LogUndefined
};

// G[phi] alone; phi may be singular.
LinMap green(const LinMap& phi, const MetricTensor& g);

GreenFamily green_family(const LinMap& phi, const MetricTensor& eta, const MetricTensor& g);

CauchyFamily cauchy_family(const LinMap& psi, const MetricTensor& eta, const MetricTensor& g);

// K_a = Tr(G_hat[psi]^a) for a = 1..count. count = 0 requests dim values;
// count > dim is rejected (higher traces are polynomial in the first dim).
std::vector<double> deformation_invariants(const LinMap& psi, const MetricTensor& eta,
                                           const MetricTensor& g, int count = 0);

}  // namespace abd
