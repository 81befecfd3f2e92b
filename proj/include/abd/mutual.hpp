#pragma once

#include <abd/spaces.hpp>

#include <optional>
#include <vector>

namespace abd {

// Relative displacement of two placements psi, phi: U -> V. Gamma acts on the
// material side, Sigma_disp on the spatial side; the logarithmic coordinates
// exist only when the principal log does and are flagged absent otherwise.
// Sigma_disp is the displacement group element, distinct from the spin
// momentum map which uses its own identifier.
struct MutualDisplacement {
  LinMap Gamma;        // endomorphism of U: psi^{-1} phi
  LinMap Sigma_disp;   // endomorphism of V: phi psi^{-1}
  LinMap gamma_small;  // Gamma minus identity
  LinMap sigma_small;  // Sigma_disp minus identity
  std::optional<LinMap> alpha_opt;  // log Gamma
  std::optional<LinMap> beta_opt;   // log Sigma_disp

  bool has_alpha() const { return alpha_opt.has_value(); }
  bool has_beta() const { return beta_opt.has_value(); }
  const LinMap& alpha() const;  // throws LogUndefined when absent
  const LinMap& beta() const;
};

// Two-placement deformation tensors. G_mut and J_mut exist for arbitrary
// placements; the Cauchy side inverts both and is flagged absent otherwise.
struct MutualTensors {
  LinMap G_mut;        // covariant on U: G_AB = g_ij psi^i_A phi^j_B
  LinMap G_mut_hat;    // endomorphism of U: eta^{-1} G_mut
  LinMap G_mut_tilde;  // contravariant on U: eta^{-1} G_mut eta^{-1}
  LinMap J_mut;        // contravariant on V: J^ij = psi^i_A phi^j_B eta^AB
  std::optional<LinMap> C_mut_opt;        // covariant on V: C_ij = eta_AB invphi^A_i invpsi^B_j
  std::optional<LinMap> C_mut_hat_opt;    // endomorphism of V: g^{-1} C_mut
  std::optional<LinMap> C_mut_tilde_opt;  // contravariant on V: g^{-1} C_mut g^{-1}

  bool has_C_mut() const { return C_mut_opt.has_value(); }
  const LinMap& C_mut() const;  // throws SingularMap when absent
  const LinMap& C_mut_hat() const;
  const LinMap& C_mut_tilde() const;
};

// Both placements must be invertible.
MutualDisplacement mutual_displacement(const LinMap& psi, const LinMap& phi);

MutualTensors mutual_tensors(const LinMap& psi, const LinMap& phi, const MetricTensor& eta,
                             const MetricTensor& g);

// M_a = Tr(Gamma^a) for a = 1..count (count = 0 requests dim values). The
// Sigma_disp traces are computed too and cross-asserted against the Gamma
// ones; the Gamma values are returned.
std::vector<double> affine_invariants(const LinMap& psi, const LinMap& phi, int count = 0);

// K_a = Tr(G_mut_hat^a); defined for singular placements as well.
std::vector<double> mutual_metric_invariants(const LinMap& psi, const LinMap& phi,
                                             const MetricTensor& eta, const MetricTensor& g,
                                             int count = 0);

}  // namespace abd
