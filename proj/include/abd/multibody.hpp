#pragma once

#include <abd/dynamics.hpp>
#include <abd/kinematics.hpp>

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace abd {

// A finite collection of affine bodies sharing one spatial space V and one
// material space U (a single chart stacks their canonical coordinates
// block by block, so functions of different bodies automatically have
// vanishing brackets).
struct SystemState {
  std::vector<PhaseState> bodies;
  std::vector<BodyInertia> inertia;
  std::vector<KineticModel> models;

  int size() const { return static_cast<int>(bodies.size()); }
};

// Checks the three arrays have equal length, a shared dimension, and valid
// per-body model parameters. Throws ValidationError / DimensionMismatch.
void validate_system(const SystemState& system);

// Shared body dimension; validates first.
int system_dim(const SystemState& system);

// ---------------------------------------------------------------------------
// Potential terms. Pair indices are 0-based body slots.

// 0.5 k (||x(first) - x(second)||_g - rest_length)^2
struct SpatialSpring {
  double k = 1.0;
  double rest_length = 0.0;
  std::pair<int, int> pair{0, 1};
};

// 0.5 sum_a kappa_a (M_a[phi(first), phi(second)] - ref_a)^2 where the M_a
// are the two-placement affine invariants. The reference defaults to the
// mutual rest values M_a = n (coincident placements).
struct MutualAffine {
  Vec kappa;
  std::optional<Vec> reference;
  std::pair<int, int> pair{0, 1};
};

// Same shape built on the metric two-placement invariants K_a.
struct MutualMetric {
  Vec kappa;
  std::optional<Vec> reference;
  std::pair<int, int> pair{0, 1};
};

// 0.5 k (ln det Ghat[phi(body)])^2: a purely dilatational well pinning the
// body's volume to its reference volume.
struct DilatationStabilizer {
  double k = 1.0;
  int body = 0;
};

using PotentialTerm =
    std::variant<SpatialSpring, MutualAffine, MutualMetric,
                 DilatationStabilizer>;

// Body slots referenced by a term, in declaration order.
std::vector<int> term_bodies(const PotentialTerm& term);

// Validates body references and parameter shapes. Throws BadPairIndex for an
// out-of-range or self-paired body slot, ValidationError otherwise.
void validate_terms(const std::vector<PotentialTerm>& terms, int nbodies,
                    int n);

// Value of a single term at the given body configurations.
double term_value(const PotentialTerm& term,
                  const std::vector<Configuration>& configs,
                  const MetricTensor& eta, const MetricTensor& g);

// ---------------------------------------------------------------------------
// Configuration packing over the chart's q-half.

std::vector<Configuration> unpack_configurations(const ChartLayout& chart,
                                                 const Vec& q);
Vec pack_configurations(const ChartLayout& chart,
                        const std::vector<Configuration>& configs);

// ---------------------------------------------------------------------------
// Energies.

// Additive kinetic energy over the bodies from explicit velocities.
double total_kinetic(const SystemState& system,
                     const std::vector<VelocityState>& velocities,
                     const MetricTensor& eta, const MetricTensor& g);

// Additive kinetic energy from the canonical momenta stored in the bodies;
// SingularInertia is rethrown tagged with the offending body index.
double total_kinetic(const SystemState& system, const MetricTensor& eta,
                     const MetricTensor& g);

// Sum of term values in term order. The default entry point may evaluate
// terms in parallel; the reduction always runs in term order, so the result
// is bit-identical to the serial reference.
double potential_energy(const std::vector<Configuration>& configs,
                        const std::vector<PotentialTerm>& terms,
                        const MetricTensor& eta, const MetricTensor& g);
double potential_energy_serial(const std::vector<Configuration>& configs,
                               const std::vector<PotentialTerm>& terms,
                               const MetricTensor& eta, const MetricTensor& g);
double potential_energy(const SystemState& system,
                        const std::vector<PotentialTerm>& terms,
                        const MetricTensor& eta, const MetricTensor& g);

// Gradient of the total potential with respect to the stacked configuration
// coordinates (layout = the chart's q-half). Spring and dilatation terms are
// differentiated analytically, the mutual-invariant terms by central
// differences. Same parallel/serial contract as potential_energy.
Vec forces(const std::vector<Configuration>& configs,
           const std::vector<PotentialTerm>& terms, const MetricTensor& eta,
           const MetricTensor& g);
Vec forces_serial(const std::vector<Configuration>& configs,
                  const std::vector<PotentialTerm>& terms,
                  const MetricTensor& eta, const MetricTensor& g);

// ---------------------------------------------------------------------------
// Totals and conservation diagnostics.

// Componentwise sums of the per-body maps, accumulated in body order.
MomentumMaps total_momentum_maps(const std::vector<PhaseState>& bodies,
                                 const MetricTensor& eta,
                                 const MetricTensor& g, const Vec& origin);
MomentumMaps total_momentum_maps(const SystemState& system,
                                 const MetricTensor& eta,
                                 const MetricTensor& g, const Vec& origin);

// Hamiltonian evaluator for the system: additive kinetic part plus the given
// potential terms, ready for the integrators.
CanonicalHamiltonian system_hamiltonian(const SystemState& system,
                                        std::vector<PotentialTerm> terms,
                                        const MetricTensor& eta,
                                        const MetricTensor& g);

// Quantities a trajectory can be audited against.
enum class Conserved {
  energy,
  linear_momentum,    // total p
  material_momentum,  // total p_hat
  spin,               // total spatial spin
  spin_hat,           // total material spin
  orbital,            // total orbital map
  total_affine,       // total orbital + spin
  spin_skew,          // g-antisymmetric part of the total spatial spin
  vorticity,          // eta-antisymmetric part of the total material spin
};

const char* conserved_name(Conserved quantity);

struct ConservationCheck {
  Conserved quantity;
  double tol = 1e-7;
};

struct ConservationEntry {
  Conserved quantity;
  double max_drift = 0.0;  // max_t |value(t) - value(0)| / max(1, |value(0)|)
  double tol = 0.0;
  bool pass = false;
};

struct ConservationReport {
  std::vector<ConservationEntry> entries;
  bool all_pass = true;
};

// Audits each requested quantity along the trajectory: maximum drift of its
// value relative to the start, compared against the per-quantity tolerance.
ConservationReport conservation_report(
    const Trajectory& trajectory, const ChartLayout& chart,
    const MetricTensor& eta, const MetricTensor& g, const Vec& origin,
    const std::vector<ConservationCheck>& expected);

}  // namespace abd
