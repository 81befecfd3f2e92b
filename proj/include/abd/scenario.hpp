#pragma once

#include <abd/dynamics.hpp>
#include <abd/multibody.hpp>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace abd {

// A fully validated simulation setup loaded from JSON. Parsing is strict:
// unknown keys, missing required keys, wrong shapes, non-symmetric or
// non-definite metrics (without the pseudo flags), and singular initial
// placements are all rejected with a ValidationError naming the offending
// location.
struct Scenario {
  int dimension = 0;
  Mat space_metric;  // metric on V; definite unless space_metric_pseudo
  bool space_pseudo = false;
  Mat material_metric;  // metric on U; definite unless material_metric_pseudo
  bool material_pseudo = false;
  SystemState system;
  std::vector<PotentialTerm> potentials;
  Integrator method = Integrator::rk4;
  double dt = 0.0;
  double t_end = 0.0;
  int output_stride = 1;
  long long seed = 0;

  MetricTensor g() const;    // space metric tensor
  MetricTensor eta() const;  // material metric tensor
};

// Parses scenario JSON text; `origin` names the source in error messages.
Scenario parse_scenario_text(const std::string& text, const std::string& origin);

// Reads and parses a scenario file.
Scenario load_scenario(const std::string& path);

// Ordered two-body interaction pairs in first-declaration order, without
// repeats; these get the per-pair invariant columns. Order matters: the pair
// invariants are directional in their arguments.
std::vector<std::pair<int, int>> declared_pairs(const std::vector<PotentialTerm>& terms);

// Column names of the diagnostics table: time, then per body the kinetic
// energy, the deformation invariants, the placement determinant, and the
// independent (lowered, antisymmetric) spin components, then the pair
// invariants, then the system totals. Body suffixes are 1-based.
std::vector<std::string> csv_columns(const Scenario& scenario);

// Runs the scenario and writes the diagnostics table: one header line plus
// one row per recorded sample, every value printed with 17 significant
// digits. Each row is checked for finiteness before it is written. Throws
// ValidationError on bad setups and SingularMap/SingularInertia/
// NonConvergence (with the failing body or term index in the message) on
// numerical breakdown.
void run_scenario_csv(const Scenario& scenario, std::ostream& out);

}  // namespace abd
