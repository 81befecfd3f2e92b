#include <abd/multibody.hpp>

#include <abd/mutual.hpp>

#include <cmath>
#include <exception>
#include <memory>
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

void require_system_metrics(const MetricTensor& eta, const MetricTensor& g,
                            int n, const char* what) {
  if (eta.dim() != n || g.dim() != n)
    throw DimensionMismatch(std::string(what) + ": metric dimension");
  if (eta.space() != Space::U)
    throw TagMismatch(std::string(what) +
                      ": eta must live on the material space");
  if (g.space() != Space::V)
    throw TagMismatch(std::string(what) +
                      ": g must live on the spatial space");
}

void require_configs(const std::vector<Configuration>& configs,
                     const char* what) {
  if (configs.empty())
    throw ValidationError(std::string(what) + ": needs at least one body");
  int n = static_cast<int>(configs[0].x.size());
  require_dim(n);
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const Configuration& c = configs[k];
    if (!(c.phi.variance() == tag::mixed_VU))
      throw TagMismatch(std::string(what) + ": body " + std::to_string(k) +
                        " placement must carry the V<-U tag");
    if (c.phi.dim() != n || c.x.size() != n)
      throw DimensionMismatch(std::string(what) + ": body " +
                              std::to_string(k) +
                              " does not share the system dimension");
  }
}

int check_body(int body, int nbodies, const char* what) {
  if (body < 0 || body >= nbodies)
    throw BadPairIndex(std::string(what) + ": body index " +
                       std::to_string(body) + " outside 0.." +
                       std::to_string(nbodies - 1));
  return body;
}

void check_pair(const std::pair<int, int>& pair, int nbodies,
                const char* what) {
  check_body(pair.first, nbodies, what);
  check_body(pair.second, nbodies, what);
  if (pair.first == pair.second)
    throw BadPairIndex(std::string(what) + ": a pair term cannot bind body " +
                       std::to_string(pair.first) + " to itself");
}

void check_stiffness(const Vec& kappa, const std::optional<Vec>& reference,
                     int n, const char* what) {
  if (kappa.size() != n)
    throw ValidationError(std::string(what) + ": needs one stiffness per " +
                          "invariant order (got " +
                          std::to_string(kappa.size()) + ", want " +
                          std::to_string(n) + ")");
  if (!kappa.allFinite())
    throw ValidationError(std::string(what) + ": non-finite stiffness");
  if (reference) {
    if (reference->size() != n)
      throw ValidationError(std::string(what) +
                            ": reference length must match the dimension");
    if (!reference->allFinite())
      throw ValidationError(std::string(what) + ": non-finite reference");
  }
}

Vec reference_or_rest(const std::optional<Vec>& reference, int n) {
  if (reference) return *reference;
  return Vec::Constant(n, static_cast<double>(n));
}

double invariant_well(const std::vector<double>& values, const Vec& kappa,
                      const Vec& reference) {
  double total = 0.0;
  for (int a = 0; a < kappa.size(); ++a) {
    double d = values[static_cast<std::size_t>(a)] - reference(a);
    total += 0.5 * kappa(a) * d * d;
  }
  return total;
}

// ln det Ghat for the dilatational well; positive-definite metrics make the
// determinant positive exactly when the placement is invertible.
double log_det_green(const Mat& phi, const MetricTensor& eta,
                     const MetricTensor& g) {
  Mat ghat = eta.inverse() * (phi.transpose() * g.components() * phi);
  double det = ghat.determinant();
  if (!(det > 0.0) || !std::isfinite(det))
    throw SingularMap(
        "dilatation well: the placement has collapsed (non-positive "
        "determinant)");
  return std::log(det);
}

// Shared evaluation order: every public entry point computes per-term values
// into a buffer (possibly in parallel) and reduces sequentially by term
// index, so parallel and serial results are bit-identical.
template <typename PerTerm>
void for_each_term(std::size_t count, bool parallel, PerTerm&& body) {
  std::exception_ptr first_error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (long long idx = 0; idx < static_cast<long long>(count); ++idx) {
    try {
      body(static_cast<std::size_t>(idx));
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!first_error) first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

double potential_energy_impl(const std::vector<Configuration>& configs,
                             const std::vector<PotentialTerm>& terms,
                             const MetricTensor& eta, const MetricTensor& g,
                             bool parallel) {
  require_configs(configs, "potential_energy");
  int n = static_cast<int>(configs[0].x.size());
  require_system_metrics(eta, g, n, "potential_energy");
  validate_terms(terms, static_cast<int>(configs.size()), n);

  std::vector<double> values(terms.size(), 0.0);
  for_each_term(terms.size(), parallel, [&](std::size_t idx) {
    try {
      values[idx] = term_value(terms[idx], configs, eta, g);
    } catch (const SingularMap& e) {
      throw SingularMap("term " + std::to_string(idx) + ": " + e.what());
    }
  });
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

// Gradient of one term, accumulated into a full-length coordinate vector.
void term_gradient(const PotentialTerm& term,
                   const std::vector<Configuration>& configs,
                   const MetricTensor& eta, const MetricTensor& g,
                   const ChartLayout& chart, Vec& grad) {
  const int n = chart.n;
  std::visit(
      overloaded{
          [&](const SpatialSpring& spring) {
            const Vec& xa = configs[spring.pair.first].x;
            const Vec& xb = configs[spring.pair.second].x;
            Vec delta = xa - xb;
            Vec w = g.components() * delta;
            double d = std::sqrt(delta.dot(w));
            if (d == 0.0) return;  // force direction undefined at contact
            double coeff = spring.k * (d - spring.rest_length) / d;
            for (int i = 0; i < n; ++i) {
              grad(chart.q_x(spring.pair.first, i)) += coeff * w(i);
              grad(chart.q_x(spring.pair.second, i)) -= coeff * w(i);
            }
          },
          [&](const DilatationStabilizer& well) {
            const Mat& phi = configs[well.body].phi.matrix();
            Mat phi_inv = checked_inverse(phi);
            double level = log_det_green(phi, eta, g);
            // d(ln det Ghat)/d phi = 2 phi^{-T}
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a)
                grad(chart.q_phi(well.body, i, a)) +=
                    well.k * level * 2.0 * phi_inv(a, i);
          },
          [&](const MutualAffine& mutual) {
            const int first = mutual.pair.first;
            const int second = mutual.pair.second;
            Vec reference = reference_or_rest(mutual.reference, n);
            auto value_at = [&](const Vec& u) {
              Mat pa(n, n), pb(n, n);
              for (int i = 0; i < n; ++i)
                for (int a = 0; a < n; ++a) {
                  pa(i, a) = u(i * n + a);
                  pb(i, a) = u(n * n + i * n + a);
                }
              std::vector<double> values = affine_invariants(
                  LinMap(pa, tag::mixed_VU), LinMap(pb, tag::mixed_VU), n);
              return invariant_well(values, mutual.kappa, reference);
            };
            Vec u(2 * n * n);
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a) {
                u(i * n + a) = configs[first].phi.matrix()(i, a);
                u(n * n + i * n + a) = configs[second].phi.matrix()(i, a);
              }
            Vec du = fd_gradient(value_at, u);
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a) {
                grad(chart.q_phi(first, i, a)) += du(i * n + a);
                grad(chart.q_phi(second, i, a)) += du(n * n + i * n + a);
              }
          },
          [&](const MutualMetric& mutual) {
            const int first = mutual.pair.first;
            const int second = mutual.pair.second;
            Vec reference = reference_or_rest(mutual.reference, n);
            auto value_at = [&](const Vec& u) {
              Mat pa(n, n), pb(n, n);
              for (int i = 0; i < n; ++i)
                for (int a = 0; a < n; ++a) {
                  pa(i, a) = u(i * n + a);
                  pb(i, a) = u(n * n + i * n + a);
                }
              std::vector<double> values = mutual_metric_invariants(
                  LinMap(pa, tag::mixed_VU), LinMap(pb, tag::mixed_VU), eta,
                  g, n);
              return invariant_well(values, mutual.kappa, reference);
            };
            Vec u(2 * n * n);
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a) {
                u(i * n + a) = configs[first].phi.matrix()(i, a);
                u(n * n + i * n + a) = configs[second].phi.matrix()(i, a);
              }
            Vec du = fd_gradient(value_at, u);
            for (int i = 0; i < n; ++i)
              for (int a = 0; a < n; ++a) {
                grad(chart.q_phi(first, i, a)) += du(i * n + a);
                grad(chart.q_phi(second, i, a)) += du(n * n + i * n + a);
              }
          }},
      term);
}

Vec forces_impl(const std::vector<Configuration>& configs,
                const std::vector<PotentialTerm>& terms,
                const MetricTensor& eta, const MetricTensor& g,
                bool parallel) {
  require_configs(configs, "forces");
  int n = static_cast<int>(configs[0].x.size());
  require_system_metrics(eta, g, n, "forces");
  validate_terms(terms, static_cast<int>(configs.size()), n);

  ChartLayout chart{static_cast<int>(configs.size()), n};
  std::vector<Vec> contributions(terms.size());
  for_each_term(terms.size(), parallel, [&](std::size_t idx) {
    Vec grad = Vec::Zero(chart.half());
    try {
      term_gradient(terms[idx], configs, eta, g, chart, grad);
    } catch (const SingularMap& e) {
      throw SingularMap("term " + std::to_string(idx) + ": " + e.what());
    }
    contributions[idx] = std::move(grad);
  });
  Vec total = Vec::Zero(chart.half());
  for (const Vec& grad : contributions) total += grad;
  return total;
}

}  // namespace

void validate_system(const SystemState& system) {
  if (system.bodies.empty())
    throw ValidationError("system: needs at least one body");
  if (system.inertia.size() != system.bodies.size() ||
      system.models.size() != system.bodies.size())
    throw ValidationError(
        "system: bodies, inertia, and models must have equal length");
  int n = static_cast<int>(system.bodies[0].x.size());
  require_dim(n);
  for (std::size_t k = 0; k < system.bodies.size(); ++k) {
    const PhaseState& b = system.bodies[k];
    if (!(b.phi.variance() == tag::mixed_VU) ||
        !(b.P.variance() == tag::mixed_UV))
      throw TagMismatch("system: body " + std::to_string(k) +
                        " carries the wrong placement or momentum tags");
    if (b.x.size() != n || b.p.size() != n || b.phi.dim() != n ||
        b.P.dim() != n)
      throw DimensionMismatch("system: body " + std::to_string(k) +
                              " does not share the system dimension");
    if (system.inertia[k].J().rows() != n)
      throw DimensionMismatch("system: inertia " + std::to_string(k) +
                              " dimension");
    validate_model(system.models[k], n);
  }
}

int system_dim(const SystemState& system) {
  validate_system(system);
  return static_cast<int>(system.bodies[0].x.size());
}

std::vector<int> term_bodies(const PotentialTerm& term) {
  return std::visit(
      overloaded{[](const SpatialSpring& t) {
                   return std::vector<int>{t.pair.first, t.pair.second};
                 },
                 [](const MutualAffine& t) {
                   return std::vector<int>{t.pair.first, t.pair.second};
                 },
                 [](const MutualMetric& t) {
                   return std::vector<int>{t.pair.first, t.pair.second};
                 },
                 [](const DilatationStabilizer& t) {
                   return std::vector<int>{t.body};
                 }},
      term);
}

void validate_terms(const std::vector<PotentialTerm>& terms, int nbodies,
                    int n) {
  for (const PotentialTerm& term : terms) {
    std::visit(
        overloaded{[&](const SpatialSpring& t) {
                     check_pair(t.pair, nbodies, "spring term");
                     if (!std::isfinite(t.k) ||
                         !std::isfinite(t.rest_length) || t.rest_length < 0.0)
                       throw ValidationError(
                           "spring term: stiffness must be finite and the "
                           "rest length finite and non-negative");
                   },
                   [&](const MutualAffine& t) {
                     check_pair(t.pair, nbodies, "mutual-affine term");
                     check_stiffness(t.kappa, t.reference, n,
                                     "mutual-affine term");
                   },
                   [&](const MutualMetric& t) {
                     check_pair(t.pair, nbodies, "mutual-metric term");
                     check_stiffness(t.kappa, t.reference, n,
                                     "mutual-metric term");
                   },
                   [&](const DilatationStabilizer& t) {
                     check_body(t.body, nbodies, "dilatation well");
                     if (!std::isfinite(t.k))
                       throw ValidationError(
                           "dilatation well: non-finite stiffness");
                   }},
        term);
  }
}

double term_value(const PotentialTerm& term,
                  const std::vector<Configuration>& configs,
                  const MetricTensor& eta, const MetricTensor& g) {
  const int n = static_cast<int>(configs[0].x.size());
  return std::visit(
      overloaded{
          [&](const SpatialSpring& spring) {
            Vec delta =
                configs[spring.pair.first].x - configs[spring.pair.second].x;
            double d = std::sqrt(delta.dot(g.components() * delta));
            double stretch = d - spring.rest_length;
            return 0.5 * spring.k * stretch * stretch;
          },
          [&](const MutualAffine& mutual) {
            std::vector<double> values =
                affine_invariants(configs[mutual.pair.first].phi,
                                  configs[mutual.pair.second].phi, n);
            return invariant_well(values, mutual.kappa,
                                  reference_or_rest(mutual.reference, n));
          },
          [&](const MutualMetric& mutual) {
            std::vector<double> values = mutual_metric_invariants(
                configs[mutual.pair.first].phi,
                configs[mutual.pair.second].phi, eta, g, n);
            return invariant_well(values, mutual.kappa,
                                  reference_or_rest(mutual.reference, n));
          },
          [&](const DilatationStabilizer& well) {
            double level =
                log_det_green(configs[well.body].phi.matrix(), eta, g);
            return 0.5 * well.k * level * level;
          }},
      term);
}

std::vector<Configuration> unpack_configurations(const ChartLayout& chart,
                                                 const Vec& q) {
  if (q.size() != chart.half())
    throw DimensionMismatch("unpack_configurations: coordinate length");
  std::vector<Configuration> configs;
  configs.reserve(static_cast<std::size_t>(chart.nbodies));
  for (int k = 0; k < chart.nbodies; ++k) {
    Vec x(chart.n);
    Mat phi(chart.n, chart.n);
    for (int i = 0; i < chart.n; ++i) {
      x(i) = q(chart.q_x(k, i));
      for (int a = 0; a < chart.n; ++a) phi(i, a) = q(chart.q_phi(k, i, a));
    }
    configs.push_back(Configuration{x, LinMap(phi, tag::mixed_VU)});
  }
  return configs;
}

Vec pack_configurations(const ChartLayout& chart,
                        const std::vector<Configuration>& configs) {
  if (static_cast<int>(configs.size()) != chart.nbodies)
    throw DimensionMismatch("pack_configurations: body count");
  Vec q = Vec::Zero(chart.half());
  for (int k = 0; k < chart.nbodies; ++k) {
    const Configuration& c = configs[static_cast<std::size_t>(k)];
    if (c.x.size() != chart.n || c.phi.dim() != chart.n)
      throw DimensionMismatch("pack_configurations: body dimension");
    for (int i = 0; i < chart.n; ++i) {
      q(chart.q_x(k, i)) = c.x(i);
      for (int a = 0; a < chart.n; ++a)
        q(chart.q_phi(k, i, a)) = c.phi.matrix()(i, a);
    }
  }
  return q;
}

double total_kinetic(const SystemState& system,
                     const std::vector<VelocityState>& velocities,
                     const MetricTensor& eta, const MetricTensor& g) {
  validate_system(system);
  if (velocities.size() != system.bodies.size())
    throw DimensionMismatch("total_kinetic: one velocity state per body");
  double total = 0.0;
  for (std::size_t k = 0; k < system.bodies.size(); ++k) {
    Configuration c{system.bodies[k].x, system.bodies[k].phi};
    total += kinetic_energy(system.models[k], c, velocities[k], eta, g);
  }
  return total;
}

double total_kinetic(const SystemState& system, const MetricTensor& eta,
                     const MetricTensor& g) {
  validate_system(system);
  double total = 0.0;
  for (std::size_t k = 0; k < system.bodies.size(); ++k) {
    const PhaseState& b = system.bodies[k];
    Configuration c{b.x, b.phi};
    try {
      total += kinetic_energy_momenta(system.models[k], c, b.p, b.P, eta, g);
    } catch (const SingularInertia& e) {
      throw SingularInertia("body " + std::to_string(k) + ": " + e.what());
    }
  }
  return total;
}

double potential_energy(const std::vector<Configuration>& configs,
                        const std::vector<PotentialTerm>& terms,
                        const MetricTensor& eta, const MetricTensor& g) {
  return potential_energy_impl(configs, terms, eta, g, true);
}

double potential_energy_serial(const std::vector<Configuration>& configs,
                               const std::vector<PotentialTerm>& terms,
                               const MetricTensor& eta,
                               const MetricTensor& g) {
  return potential_energy_impl(configs, terms, eta, g, false);
}

double potential_energy(const SystemState& system,
                        const std::vector<PotentialTerm>& terms,
                        const MetricTensor& eta, const MetricTensor& g) {
  validate_system(system);
  std::vector<Configuration> configs;
  configs.reserve(system.bodies.size());
  for (const PhaseState& b : system.bodies)
    configs.push_back(Configuration{b.x, b.phi});
  return potential_energy(configs, terms, eta, g);
}

Vec forces(const std::vector<Configuration>& configs,
           const std::vector<PotentialTerm>& terms, const MetricTensor& eta,
           const MetricTensor& g) {
  return forces_impl(configs, terms, eta, g, true);
}

Vec forces_serial(const std::vector<Configuration>& configs,
                  const std::vector<PotentialTerm>& terms,
                  const MetricTensor& eta, const MetricTensor& g) {
  return forces_impl(configs, terms, eta, g, false);
}

MomentumMaps total_momentum_maps(const std::vector<PhaseState>& bodies,
                                 const MetricTensor& eta,
                                 const MetricTensor& g, const Vec& origin) {
  if (bodies.empty())
    throw ValidationError("total_momentum_maps: needs at least one body");
  MomentumMaps total = momentum_maps(bodies[0], eta, g, origin);
  Mat spin = total.Spin.matrix();
  Mat spin_hat = total.Spin_hat.matrix();
  Vec p_hat = total.p_hat;
  Mat lambda = total.Lambda.matrix();
  Mat s = total.S.matrix();
  Mat vort = total.Vorticity.matrix();
  Vec p = total.p;
  for (std::size_t k = 1; k < bodies.size(); ++k) {
    MomentumMaps maps = momentum_maps(bodies[k], eta, g, origin);
    spin += maps.Spin.matrix();
    spin_hat += maps.Spin_hat.matrix();
    p_hat += maps.p_hat;
    lambda += maps.Lambda.matrix();
    s += maps.S.matrix();
    vort += maps.Vorticity.matrix();
    p += maps.p;
  }
  return MomentumMaps{LinMap(spin, tag::endo_V),
                      LinMap(spin_hat, tag::endo_U),
                      p_hat,
                      LinMap(lambda, tag::endo_V),
                      LinMap(lambda + spin, tag::endo_V),
                      LinMap(s, tag::endo_V),
                      LinMap(vort, tag::endo_U),
                      p};
}

MomentumMaps total_momentum_maps(const SystemState& system,
                                 const MetricTensor& eta,
                                 const MetricTensor& g, const Vec& origin) {
  validate_system(system);
  return total_momentum_maps(system.bodies, eta, g, origin);
}

CanonicalHamiltonian system_hamiltonian(const SystemState& system,
                                        std::vector<PotentialTerm> terms,
                                        const MetricTensor& eta,
                                        const MetricTensor& g) {
  int n = system_dim(system);
  require_system_metrics(eta, g, n, "system_hamiltonian");
  validate_terms(terms, system.size(), n);
  if (terms.empty())
    return CanonicalHamiltonian(system.models, eta, g);

  ChartLayout chart{system.size(), n};
  MetricTensor eta_copy = eta;
  MetricTensor g_copy = g;
  auto shared_terms =
      std::make_shared<const std::vector<PotentialTerm>>(std::move(terms));
  PotentialFunction potential{
      [chart, eta_copy, g_copy, shared_terms](const Vec& q) {
        return potential_energy(unpack_configurations(chart, q),
                                *shared_terms, eta_copy, g_copy);
      },
      [chart, eta_copy, g_copy, shared_terms](const Vec& q) {
        return forces(unpack_configurations(chart, q), *shared_terms,
                      eta_copy, g_copy);
      }};
  return CanonicalHamiltonian(system.models, eta, g, potential);
}

const char* conserved_name(Conserved quantity) {
  switch (quantity) {
    case Conserved::energy:
      return "energy";
    case Conserved::linear_momentum:
      return "linear momentum";
    case Conserved::material_momentum:
      return "material momentum";
    case Conserved::spin:
      return "spatial spin";
    case Conserved::spin_hat:
      return "material spin";
    case Conserved::orbital:
      return "orbital map";
    case Conserved::total_affine:
      return "total affine map";
    case Conserved::spin_skew:
      return "metric-skew spin";
    case Conserved::vorticity:
      return "vorticity map";
  }
  return "unknown";
}

ConservationReport conservation_report(
    const Trajectory& trajectory, const ChartLayout& chart,
    const MetricTensor& eta, const MetricTensor& g, const Vec& origin,
    const std::vector<ConservationCheck>& expected) {
  if (trajectory.samples.empty())
    throw ValidationError("conservation_report: empty trajectory");

  auto extract = [&](Conserved quantity, const TrajectorySample& sample,
                     const MomentumMaps& maps) -> Mat {
    switch (quantity) {
      case Conserved::energy:
        return Mat::Constant(1, 1, sample.energy);
      case Conserved::linear_momentum:
        return Mat(maps.p.transpose());
      case Conserved::material_momentum:
        return Mat(maps.p_hat.transpose());
      case Conserved::spin:
        return maps.Spin.matrix();
      case Conserved::spin_hat:
        return maps.Spin_hat.matrix();
      case Conserved::orbital:
        return maps.Lambda.matrix();
      case Conserved::total_affine:
        return maps.J_total.matrix();
      case Conserved::spin_skew:
        return maps.S.matrix();
      case Conserved::vorticity:
        return maps.Vorticity.matrix();
    }
    throw ValidationError("conservation_report: unknown quantity");
  };

  ConservationReport report;
  std::vector<Mat> baselines;
  baselines.reserve(expected.size());
  {
    const TrajectorySample& first = trajectory.samples.front();
    MomentumMaps maps = total_momentum_maps(unpack_state(chart, first.z), eta,
                                            g, origin);
    for (const ConservationCheck& check : expected) {
      baselines.push_back(extract(check.quantity, first, maps));
      report.entries.push_back(
          ConservationEntry{check.quantity, 0.0, check.tol, true});
    }
  }
  for (const TrajectorySample& sample : trajectory.samples) {
    MomentumMaps maps = total_momentum_maps(unpack_state(chart, sample.z),
                                            eta, g, origin);
    for (std::size_t c = 0; c < expected.size(); ++c) {
      Mat value = extract(expected[c].quantity, sample, maps);
      double scale = std::max(1.0, baselines[c].cwiseAbs().maxCoeff());
      double drift = (value - baselines[c]).cwiseAbs().maxCoeff() / scale;
      report.entries[c].max_drift = std::max(report.entries[c].max_drift,
                                             drift);
    }
  }
  for (ConservationEntry& entry : report.entries) {
    entry.pass = entry.max_drift <= entry.tol;
    if (!entry.pass) report.all_pass = false;
  }
  return report;
}

}  // namespace abd
