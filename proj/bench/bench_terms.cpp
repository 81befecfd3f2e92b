// Compares the parallel potential-term kernels against the serial reference
// on a synthetic many-body system: identical results are required, the
// speedup is reported. Build with OpenMP to see a difference; without it the
// two entry points run the same code.

#include <abd/checks.hpp>
#include <abd/multibody.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace abd;

double seconds_per_call(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int nbodies = 48;
  int dim = 3;
  int reps = 20;
  std::uint64_t seed = 11;

  CLI::App app{"potential-term kernel benchmark: parallel vs serial reference"};
  app.add_option("--bodies", nbodies, "number of bodies")->check(CLI::Range(2, 4096));
  app.add_option("--dim", dim, "space dimension")->check(CLI::Range(1, 16));
  app.add_option("--reps", reps, "timed repetitions per kernel")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "placement seed");
  CLI11_PARSE(app, argc, argv);

  const MetricTensor eta = MetricTensor::euclidean(dim, Space::U);
  const MetricTensor g = MetricTensor::euclidean(dim, Space::V);

  // Deterministic, well-conditioned placements scattered on a shell.
  std::mt19937_64 rng(seed);
  std::vector<Configuration> configs;
  configs.reserve(nbodies);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  for (int b = 0; b < nbodies; ++b) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = shift(rng);
    Mat phi = random_conditioned(rng, dim);
    configs.push_back(Configuration{x, LinMap(phi, tag::mixed_VU)});
  }

  // All-pairs mutual wells plus springs and a dilatation well per body: the
  // mutual terms dominate and are the expensive, FD-differentiated ones.
  std::vector<PotentialTerm> terms;
  for (int a = 0; a < nbodies; ++a)
    for (int b = a + 1; b < nbodies; ++b) {
      terms.push_back(MutualAffine{Vec::Constant(dim, 0.2), {}, {a, b}});
      terms.push_back(SpatialSpring{1.0, 1.0, {a, b}});
    }
  for (int b = 0; b < nbodies; ++b) terms.push_back(DilatationStabilizer{0.5, b});
  validate_terms(terms, nbodies, dim);

  std::printf("bodies %d, dim %d, terms %zu, reps %d\n", nbodies, dim, terms.size(), reps);
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled; both kernels run serially\n");
#endif

  const double value_par = potential_energy(configs, terms, eta, g);
  const double value_ser = potential_energy_serial(configs, terms, eta, g);
  const Vec grad_par = forces(configs, terms, eta, g);
  const Vec grad_ser = forces_serial(configs, terms, eta, g);
  const bool value_same = value_par == value_ser;
  const bool grad_same = (grad_par - grad_ser).cwiseAbs().maxCoeff() == 0.0;
  std::printf("energy bit-identical: %s, forces bit-identical: %s\n",
              value_same ? "yes" : "NO", grad_same ? "yes" : "NO");

  const double t_value_ser = seconds_per_call(
      [&] { (void)potential_energy_serial(configs, terms, eta, g); }, reps);
  const double t_value_par =
      seconds_per_call([&] { (void)potential_energy(configs, terms, eta, g); }, reps);
  const double t_grad_ser =
      seconds_per_call([&] { (void)forces_serial(configs, terms, eta, g); }, reps);
  const double t_grad_par =
      seconds_per_call([&] { (void)forces(configs, terms, eta, g); }, reps);

  std::printf("%-16s  %12s  %12s  %8s\n", "kernel", "serial ms", "parallel ms", "speedup");
  std::printf("%-16s  %12.3f  %12.3f  %8.2fx\n", "potential_energy", 1e3 * t_value_ser,
              1e3 * t_value_par, t_value_ser / t_value_par);
  std::printf("%-16s  %12.3f  %12.3f  %8.2fx\n", "forces", 1e3 * t_grad_ser,
              1e3 * t_grad_par, t_grad_ser / t_grad_par);

  return (value_same && grad_same) ? 0 : 1;
}
