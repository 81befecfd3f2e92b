// Acceptance gate: one pass/fail line per release criterion, exit status =
// number of failed criteria. argv[1] is the command-line tool, argv[2] the
// directory holding the shipped scenarios.

#include <abd/checks.hpp>
#include <abd/deformation.hpp>
#include <abd/dynamics.hpp>
#include <abd/kinematics.hpp>
#include <abd/multibody.hpp>
#include <abd/mutual.hpp>
#include <abd/spaces.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace abd;

std::string g_cli;
std::string g_scenarios;
std::filesystem::path g_workdir;
int g_failures = 0;

void report(int id, const std::string& description, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id,
              description.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int id, const std::string& description, Fn&& body) {
  bool pass = false;
  std::string detail;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("unexpected exception: ") + e.what();
  }
  report(id, description, pass, detail);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

LinMap vu(const Mat& m) { return LinMap(m, tag::mixed_VU); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// --- subprocess helpers (criterion 12) --------------------------------------

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::string cmd = shell_quote(g_cli);
  for (const std::string& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  RunResult result;
  if (!pipe) return result;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// --- trajectory helpers ------------------------------------------------------

PhaseState body_state(const KineticModel& model, const Vec& x, const Mat& phi, const Vec& v,
                      const Mat& V, const MetricTensor& eta, const MetricTensor& g) {
  Configuration c{x, vu(phi)};
  VelocityState vel{v, vu(V)};
  return legendre(model, c, vel, eta, g);
}

struct AuditSpec {
  std::string label;
  SystemState system;
  std::vector<PotentialTerm> terms;
  std::vector<ConservationCheck> expected;
};

ConservationReport audit(const AuditSpec& spec, const MetricTensor& eta, const MetricTensor& g,
                         double dt, double t_end) {
  CanonicalHamiltonian H = system_hamiltonian(spec.system, spec.terms, eta, g);
  ChartLayout chart{spec.system.size(), eta.dim()};
  Vec z0 = pack_state(chart, spec.system.bodies);
  Trajectory traj = simulate(Integrator::rk4, H, z0, dt, t_end, 10);
  return conservation_report(traj, chart, eta, g, Vec::Zero(eta.dim()), spec.expected);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <cli-binary> <scenario-dir>\n", argv[0]);
    return 64;
  }
  g_cli = argv[1];
  g_scenarios = argv[2];
  g_workdir = std::filesystem::temp_directory_path() / "abd_acceptance";
  std::error_code ec;
  std::filesystem::create_directories(g_workdir, ec);

  const MetricTensor eta2 = MetricTensor::euclidean(2, Space::U);
  const MetricTensor g2 = MetricTensor::euclidean(2, Space::V);

  // Criteria 1-7 share one deterministic randomized property run at n = 2, 3.
  CheckOptions options;
  options.dim = 0;
  options.seed = 7;
  options.trials = 100;
  options.tol = 1e-8;
  CheckReport suite = run_check_suite(options);
  std::map<std::string, double> err;
  for (const PropertyResult& property : suite.properties)
    err[property.name] = std::max(err.count(property.name) ? err[property.name] : 0.0,
                                  property.max_error);
  auto suite_err = [&](std::initializer_list<const char*> names) {
    double worst = 0.0;
    for (const char* name : names) {
      if (!err.count(name)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, err[name]);
    }
    return worst;
  };

  criterion(1,
            "metric transposition is an involution, reverses products, and factors "
            "through the plain transpose",
            [&](std::string& detail) {
              constexpr double tol = 1e-10;
              double worst = suite_err({"transpose involution", "transpose anti-representation",
                                        "transpose factorization"});
              detail = "100 trials, max rel err " + fmt(worst) + ", tol " + fmt(tol);
              return worst <= tol;
            });

  criterion(2,
            "mutual displacement and deformation tensors follow their rules under "
            "left/right group and isometry actions",
            [&](std::string& detail) {
              constexpr double tol = 1e-8;
              double worst = suite_err({"mutual transformation rules"});
              detail = "100 conditioned action pairs, max rel err " + fmt(worst) + ", tol " +
                       fmt(tol);
              return worst <= tol;
            });

  criterion(3,
            "affine invariants are two-sided-group invariant, metric invariants are "
            "isometry invariant, and the families are independent",
            [&](std::string& detail) {
              constexpr double tol = 1e-8;
              double worst =
                  suite_err({"affine invariant invariance", "metric invariant invariance"});
              bool pass = worst <= tol;

              // Two placement pairs with matching metric invariants but distinct
              // affine invariants: the latter carry strictly more information.
              Mat psi1 = Mat::Identity(2, 2);
              Mat phi1 = v2(2.0, 3.0).asDiagonal();
              Mat s = v2(2.0, 1.0).asDiagonal();
              Mat psi2 = s;
              Mat phi2 = s.inverse() * phi1;
              std::vector<double> k1 = mutual_metric_invariants(vu(psi1), vu(phi1), eta2, g2);
              std::vector<double> k2 = mutual_metric_invariants(vu(psi2), vu(phi2), eta2, g2);
              std::vector<double> m1 = affine_invariants(vu(psi1), vu(phi1));
              std::vector<double> m2 = affine_invariants(vu(psi2), vu(phi2));
              double k_gap = 0.0;
              for (std::size_t i = 0; i < k1.size(); ++i)
                k_gap = std::max(k_gap, std::abs(k1[i] - k2[i]));
              double m_gap = std::abs(m1[0] - m2[0]);
              pass = pass && k_gap <= 1e-12 && m_gap > 1.0;
              detail = "max rel err " + fmt(worst) + " (tol " + fmt(tol) +
                       "), fixture: metric gap " + fmt(k_gap) + ", affine gap " + fmt(m_gap);
              return pass;
            });

  criterion(4,
            "traces of mutual Green powers match traces of inverse mutual Cauchy powers",
            [&](std::string& detail) {
              constexpr double tol = 1e-9;
              double worst = suite_err({"metric trace consistency"});
              detail = "100 trials, powers 1..n, max rel err " + fmt(worst) + ", tol " +
                       fmt(tol);
              return worst <= tol;
            });

  criterion(5,
            "mutual tensors collapse to the displacements when one placement is an "
            "isometry",
            [&](std::string& detail) {
              constexpr double tol = 1e-10;
              double worst = suite_err({"isometry specialization"});
              detail = "100 trials, max abs err " + fmt(worst) + ", tol " + fmt(tol);
              return worst <= tol;
            });

  criterion(6,
            "canonical and momentum-map brackets realize the expected structure "
            "constants and the product chain rule",
            [&](std::string& detail) {
              constexpr double tol = 1e-8;
              double worst =
                  suite_err({"bracket structure constants", "bracket chain rule"});
              detail = "100 phase points, max abs err " + fmt(worst) + ", tol " + fmt(tol);
              return worst <= tol;
            });

  criterion(7,
            "velocity-momentum round trip is exact for all four kinetic families and "
            "degenerate inertia is rejected",
            [&](std::string& detail) {
              constexpr double tol = 1e-10;
              double worst = suite_err({"legendre round trip"});
              bool pass = worst <= tol;

              // An operator with a dead antisymmetric sector must be reported,
              // not silently inverted.
              bool threw = false;
              try {
                KineticModel degenerate = LeftAffine{1.0, 1.0, 1.0, 0.0, {}};
                Configuration c{Vec::Zero(2), vu(Mat::Identity(2, 2))};
                Mat spin(2, 2);
                spin << 0.0, 1.0, -1.0, 0.0;
                legendre_inverse(degenerate, c, Vec::Zero(2), LinMap(spin, tag::mixed_UV),
                                 eta2, g2);
              } catch (const SingularInertia&) {
                threw = true;
              }
              pass = pass && threw;
              detail = "max rel err " + fmt(worst) + " (tol " + fmt(tol) +
                       "), degenerate solve " + (threw ? "rejected" : "NOT rejected");
              return pass;
            });

  criterion(8,
            "the two-point Green rate converges quadratically to the distortion rate",
            [&](std::string& detail) {
              Mat phi0(2, 2), omega_hat(2, 2), gm(2, 2), em(2, 2);
              phi0 << 1.1, 0.2, -0.1, 0.9;
              omega_hat << 0.2, 0.7, -0.5, -0.1;
              gm << 1.3, 0.2, 0.2, 0.9;
              em << 1.1, -0.1, -0.1, 0.8;
              MetricTensor g(gm, Space::V);
              MetricTensor eta(em, Space::U);
              Vec x0 = v2(0.1, 0.4);
              Vec v0 = v2(0.3, -0.2);

              auto conf = [&](double t) {
                return Configuration{Vec(x0 + t * v0), vu(Mat(phi0 * mat_exp(Mat(t * omega_hat))))};
              };
              Configuration c0 = conf(0.0);
              VelocityState vel{v0, vu(Mat(phi0 * omega_hat))};
              Mat exact = affine_velocities(c0, vel, eta, g).d_hat.matrix();

              auto fd_err = [&](double dt) {
                Mat fd = green_rate(conf(-0.5 * dt), conf(0.5 * dt), dt, g).matrix();
                return (fd - exact).cwiseAbs().maxCoeff();
              };
              const double err_fine = fd_err(1e-4);
              const double err_a = fd_err(2e-4);
              const double err_b = fd_err(4e-4);
              const double ratio = err_b / err_a;
              const bool pass = err_fine <= 1e-6 && ratio >= 4.0 / 1.5 && ratio <= 4.0 * 1.5;
              detail = "err " + fmt(err_fine) + " at dt 1e-4 (tol 1e-6), halving ratio " +
                       fmt(ratio) + " vs 4";
              return pass;
            });

  criterion(9,
            "geodesic and forced runs conserve their momentum maps to 1e-7 and energy "
            "to 1e-8 over t = 10",
            [&](std::string& detail) {
              Mat phi_a(2, 2), ohat_a(2, 2);
              phi_a << 1.1, 0.2, -0.1, 0.9;
              ohat_a << 0.1, 0.5, -0.45, -0.1;
              Mat phi_c(2, 2), ohat_c(2, 2);
              phi_c << 1.2, 0.1, 0.0, 0.9;
              ohat_c << 0.3, 1.1, -0.9, -0.3;
              Mat phi_d(2, 2), vel_d(2, 2);
              phi_d << 1.05, 0.15, -0.1, 0.95;
              vel_d << 0.2, 0.4, -0.3, -0.1;

              std::vector<AuditSpec> specs;

              {  // internal-frame kinetic energy, no translation: spatial spin
                KineticModel model = LeftAffine{1.0, 1.3, 0.4, 0.2, {}};
                AuditSpec s;
                s.label = "left-invariant geodesic";
                s.system.bodies = {body_state(model, Vec::Zero(2), phi_a, Vec::Zero(2),
                                              Mat(phi_a * ohat_a), eta2, g2)};
                s.system.inertia = {BodyInertia(1.0, Mat::Identity(2, 2))};
                s.system.models = {model};
                s.expected = {{Conserved::spin, 1e-7}, {Conserved::energy, 1e-8}};
                specs.push_back(std::move(s));
              }
              {  // spatial-frame kinetic energy, translating: material spin
                KineticModel model = RightAffine{1.0, 1.3, 0.4, 0.2};
                AuditSpec s;
                s.label = "right-invariant geodesic";
                s.system.bodies = {body_state(model, Vec::Zero(2), phi_a, v2(0.3, -0.2),
                                              Mat(ohat_a * phi_a), eta2, g2)};
                s.system.inertia = {BodyInertia(1.0, Mat::Identity(2, 2))};
                s.system.models = {model};
                s.expected = {{Conserved::spin_hat, 1e-7},
                              {Conserved::linear_momentum, 1e-7},
                              {Conserved::energy, 1e-8}};
                specs.push_back(std::move(s));
              }
              {  // two-sided-invariant kinetic energy: both spins at once
                KineticModel model = LeftAffine{1.0, 0.0, 1.0, 0.3, {}};
                AuditSpec s;
                s.label = "doubly invariant geodesic";
                s.system.bodies = {body_state(model, Vec::Zero(2), phi_c, Vec::Zero(2),
                                              Mat(phi_c * ohat_c), eta2, g2)};
                s.system.inertia = {BodyInertia(1.0, Mat::Identity(2, 2))};
                s.system.models = {model};
                s.expected = {{Conserved::spin, 1e-7},
                              {Conserved::spin_hat, 1e-7},
                              {Conserved::energy, 1e-8}};
                specs.push_back(std::move(s));
              }
              {  // rotation-invariant body and well: skew spatial spin
                KineticModel model = DAlembert{1.0, Mat(0.8 * Mat::Identity(2, 2))};
                AuditSpec s;
                s.label = "isotropic body in a dilatation well";
                s.system.bodies = {body_state(model, Vec::Zero(2), phi_d, v2(0.4, -0.1),
                                              vel_d, eta2, g2)};
                s.system.inertia = {BodyInertia(1.0, Mat(0.8 * Mat::Identity(2, 2)))};
                s.system.models = {model};
                s.terms = {DilatationStabilizer{0.8, 0}};
                s.expected = {{Conserved::spin_skew, 1e-7},
                              {Conserved::linear_momentum, 1e-7},
                              {Conserved::energy, 1e-8}};
                specs.push_back(std::move(s));
              }
              {  // translation-invariant pair couplings: total linear momentum
                KineticModel m0 = DAlembert{1.0, Mat::Identity(2, 2)};
                KineticModel m1 = DAlembert{1.5, Mat(0.5 * Mat::Identity(2, 2))};
                Mat phi1(2, 2), v_int0(2, 2), v_int1(2, 2);
                phi1 << 1.1, 0.05, 0.0, 0.95;
                v_int0 << 0.0, -0.1, 0.1, 0.0;
                v_int1 << 0.0, 0.1, -0.1, 0.0;
                AuditSpec s;
                s.label = "interacting pair";
                s.system.bodies = {
                    body_state(m0, v2(-0.6, 0.0), Mat::Identity(2, 2), v2(0.0, 0.5),
                               v_int0, eta2, g2),
                    body_state(m1, v2(0.6, 0.0), phi1, v2(0.0, -1.0 / 3.0), v_int1,
                               eta2, g2)};
                s.system.inertia = {BodyInertia(1.0, Mat::Identity(2, 2)),
                                    BodyInertia(1.5, Mat(0.5 * Mat::Identity(2, 2)))};
                s.system.models = {m0, m1};
                s.terms = {SpatialSpring{2.0, 0.5, {0, 1}},
                           MutualAffine{v2(0.3, 0.15), {}, {0, 1}},
                           DilatationStabilizer{1.0, 0}, DilatationStabilizer{1.0, 1}};
                s.expected = {{Conserved::linear_momentum, 1e-7}, {Conserved::energy, 1e-8}};
                specs.push_back(std::move(s));
              }

              bool pass = true;
              double worst = 0.0;
              std::string failing;
              for (const AuditSpec& spec : specs) {
                ConservationReport rep = audit(spec, eta2, g2, 1e-3, 10.0);
                for (const ConservationEntry& entry : rep.entries) {
                  worst = std::max(worst, entry.max_drift);
                  if (!entry.pass) {
                    pass = false;
                    failing += (failing.empty() ? "" : ", ") + spec.label + "/" +
                               conserved_name(entry.quantity) + " " + fmt(entry.max_drift);
                  }
                }
              }
              detail = "5 runs, rk4 dt 1e-3, worst drift " + fmt(worst) +
                       (failing.empty() ? "" : "; failing: " + failing);
              return pass;
            });

  criterion(10,
            "zero-I internal kinetic energy makes placements evolve by the matrix "
            "exponential",
            [&](std::string& detail) {
              Mat phi0(2, 2), ohat(2, 2);
              phi0 << 1.2, 0.1, 0.0, 0.9;
              ohat << 0.3, 1.1, -0.9, -0.1;
              KineticModel model = LeftAffine{1.0, 0.0, 1.0, 0.3, {}};
              CanonicalHamiltonian H({model}, eta2, g2);
              ChartLayout chart{1, 2};
              PhaseState z = body_state(model, Vec::Zero(2), phi0, Vec::Zero(2),
                                        Mat(phi0 * ohat), eta2, g2);
              Vec z0 = pack_state(chart, {z});
              Trajectory traj = simulate(Integrator::rk4, H, z0, 1e-4, 1.0, 1000);
              Mat num = unpack_state(chart, traj.samples.back().z)[0].phi.matrix();
              Mat exact = phi0 * mat_exp(ohat);
              const double rel = (num - exact).norm() / exact.norm();
              detail = "dt 1e-4, t 1, rel err " + fmt(rel) + ", tol 1e-6";
              return rel <= 1e-6;
            });

  criterion(11,
            "unit-determinant initial data with dominant rotation stays a bounded "
            "vibration over a 10x longer run",
            [&](std::string& detail) {
              Mat phi0(2, 2), ohat(2, 2);
              phi0 << 1.2, 0.1, 0.0, 0.9;
              phi0 /= std::sqrt(phi0.determinant());
              ohat << 0.3, 1.1, -0.9, -0.3;  // traceless, rotation-dominant
              KineticModel model = LeftAffine{1.0, 0.0, 1.0, 0.3, {}};
              CanonicalHamiltonian H({model}, eta2, g2);
              ChartLayout chart{1, 2};
              PhaseState z = body_state(model, Vec::Zero(2), phi0, Vec::Zero(2),
                                        Mat(phi0 * ohat), eta2, g2);
              Vec z0 = pack_state(chart, {z});
              Trajectory traj = simulate(Integrator::rk4, H, z0, 5e-3, 100.0, 10);

              const int n = 2;
              std::vector<double> lo_short(n, 1e300), hi_short(n, -1e300);
              std::vector<double> lo_long(n, 1e300), hi_long(n, -1e300);
              for (const TrajectorySample& sample : traj.samples) {
                std::vector<PhaseState> bodies = unpack_state(chart, sample.z);
                std::vector<double> k = deformation_invariants(bodies[0].phi, eta2, g2);
                for (int a = 0; a < n; ++a) {
                  lo_long[a] = std::min(lo_long[a], k[a]);
                  hi_long[a] = std::max(hi_long[a], k[a]);
                  if (sample.t <= 10.0 + 1e-9) {
                    lo_short[a] = std::min(lo_short[a], k[a]);
                    hi_short[a] = std::max(hi_short[a], k[a]);
                  }
                }
              }
              bool pass = true;
              double worst_ratio = 0.0;
              for (int a = 0; a < n; ++a) {
                const double range_short = hi_short[a] - lo_short[a];
                const double range_long = hi_long[a] - lo_long[a];
                pass = pass && range_short > 1e-6;
                const double ratio = range_long / range_short;
                worst_ratio = std::max(worst_ratio, ratio);
                pass = pass && ratio <= 1.5;
              }
              detail = "invariant range on t<=100 vs t<=10: ratio " + fmt(worst_ratio) +
                       ", bound 1.5";
              return pass;
            });

  criterion(12,
            "simulate and check are byte-deterministic and the fault-injection hook "
            "trips the suite",
            [&](std::string& detail) {
              const std::string scenario = g_scenarios + "/two_body_spring.json";
              const std::filesystem::path out_a = g_workdir / "run_a.csv";
              const std::filesystem::path out_b = g_workdir / "run_b.csv";
              RunResult sim_a = run_cli({"simulate", scenario, "--out", out_a.string()});
              RunResult sim_b = run_cli({"simulate", scenario, "--out", out_b.string()});
              const bool sim_ok = sim_a.exit_code == 0 && sim_b.exit_code == 0;
              const bool sim_same = sim_ok && !read_file(out_a).empty() &&
                                    read_file(out_a) == read_file(out_b);

              RunResult check_a = run_cli({"check", "--seed", "7"});
              RunResult check_b = run_cli({"check", "--seed", "7"});
              const bool check_ok = check_a.exit_code == 0 && check_b.exit_code == 0;
              const bool check_same = check_ok && !check_a.output.empty() &&
                                      check_a.output == check_b.output;

              RunResult flipped =
                  run_cli({"check", "--seed", "7", "--trials", "10", "--inject-flip"});
              const bool flip_trips = flipped.exit_code != 0;

              detail = std::string("simulate ") + (sim_same ? "identical" : "DIFFERS") +
                       ", check " + (check_same ? "identical" : "DIFFERS") +
                       ", injected fault " + (flip_trips ? "detected" : "NOT detected");
              return sim_same && check_same && flip_trips;
            });

  std::filesystem::remove_all(g_workdir, ec);
  std::printf("%d of 12 criteria passed\n", 12 - g_failures);
  return g_failures;
}
