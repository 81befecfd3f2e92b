#include <abd/scenario.hpp>

#include <abd/deformation.hpp>
#include <abd/mutual.hpp>

#include <json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

namespace abd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("scenario: " + where + ": " + what);
}

void check_object(const json& v, const std::string& where) {
  if (!v.is_object()) fail(where, "expected an object");
}

// Strict field policy: every key present must be on the allowed list.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(where, "unknown field '" + item.key() + "'");
  }
}

const json& need(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double need_number(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where + "." + key, "must be finite");
  return d;
}

long long need_integer(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<long long>();
}

std::string need_string(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

bool optional_flag(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_boolean()) fail(where + "." + key, "expected a boolean");
  return it->get<bool>();
}

Vec parse_vector(const json& v, int n, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    fail(where, "expected an array of " + std::to_string(n) + " numbers");
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    if (!v[i].is_number())
      fail(where, "entry " + std::to_string(i) + " is not a number");
    out(i) = v[i].get<double>();
    if (!std::isfinite(out(i)))
      fail(where, "entry " + std::to_string(i) + " must be finite");
  }
  return out;
}

Mat parse_matrix(const json& v, int n, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    fail(where, "expected " + std::to_string(n) + " rows of " + std::to_string(n) + " numbers");
  Mat out(n, n);
  for (int i = 0; i < n; ++i) {
    const json& row = v[i];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      fail(where, "row " + std::to_string(i) + " must hold " + std::to_string(n) + " numbers");
    for (int j = 0; j < n; ++j) {
      if (!row[j].is_number())
        fail(where, "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is not a number");
      out(i, j) = row[j].get<double>();
      if (!std::isfinite(out(i, j)))
        fail(where, "entry (" + std::to_string(i) + "," + std::to_string(j) + ") must be finite");
    }
  }
  return out;
}

void require_metric(const Mat& m, bool pseudo, const std::string& where) {
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(where, "must be symmetric");
  if (pseudo) {
    if (nearly_singular(m)) fail(where, "must be invertible");
  } else {
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success || nearly_singular(m))
      fail(where, "must be positive definite (or set the pseudo flag)");
  }
}

KineticModel parse_model(const json& v, double mass, const Mat& inertia,
                         const std::string& where) {
  check_object(v, where);
  check_keys(v, where, {"type", "params"});
  const std::string type = need_string(v, "type", where);
  json params = json::object();
  if (v.contains("params")) {
    check_object(v["params"], where + ".params");
    params = v["params"];
  }
  const std::string pwhere = where + ".params";
  if (type == "DAlembert") {
    check_keys(params, pwhere, {});
    return DAlembert{mass, inertia};
  }
  if (type == "LeftAffine") {
    check_keys(params, pwhere, {"I", "A", "B"});
    return LeftAffine{mass, need_number(params, "I", pwhere), need_number(params, "A", pwhere),
                      need_number(params, "B", pwhere), {}};
  }
  if (type == "RightAffine") {
    check_keys(params, pwhere, {"I", "A", "B"});
    return RightAffine{mass, need_number(params, "I", pwhere), need_number(params, "A", pwhere),
                       need_number(params, "B", pwhere)};
  }
  if (type == "IsometricGeneral") {
    check_keys(params, pwhere, {"m2", "I1", "I2", "I3", "I4", "A", "B"});
    return IsometricGeneral{mass,
                            need_number(params, "m2", pwhere),
                            need_number(params, "I1", pwhere),
                            need_number(params, "I2", pwhere),
                            need_number(params, "I3", pwhere),
                            need_number(params, "I4", pwhere),
                            need_number(params, "A", pwhere),
                            need_number(params, "B", pwhere)};
  }
  fail(where + ".type", "unknown kinetic model '" + type +
                            "' (expected DAlembert, LeftAffine, RightAffine, "
                            "or IsometricGeneral)");
}

std::pair<int, int> parse_pair(const json& term, int nbodies, const std::string& where) {
  const json& v = need(term, "pair", where);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    fail(where + ".pair", "expected two body indices");
  const long long a = v[0].get<long long>();
  const long long b = v[1].get<long long>();
  if (a < 0 || a >= nbodies || b < 0 || b >= nbodies)
    fail(where + ".pair", "body indices must lie in [0, " + std::to_string(nbodies) + ")");
  if (a == b) fail(where + ".pair", "the two bodies must differ");
  return {static_cast<int>(a), static_cast<int>(b)};
}

PotentialTerm parse_potential(const json& v, int n, int nbodies, const std::string& where) {
  check_object(v, where);
  check_keys(v, where, {"type", "params", "pair"});
  const std::string type = need_string(v, "type", where);
  const json& params = need(v, "params", where);
  check_object(params, where + ".params");
  const std::string pwhere = where + ".params";

  if (type == "SpatialSpring") {
    check_keys(params, pwhere, {"k", "rest_length"});
    SpatialSpring spring;
    spring.k = need_number(params, "k", pwhere);
    spring.rest_length =
        params.contains("rest_length") ? need_number(params, "rest_length", pwhere) : 0.0;
    spring.pair = parse_pair(v, nbodies, where);
    return spring;
  }
  if (type == "MutualAffine" || type == "MutualMetric") {
    check_keys(params, pwhere, {"kappa", "reference"});
    Vec kappa = parse_vector(need(params, "kappa", pwhere), n, pwhere + ".kappa");
    std::optional<Vec> reference;
    if (params.contains("reference"))
      reference = parse_vector(params["reference"], n, pwhere + ".reference");
    std::pair<int, int> pair = parse_pair(v, nbodies, where);
    if (type == "MutualAffine") return MutualAffine{std::move(kappa), std::move(reference), pair};
    return MutualMetric{std::move(kappa), std::move(reference), pair};
  }
  if (type == "DilatationStabilizer") {
    if (v.contains("pair")) fail(where, "a one-body term takes no pair");
    check_keys(params, pwhere, {"k", "body"});
    DilatationStabilizer well;
    well.k = need_number(params, "k", pwhere);
    const long long body = need_integer(params, "body", pwhere);
    if (body < 0 || body >= nbodies)
      fail(pwhere + ".body", "body index must lie in [0, " + std::to_string(nbodies) + ")");
    well.body = static_cast<int>(body);
    return well;
  }
  fail(where + ".type", "unknown potential '" + type +
                            "' (expected SpatialSpring, MutualAffine, MutualMetric, "
                            "or DilatationStabilizer)");
}

}  // namespace

MetricTensor Scenario::g() const { return MetricTensor(space_metric, Space::V, space_pseudo); }

MetricTensor Scenario::eta() const {
  return MetricTensor(material_metric, Space::U, material_pseudo);
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("scenario: " + origin + ": " + e.what());
  }
  check_object(root, origin);
  check_keys(root, origin,
             {"dimension", "space_metric", "material_metric", "space_metric_pseudo",
              "material_metric_pseudo", "bodies", "potentials", "integrator", "seed"});

  Scenario sc;
  const long long dim = need_integer(root, "dimension", origin);
  if (dim < 1 || dim > 16) fail("dimension", "must lie between 1 and 16");
  const int n = static_cast<int>(dim);
  sc.dimension = n;

  sc.space_pseudo = optional_flag(root, "space_metric_pseudo", origin);
  sc.material_pseudo = optional_flag(root, "material_metric_pseudo", origin);
  sc.space_metric = parse_matrix(need(root, "space_metric", origin), n, "space_metric");
  require_metric(sc.space_metric, sc.space_pseudo, "space_metric");
  sc.material_metric = parse_matrix(need(root, "material_metric", origin), n, "material_metric");
  require_metric(sc.material_metric, sc.material_pseudo, "material_metric");

  const json& bodies = need(root, "bodies", origin);
  if (!bodies.is_array() || bodies.empty()) fail("bodies", "expected a non-empty array");
  for (std::size_t k = 0; k < bodies.size(); ++k) {
    const std::string where = "bodies[" + std::to_string(k) + "]";
    const json& body = bodies[k];
    check_object(body, where);
    check_keys(body, where, {"mass", "inertia", "kinetic_model", "initial"});
    const double mass = need_number(body, "mass", where);
    if (!(mass > 0.0)) fail(where + ".mass", "must be positive");
    Mat inertia = parse_matrix(need(body, "inertia", where), n, where + ".inertia");

    const json& initial = need(body, "initial", where);
    check_object(initial, where + ".initial");
    check_keys(initial, where + ".initial", {"x", "phi", "p", "P"});
    Vec x = parse_vector(need(initial, "x", where), n, where + ".initial.x");
    Mat phi = parse_matrix(need(initial, "phi", where), n, where + ".initial.phi");
    if (nearly_singular(phi)) fail(where + ".initial.phi", "the placement must be invertible");
    Vec p = parse_vector(need(initial, "p", where), n, where + ".initial.p");
    Mat momentum = parse_matrix(need(initial, "P", where), n, where + ".initial.P");

    KineticModel model =
        parse_model(need(body, "kinetic_model", where), mass, inertia, where + ".kinetic_model");

    try {
      sc.system.inertia.push_back(BodyInertia(mass, inertia));
      validate_model(model, n);
    } catch (const Error& e) {
      fail(where, e.what());
    }
    sc.system.models.push_back(std::move(model));
    sc.system.bodies.push_back(PhaseState{std::move(x), LinMap(std::move(phi), tag::mixed_VU),
                                          std::move(p),
                                          LinMap(std::move(momentum), tag::mixed_UV)});
  }

  if (root.contains("potentials")) {
    const json& pots = root["potentials"];
    if (!pots.is_array()) fail("potentials", "expected an array");
    for (std::size_t k = 0; k < pots.size(); ++k)
      sc.potentials.push_back(parse_potential(
          pots[k], n, static_cast<int>(bodies.size()), "potentials[" + std::to_string(k) + "]"));
  }

  const json& integ = need(root, "integrator", origin);
  check_object(integ, "integrator");
  check_keys(integ, "integrator", {"method", "dt", "t_end", "output_stride"});
  const std::string method = need_string(integ, "method", "integrator");
  if (method == "rk4")
    sc.method = Integrator::rk4;
  else if (method == "implicit_midpoint")
    sc.method = Integrator::implicit_midpoint;
  else
    fail("integrator.method", "unknown method '" + method +
                                  "' (expected rk4 or implicit_midpoint)");
  sc.dt = need_number(integ, "dt", "integrator");
  if (!(sc.dt > 0.0)) fail("integrator.dt", "must be positive");
  sc.t_end = need_number(integ, "t_end", "integrator");
  if (!(sc.t_end >= 0.0)) fail("integrator.t_end", "must be non-negative");
  if (integ.contains("output_stride")) {
    const long long stride = need_integer(integ, "output_stride", "integrator");
    if (stride < 1) fail("integrator.output_stride", "must be at least 1");
    if (stride > 1000000000LL) fail("integrator.output_stride", "is unreasonably large");
    sc.output_stride = static_cast<int>(stride);
  }

  sc.seed = need_integer(root, "seed", origin);

  try {
    validate_system(sc.system);
    validate_terms(sc.potentials, sc.system.size(), n);
    sc.g();
    sc.eta();
  } catch (const Error& e) {
    throw ValidationError("scenario: " + origin + ": " + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("scenario: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path);
}

std::vector<std::pair<int, int>> declared_pairs(const std::vector<PotentialTerm>& terms) {
  std::vector<std::pair<int, int>> out;
  for (const PotentialTerm& term : terms) {
    const std::vector<int> bodies = term_bodies(term);
    if (bodies.size() != 2) continue;
    const std::pair<int, int> pair{bodies[0], bodies[1]};
    if (std::find(out.begin(), out.end(), pair) == out.end()) out.push_back(pair);
  }
  return out;
}

std::vector<std::string> csv_columns(const Scenario& scenario) {
  const int n = scenario.dimension;
  const int nbodies = scenario.system.size();
  std::vector<std::string> cols;
  cols.push_back("t");
  for (int k = 0; k < nbodies; ++k) {
    const std::string body = std::to_string(k + 1);
    cols.push_back("E_kin_" + body);
    for (int a = 1; a <= n; ++a) cols.push_back("K" + std::to_string(a) + "_" + body);
    cols.push_back("detphi_" + body);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        cols.push_back("S" + std::to_string(i + 1) + std::to_string(j + 1) + "_" + body);
  }
  for (const auto& [a, b] : declared_pairs(scenario.potentials)) {
    const std::string suffix = std::to_string(a + 1) + std::to_string(b + 1);
    for (int m = 1; m <= n; ++m) cols.push_back("M" + std::to_string(m) + "_" + suffix);
  }
  cols.push_back("E_total");
  for (int i = 1; i <= n; ++i) cols.push_back("p_" + std::to_string(i));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      cols.push_back("Jtot_" + std::to_string(i) + std::to_string(j));
  return cols;
}

namespace {

std::vector<double> row_values(const Scenario& scenario,
                               const std::vector<std::pair<int, int>>& pairs, double t,
                               const std::vector<PhaseState>& bodies, double energy,
                               const MetricTensor& eta, const MetricTensor& g) {
  const int n = scenario.dimension;
  const Vec origin = Vec::Zero(n);
  std::vector<double> vals;
  vals.push_back(t);
  for (std::size_t k = 0; k < bodies.size(); ++k) {
    const PhaseState& body = bodies[k];
    Configuration c{body.x, body.phi};
    double kin = 0.0;
    try {
      kin = kinetic_energy_momenta(scenario.system.models[k], c, body.p, body.P, eta, g);
    } catch (const SingularInertia& e) {
      throw SingularInertia("body " + std::to_string(k) + ": " + e.what());
    } catch (const SingularMap& e) {
      throw SingularMap("body " + std::to_string(k) + ": " + e.what());
    }
    vals.push_back(kin);
    for (double inv : deformation_invariants(body.phi, eta, g)) vals.push_back(inv);
    vals.push_back(body.phi.matrix().determinant());
    MomentumMaps maps = momentum_maps(body, eta, g, origin);
    const Mat spin_lowered = g.components() * maps.S.matrix();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) vals.push_back(spin_lowered(i, j));
  }
  for (const auto& [a, b] : pairs)
    for (double inv : affine_invariants(bodies[a].phi, bodies[b].phi)) vals.push_back(inv);
  vals.push_back(energy);
  MomentumMaps totals = total_momentum_maps(bodies, eta, g, origin);
  for (int i = 0; i < n; ++i) vals.push_back(totals.p(i));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) vals.push_back(totals.J_total.matrix()(i, j));
  return vals;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void run_scenario_csv(const Scenario& scenario, std::ostream& out) {
  validate_system(scenario.system);
  const MetricTensor g = scenario.g();
  const MetricTensor eta = scenario.eta();
  validate_terms(scenario.potentials, scenario.system.size(), scenario.dimension);

  const std::vector<std::pair<int, int>> pairs = declared_pairs(scenario.potentials);
  const std::vector<std::string> cols = csv_columns(scenario);

  CanonicalHamiltonian H = system_hamiltonian(scenario.system, scenario.potentials, eta, g);
  const ChartLayout chart{scenario.system.size(), scenario.dimension};
  const Vec z0 = pack_state(chart, scenario.system.bodies);
  const Trajectory trajectory =
      simulate(scenario.method, H, z0, scenario.dt, scenario.t_end, scenario.output_stride);

  std::string line;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) line += ',';
    line += cols[i];
  }
  out << line << '\n';

  for (const TrajectorySample& sample : trajectory.samples) {
    const std::vector<PhaseState> bodies = unpack_state(chart, sample.z);
    const std::vector<double> vals =
        row_values(scenario, pairs, sample.t, bodies, sample.energy, eta, g);
    line.clear();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!std::isfinite(vals[i]))
        throw NonConvergence("output row at t = " + format_value(sample.t) + ": column '" +
                             cols[i] + "' is not finite");
      if (i) line += ',';
      line += format_value(vals[i]);
    }
    out << line << '\n';
  }
}

}  // namespace abd
