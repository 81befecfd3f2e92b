// Command-line front end: scenario integration, invariant inspection of
// placements, and the randomized property suites.

#include <abd/checks.hpp>
#include <abd/mutual.hpp>
#include <abd/scenario.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

// 0: success; 2: input or setup rejected; 3: numerical breakdown.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

abd::Mat parse_cli_matrix(const std::string& text, const std::string& what) {
  json v;
  try {
    v = json::parse(text);
  } catch (const json::parse_error& e) {
    throw abd::ValidationError(what + ": " + e.what());
  }
  if (!v.is_array() || v.empty())
    throw abd::ValidationError(what + ": expected a JSON array of matrix rows");
  const int n = static_cast<int>(v.size());
  abd::Mat out(n, n);
  for (int i = 0; i < n; ++i) {
    const json& row = v[i];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw abd::ValidationError(what + ": row " + std::to_string(i) + " must hold " +
                                 std::to_string(n) + " numbers");
    for (int j = 0; j < n; ++j) {
      if (!row[j].is_number())
        throw abd::ValidationError(what + ": entry (" + std::to_string(i) + "," +
                                   std::to_string(j) + ") is not a number");
      out(i, j) = row[j].get<double>();
      if (!std::isfinite(out(i, j)))
        throw abd::ValidationError(what + ": entry (" + std::to_string(i) + "," +
                                   std::to_string(j) + ") must be finite");
    }
  }
  return out;
}

json matrix_to_json(const abd::Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int run_simulate(const std::string& scenario_path, const std::string& out_path) {
  try {
    abd::Scenario scenario = abd::load_scenario(scenario_path);
    std::ostringstream table;
    abd::run_scenario_csv(scenario, table);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "simulate: cannot open output file '" << out_path << "'\n";
      return kExitValidation;
    }
    out << table.str();
    if (!out) {
      std::cerr << "simulate: failed writing '" << out_path << "'\n";
      return kExitValidation;
    }
    return kExitOk;
  } catch (const abd::SingularInertia& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const abd::SingularMap& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const abd::NonConvergence& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const abd::LogUndefined& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const abd::Error& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitValidation;
  }
}

int run_invariants(const std::string& phi_text, const std::vector<std::string>& pair_texts,
                   const std::vector<std::string>& metric_texts) {
  try {
    if (phi_text.empty() == pair_texts.empty()) {
      std::cerr << "invariants: give exactly one of --phi or --pair\n";
      return kExitValidation;
    }
    abd::Mat phi_m;
    abd::Mat psi_m;
    if (!pair_texts.empty()) {
      psi_m = parse_cli_matrix(pair_texts[0], "invariants: --pair first matrix");
      phi_m = parse_cli_matrix(pair_texts[1], "invariants: --pair second matrix");
      if (psi_m.rows() != phi_m.rows())
        throw abd::ValidationError("invariants: the two placements must share a dimension");
    } else {
      phi_m = parse_cli_matrix(phi_text, "invariants: --phi");
      psi_m = abd::Mat::Identity(phi_m.rows(), phi_m.cols());
    }
    const int n = static_cast<int>(phi_m.rows());

    abd::Mat g_m = abd::Mat::Identity(n, n);
    abd::Mat eta_m = abd::Mat::Identity(n, n);
    if (!metric_texts.empty()) {
      g_m = parse_cli_matrix(metric_texts[0], "invariants: --metrics space metric");
      eta_m = parse_cli_matrix(metric_texts[1], "invariants: --metrics material metric");
      if (g_m.rows() != n || eta_m.rows() != n)
        throw abd::ValidationError("invariants: metrics must match the placement dimension");
    }
    abd::MetricTensor g(g_m, abd::Space::V);
    abd::MetricTensor eta(eta_m, abd::Space::U);

    abd::LinMap psi(psi_m, abd::tag::mixed_VU);
    abd::LinMap phi(phi_m, abd::tag::mixed_VU);
    std::vector<double> metric_invs = abd::mutual_metric_invariants(psi, phi, eta, g);
    std::vector<double> affine_invs = abd::affine_invariants(psi, phi);
    abd::MutualDisplacement disp = abd::mutual_displacement(psi, phi);
    abd::MutualTensors tensors = abd::mutual_tensors(psi, phi, eta, g);
    const abd::Mat strain = 0.5 * (tensors.G_mut.matrix() - eta.components());

    json out;
    out["K"] = metric_invs;
    out["M"] = affine_invs;
    out["Gamma"] = matrix_to_json(disp.Gamma.matrix());
    out["Sigma_disp"] = matrix_to_json(disp.Sigma_disp.matrix());
    out["E_norm"] = strain.norm();
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  } catch (const abd::Error& e) {
    // A singular placement has no displacement invariants: that is a rejected
    // input for this diagnostic command, not an integration breakdown.
    std::cerr << "invariants: " << e.what() << "\n";
    return kExitValidation;
  }
}

int run_check(const abd::CheckOptions& options) {
  try {
    abd::CheckReport report = abd::run_check_suite(options);
    std::cout << abd::format_check_report(report);
    return report.all_pass ? kExitOk : 1;
  } catch (const abd::Error& e) {
    std::cerr << "check: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affine body dynamics toolkit"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_path;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "integrate a scenario file and write the diagnostics table");
  simulate->add_option("scenario", scenario_path, "scenario JSON file")->required();
  simulate->add_option("--out", out_path, "output CSV path")->required();

  std::string phi_text;
  std::vector<std::string> pair_texts;
  std::vector<std::string> metric_texts;
  CLI::App* invariants = app.add_subcommand(
      "invariants", "print invariants of one placement or a pair as JSON");
  invariants->add_option("--phi", phi_text,
                         "single placement as JSON rows; compared against the identity");
  // allow_extra_args(false) keeps CLI11 from comma-splitting bracketed values,
  // which would shred the JSON matrices.
  invariants->add_option("--pair", pair_texts, "two placements as JSON rows")
      ->expected(2)
      ->allow_extra_args(false);
  invariants->add_option("--metrics", metric_texts,
                         "space metric then material metric as JSON rows")
      ->expected(2)
      ->allow_extra_args(false);

  abd::CheckOptions check_options;
  CLI::App* check = app.add_subcommand("check", "run the randomized property suites");
  check->add_option("--dim", check_options.dim, "single dimension to test (default: 2 and 3)")
      ->check(CLI::Range(2, 4));
  check->add_option("--seed", check_options.seed, "master seed (default 7)");
  check->add_option("--trials", check_options.trials, "trials per property (default 100)")
      ->check(CLI::PositiveNumber);
  check->add_option("--tol", check_options.tol, "error tolerance (default 1e-8)");
  check
      ->add_flag("--inject-flip", check_options.inject_flip,
                 "deliberately break one rule; the run must then fail")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (simulate->parsed()) return run_simulate(scenario_path, out_path);
  if (invariants->parsed()) return run_invariants(phi_text, pair_texts, metric_texts);
  if (check->parsed()) return run_check(check_options);
  return kExitValidation;
}
