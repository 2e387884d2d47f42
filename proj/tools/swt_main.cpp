// Command-line front end: derive, verify and sweep on TOML model files.
//
// Exit codes: 0 ok, 2 validation/parse error, 3 resonance or singular evaluation,
// 4 verification failure.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "swt/swt.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Closed-form Schrieffer-Wolff generators and effective Hamiltonians"};
  app.require_subcommand(1);

  std::string model;
  std::optional<int> order;
  std::string format = "text";
  auto* derive = app.add_subcommand("derive", "solve the generators and print S and H_eff");
  derive->add_option("model", model, "model file")->required()->check(CLI::ExistingFile);
  derive->add_option("--order", order, "perturbation order (default: [swt] order)")->check(CLI::NonNegativeNumber);
  derive->add_option("--format", format, "output format")->check(CLI::IsMember({"text", "latex", "json"}));

  swt::VerifyOptions vopt;
  std::string bind;
  auto* verify = app.add_subcommand("verify", "check the derivation against the numeric oracle");
  verify->add_option("model", model, "model file")->required()->check(CLI::ExistingFile);
  verify->add_option("--truncation", vopt.truncation, "Fock cutoff per mode")->check(CLI::PositiveNumber);
  verify->add_option("--bind", bind, "binding overrides, k=v,k2=v2");
  verify->add_option("--seed", vopt.seed, "seed for the jittered bindings");
  verify->add_option("--samples", vopt.samples, "number of jittered binding sets")->check(CLI::PositiveNumber);

  std::string param, range, observable = "dispersive_shift", out;
  int level = 0;
  auto* sweep = app.add_subcommand("sweep", "tabulate an observable over a parameter range");
  sweep->add_option("model", model, "model file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "parameter to sweep")->required();
  sweep->add_option("--range", range, "start:stop:step, stop excluded")->required();
  sweep->add_option("--observable", observable, "observable")->check(CLI::IsMember({"dispersive_shift"}));
  sweep->add_option("--n", level, "Fock level N")->required()->check(CLI::NonNegativeNumber);
  sweep->add_option("--out", out, "CSV output path; poles go to <out>.poles.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? swt::kExitOk : swt::kExitValidation;
  }

  try {
    swt::ModelSpec spec = swt::parse_model(model);
    if (*derive) {
      std::cout << swt::cmd_derive(spec, order, format);
    } else if (*verify) {
      vopt.overrides = swt::parse_bindings(bind, spec);
      swt::VerifyReport report = swt::cmd_verify(spec, vopt);
      std::cout << report.json.dump(2) << "\n";
      return report.pass ? swt::kExitOk : swt::kExitVerification;
    } else if (*sweep) {
      swt::SweepResult s = swt::cmd_sweep(spec, param, range, observable, level, out);
      std::cerr << s.x.size() << " points, " << s.poles.size() << " poles\n";
    }
  } catch (const swt::LocatedError& e) {
    std::cerr << model << ":" << e.what() << "\n";
    return swt::kExitValidation;
  } catch (const swt::Resonance& e) {
    std::cerr << "resonance: " << e.what() << "\n";
    return swt::kExitSingular;
  } catch (const swt::FockSingular& e) {
    std::cerr << "singular Fock levels: " << e.what() << "\n";
    return swt::kExitSingular;
  } catch (const swt::EvalSingular& e) {
    std::cerr << "singular evaluation: " << e.what() << "\n";
    return swt::kExitSingular;
  } catch (const swt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return swt::kExitValidation;
  }
  return swt::kExitOk;
}
