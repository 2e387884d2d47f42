#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "builders.hpp"
#include "swt/swt.hpp"

using namespace swt;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kModels{"toy_model.toml", "rabi.toml", "two_qubit_jc.toml", "two_mode_two_qubit.toml"};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / ("swt_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

fs::path write_model(const std::string& name, const std::string& text) {
  fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

// Runs the command-line tool and returns its exit status; stdout goes to `out` when given.
int run_cli(const std::string& args, std::string* out = nullptr) {
  fs::path capture = scratch_dir() / "stdout.txt";
  std::string cmd = std::string(SWT_CLI_PATH) + " " + args + " > " + capture.string() + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  if (out) *out = slurp(capture);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string model_arg(const std::string& name) { return build::model_path(name).string(); }

const char* kMinimalHeader = R"([hilbert]
finite_dims = [2]
bosonic_modes = 1

[symbols]
parameters = ["w", "g"]

[[h0]]
state = [0]
energy = "hbar*w*N0"

[[h0]]
state = [1]
energy = "hbar*w*N0 + 1"
)";

}  // namespace

TEST(ModelFile, ParsesDrivenToyModel) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  EXPECT_EQ(m.signature.finite_dims, std::vector<int>{2});
  EXPECT_EQ(m.signature.bosonic_modes, 1);
  EXPECT_EQ(m.fundamental, std::optional<std::string>("Omega"));
  EXPECT_EQ(m.parameters.size(), 5u);
  ASSERT_EQ(m.h0.size(), 2u);
  ASSERT_EQ(m.perturbations.size(), 1u);
  EXPECT_EQ(m.perturbations[0].harmonic, 1);
  EXPECT_TRUE(m.perturbations[0].hermitian_conjugate);
  EXPECT_EQ(m.order, 2);
  EXPECT_DOUBLE_EQ(m.bindings.at("g"), 0.05);
  EXPECT_DOUBLE_EQ(model_bindings(m).at("hbar"), 1.0);
}

TEST(ModelFile, EmptyPerturbationListGivesDiagonalResult) {
  ModelSpec m = parse_model_string(kMinimalHeader);
  EXPECT_TRUE(m.perturbations.empty());
  SwtResult r = run_model(m);
  EXPECT_EQ(r.effective, build_h0(m));
}

TEST(ModelFile, OutOfRangeBraReportsPosition) {
  std::string text = std::string(kMinimalHeader) + R"(
[[perturbation]]
coeff = "g"
bra = [2]
ket = [0]
)";
  try {
    parse_model_string(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.line(), 18);
    EXPECT_GT(e.column(), 0);
    EXPECT_NE(std::string(e.what()).find("18:"), std::string::npos);
  }
}

TEST(ModelFile, UndeclaredSymbolIsRejected) {
  std::string text = std::string(kMinimalHeader) + R"(
[[perturbation]]
coeff = "g*kappa"
bra = [0]
ket = [1]
)";
  try {
    parse_model_string(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.line(), 17);
    EXPECT_NE(std::string(e.what()).find("kappa"), std::string::npos);
  }
}

TEST(ModelFile, NumberOperatorBeyondModesIsRejected) {
  std::string text = kMinimalHeader;
  text.replace(text.find("hbar*w*N0 + 1"), 13, "hbar*w*N1 + 1");
  EXPECT_THROW(parse_model_string(text), ValidationError);
}

TEST(ModelFile, ExplicitMaskMustBeConjugationClosed) {
  std::string text = std::string(kMinimalHeader) + R"(
[swt]
mask = "explicit"

[[swt.eliminate]]
bra = [0]
ket = [1]
delta = [1]
)";
  EXPECT_THROW(parse_model_string(text), ValidationError);
  text += R"(
[[swt.eliminate]]
bra = [1]
ket = [0]
delta = [-1]
)";
  ModelSpec m = parse_model_string(text);
  EXPECT_EQ(m.eliminate.size(), 2u);
}

TEST(ModelFile, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_model_string(std::string(kMinimalHeader) + "\n[swt]\nordr = 2\n"), ValidationError);
  EXPECT_THROW(parse_model_string("[hilbert]\nfinite_dims = [2\n"), ParseError);
  EXPECT_THROW(parse_model_string(std::string(kMinimalHeader) + "\n[bindings]\nhbar = 2.0\n"), ValidationError);
}

TEST(ModelFile, HarmonicNeedsFundamental) {
  std::string text = std::string(kMinimalHeader) + R"(
[[perturbation]]
coeff = "g"
bra = [0]
ket = [1]
harmonic = 1
)";
  EXPECT_THROW(parse_model_string(text), ValidationError);
}

TEST(ModelFile, RenderParseRoundTripIsAFixpoint) {
  for (const auto& name : kModels) {
    ModelSpec m = parse_model(build::model_path(name));
    std::string rendered = render_model(m);
    ModelSpec again = parse_model_string(rendered);
    EXPECT_EQ(again, m) << name;
    EXPECT_EQ(render_model(again), rendered) << name;
  }
}

TEST(Derive, OutputIsDeterministic) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  for (const char* format : {"text", "latex", "json"}) EXPECT_EQ(cmd_derive(m, 2, format), cmd_derive(m, 2, format));
}

TEST(Derive, TextSections) {
  ModelSpec m = parse_model(build::model_path("rabi.toml"));
  std::string out = cmd_derive(m, 1, "text");
  EXPECT_NE(out.find("# generator order 1"), std::string::npos);
  EXPECT_NE(out.find("# effective Hamiltonian to order 1"), std::string::npos);
  // Four channels of g(a + a†)σx.
  std::string gen = out.substr(0, out.find("# effective"));
  EXPECT_EQ(std::count(gen.begin(), gen.end(), '\n'), 5);
  EXPECT_NE(gen.find("|0><1|"), std::string::npos);
  EXPECT_NE(gen.find("adag0"), std::string::npos);
}

TEST(Derive, LatexIsWellFormed) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  std::string out = cmd_derive(m, 2, "latex");
  EXPECT_NE(out.find("% generator order 2"), std::string::npos);
  std::size_t begins = 0, ends = 0;
  for (std::size_t p = 0; (p = out.find("\\begin{aligned}", p)) != std::string::npos; ++p) ++begins;
  for (std::size_t p = 0; (p = out.find("\\end{aligned}", p)) != std::string::npos; ++p) ++ends;
  EXPECT_EQ(begins, ends);
  EXPECT_EQ(std::count(out.begin(), out.end(), '{'), std::count(out.begin(), out.end(), '}'));
  EXPECT_NE(out.find("\\Omega"), std::string::npos);
  EXPECT_NE(out.find("\\hbar"), std::string::npos);
}

TEST(Derive, JsonStructure) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  Json j = Json::parse(cmd_derive(m, 2, "json"));
  EXPECT_EQ(j["order"], 2);
  EXPECT_EQ(j["fundamental"], "Omega");
  EXPECT_EQ(j["generators"].size(), 2u);
  EXPECT_EQ(j["generators"][0]["terms"].size(), 4u);
  for (const auto& d : j["diagnostics"]) EXPECT_EQ(d["status"], "ok");
}

TEST(Derive, OrderZeroEchoesH0) {
  ModelSpec m = parse_model(build::model_path("rabi.toml"));
  std::string out = cmd_derive(m, 0, "text");
  EXPECT_EQ(out, "# effective Hamiltonian to order 0\n" + render_text(build_h0(m)));
}

TEST(Verify, ToyModelPasses) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  VerifyOptions opt;
  opt.seed = 4;
  VerifyReport rep = cmd_verify(m, opt);
  EXPECT_TRUE(rep.pass) << rep.json.dump(2);
  std::set<std::string> names;
  for (const auto& c : rep.json["checks"]) names.insert(c["name"].get<std::string>());
  for (const char* n : {"symbolic_defining_identity", "generator_antihermitian", "effective_hermitian",
                        "mask_completeness", "numeric_residual", "matrix_elements", "dispersive_shift"})
    EXPECT_TRUE(names.contains(n)) << n;
}

TEST(Verify, AllModelsPass) {
  for (const auto& name : kModels) {
    ModelSpec m = parse_model(build::model_path(name));
    VerifyOptions opt;
    opt.truncation = m.signature.bosonic_modes > 1 ? 6 : 12;
    opt.samples = 2;
    VerifyReport rep = cmd_verify(m, opt);
    EXPECT_TRUE(rep.pass) << name << "\n" << rep.json.dump(2);
  }
}

TEST(Verify, ResonantBindingIsReported) {
  ModelSpec m = parse_model(build::model_path("rabi.toml"));
  VerifyOptions opt;
  opt.overrides = parse_bindings("Omega=0.37", m);
  EXPECT_THROW(cmd_verify(m, opt), Resonance);
}

TEST(Verify, BindingsAreValidated) {
  ModelSpec m = parse_model(build::model_path("rabi.toml"));
  EXPECT_EQ(parse_bindings("g=0.1,Omega=2", m), (Bindings{{"g", 0.1}, {"Omega", 2.0}}));
  EXPECT_THROW(parse_bindings("kappa=1", m), ValidationError);
  EXPECT_THROW(parse_bindings("g=abc", m), ValidationError);
  EXPECT_THROW(parse_bindings("g", m), ValidationError);
}

TEST(Sweep, HarmonicResonatorHasTwoPoles) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  SweepResult s = sweep_dispersive_shift(m, "Omega", parse_range("0:3:0.01"), 3);
  ASSERT_EQ(s.poles.size(), 2u);
  EXPECT_NEAR(s.poles[0], 0.5, 1e-9);
  EXPECT_NEAR(s.poles[1], 1.5, 1e-9);
  EXPECT_EQ(s.x.size(), 300u);
}

TEST(Sweep, ZeroLengthRangeGivesHeaderOnly) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  fs::path out = scratch_dir() / "empty.csv";
  SweepResult s = cmd_sweep(m, "Omega", "1:1:0.1", "dispersive_shift", 1, out);
  EXPECT_TRUE(s.x.empty());
  EXPECT_EQ(slurp(out), "Omega,chi\n");
}

TEST(Sweep, SidecarListsPolesAndDenominators) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  fs::path out = scratch_dir() / "sweep.csv";
  cmd_sweep(m, "Omega", "0:3:0.25", "dispersive_shift", 2, out);
  EXPECT_EQ(sidecar_path(out), scratch_dir() / "sweep.poles.json");
  Json j = Json::parse(slurp(sidecar_path(out)));
  EXPECT_EQ(j["param"], "Omega");
  EXPECT_EQ(j["n"], 2);
  EXPECT_EQ(j["poles"].size(), 2u);
  EXPECT_FALSE(j["denominators"].empty());
  // Grid points that land on a pole are written with an empty value.
  std::string csv = slurp(out);
  EXPECT_NE(csv.find("5.000000000000e-01,\n"), std::string::npos);
  EXPECT_NE(csv.find("1.500000000000e+00,\n"), std::string::npos);
}

TEST(Sweep, RangeAndParameterAreValidated) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  EXPECT_THROW(parse_range("0:1"), ValidationError);
  EXPECT_THROW(parse_range("0:1:0"), ValidationError);
  EXPECT_THROW(parse_range("a:1:0.1"), ValidationError);
  EXPECT_THROW(sweep_dispersive_shift(m, "kappa", parse_range("0:1:0.1"), 1), ValidationError);
}

TEST(CommandLine, ExitCodes) {
  std::string out;
  EXPECT_EQ(run_cli("derive " + model_arg("rabi.toml"), &out), kExitOk);
  EXPECT_NE(out.find("# effective Hamiltonian to order 2"), std::string::npos);
  EXPECT_EQ(run_cli("derive " + model_arg("toy_model.toml") + " --format json", &out), kExitOk);
  EXPECT_NO_THROW(Json::parse(out));

  EXPECT_EQ(run_cli("verify " + model_arg("toy_model.toml") + " --truncation 12 --seed 1"), kExitOk);
  EXPECT_EQ(run_cli("verify " + model_arg("rabi.toml") + " --bind Omega=0.37"), kExitSingular);
  EXPECT_EQ(run_cli("verify " + model_arg("rabi.toml") + " --bind kappa=1"), kExitValidation);

  fs::path bad = write_model("bad.toml", std::string(kMinimalHeader) + "\n[[perturbation]]\ncoeff = \"g\"\nbra = [2]\nket = [0]\n");
  EXPECT_EQ(run_cli("derive " + bad.string()), kExitValidation);
  EXPECT_EQ(run_cli("derive"), kExitValidation);
  EXPECT_EQ(run_cli("frobnicate"), kExitValidation);

  fs::path csv = scratch_dir() / "cli.csv";
  EXPECT_EQ(run_cli("sweep " + model_arg("toy_model.toml") + " --param Omega --range 0:3:0.5 --n 1 --out " + csv.string()),
            kExitOk);
  EXPECT_TRUE(fs::exists(sidecar_path(csv)));
}

TEST(CommandLine, FockSingularExitCode) {
  std::string text = R"([hilbert]
finite_dims = [2]
bosonic_modes = 1

[symbols]
parameters = ["g"]

[[h0]]
state = [0]
energy = "N0^2"

[[h0]]
state = [1]
energy = "4"

[[perturbation]]
coeff = "g"
bra = [0]
ket = [1]
hermitian_conjugate = true
)";
  fs::path p = write_model("fock_singular.toml", text);
  EXPECT_EQ(run_cli("derive " + p.string()), kExitSingular);
}
