#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

#include "builders.hpp"
#include "dense_reference.hpp"
#include "swt/swt.hpp"

using namespace swt;
using build::term;

namespace {

struct Solved {
  ModelSpec spec;
  OperatorSum h0;
  OperatorSum S;
  OperatorSum P;
};

// First-order generator of a model, solved against its default mask.
Solved first_order(const std::string& name) {
  ModelSpec m = parse_model(build::model_path(name));
  OperatorSum h0 = build_h0(m);
  OperatorSum P = -masked_part(build_perturbation(m), build_mask(m));
  std::optional<std::string_view> drive;
  if (m.fundamental) drive = *m.fundamental;
  return {m, h0, solve_generator(h0, P, drive), P};
}

Bindings toy_bindings(const ref::ToyParameters& p) {
  return {{"Omega_T", p.Omega_T}, {"Omega_z", p.Omega_z}, {"alpha", p.alpha}, {"g", p.g}, {"Omega", p.Omega}, {"hbar", p.hbar}};
}

}  // namespace

TEST(Materialize, IdentityOperator) {
  auto ctx = build::context(6, {});
  EXPECT_EQ(materialize(identity_operator(build::kQubitMode), ctx), Matrix::Identity(14, 14));
}

TEST(Materialize, LoweringOperatorMatchesDenseReference) {
  auto ctx = build::context(6, {});
  Matrix a = materialize(term({0}, {0}, {1}, "1") + term({1}, {1}, {1}, "1"), ctx);
  EXPECT_LT(operator_norm(a - ref::kron(ref::annihilation(6), ref::identity(2))), 1e-15);
}

TEST(Materialize, NumberLoweringCommutator) {
  auto ctx = build::context(6, {});
  OperatorSum N = term({0}, {0}, {0}, "N0") + term({1}, {1}, {0}, "N0");
  OperatorSum a = term({0}, {0}, {1}, "1") + term({1}, {1}, {1}, "1");
  Matrix mN = materialize(N, ctx), ma = materialize(a, ctx);
  EXPECT_LT(operator_norm(mN * ma - ma * mN + ma), 1e-14);
  EXPECT_LT(operator_norm(materialize(commutator(N, a), ctx) + ma), 1e-14);
}

TEST(Materialize, RequiresTimeForDrivenTerms) {
  auto ctx = build::context(4, {{"g", 1.0}, {"Omega", 1.0}});
  EXPECT_THROW(materialize(term({0}, {1}, {0}, "g", 1), ctx), PreconditionError);
  ctx.fundamental = "Omega";
  EXPECT_THROW(materialize(term({0}, {1}, {0}, "g", 1), ctx), PreconditionError);
  ctx.time = 0.5;
  Matrix M = materialize(term({0}, {1}, {0}, "g", 1), ctx);
  EXPECT_NEAR(std::abs(M(0, 1) - std::polar(1.0, 0.5)), 0.0, 1e-15);
}

TEST(ResidualCheck, ZeroOperatorsGiveZero) {
  auto s = first_order("rabi.toml");
  NumericContext ctx{s.spec.signature, {20}, model_bindings(s.spec), {}, {}, {}};
  EXPECT_EQ(residual_check(s.h0, OperatorSum{}, OperatorSum{}, ctx), 0.0);
}

TEST(ResidualCheck, DetectsCorruptedGenerator) {
  auto s = first_order("rabi.toml");
  NumericContext ctx{s.spec.signature, {20}, model_bindings(s.spec), {}, {}, {}};
  EXPECT_LT(residual_check(s.h0, s.S, s.P, ctx), 1e-10);
  EXPECT_GT(residual_check(s.h0, s.S.scaled(Rational(2)), s.P, ctx), 1e-3);
  OperatorSum tweaked = s.S + term({0}, {1}, {1}, "g/10", 0, 1);
  EXPECT_GT(residual_check(s.h0, tweaked, s.P, ctx), 1e-3);
}

TEST(ResidualCheck, DrivenGeneratorIncludesTimeDerivative) {
  auto s = first_order("toy_model.toml");
  Bindings b = model_bindings(s.spec);
  b["alpha"] = 0.021;
  NumericContext ctx{s.spec.signature, {20}, b, 0.3, "Omega", {}};
  EXPECT_LT(residual_check(s.h0, s.S, s.P, ctx, "Omega"), 1e-10);
  EXPECT_GT(residual_check(s.h0, s.S, s.P, ctx), 1e-3);
}

TEST(RotatingFrame, ToyModelMatchesDenseReference) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  OperatorSum rot = rotating_frame(build_hamiltonian(m), m.signature, "Omega");
  for (const auto& [k, _] : rot.terms()) EXPECT_EQ(k.harmonic, 0);
  ref::ToyParameters p;
  p.alpha = 0.04;
  NumericContext ctx{m.signature, {10}, toy_bindings(p), {}, {}, {}};
  EXPECT_LT(operator_norm(materialize(rot, ctx) - ref::toy_rotating_hamiltonian(p, 10)), 1e-13);
}

TEST(RotatingFrame, StaticHamiltonianIsUnchanged) {
  ModelSpec m = parse_model(build::model_path("rabi.toml"));
  OperatorSum h0 = build_h0(m);
  EXPECT_EQ(rotating_frame(h0, m.signature, "Omega"), h0);
}

TEST(RotatingFrame, CounterRotatingTermIsRejected) {
  EXPECT_THROW(rotating_frame(term({0}, {1}, {1}, "g", -1), build::kQubitMode, "Omega"), NotCoRotating);
  EXPECT_THROW(rotating_frame(term({0}, {1}, {1}, "g"), build::kQubitMode, "Omega"), NotCoRotating);
}

TEST(DispersiveShiftNumeric, ToyModelAgreesWithPerturbationTheory) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  ref::ToyParameters p;
  p.g = 1e-3;
  NumericContext ctx{m.signature, {30}, toy_bindings(p), {}, "Omega", {}};
  double numeric = dispersive_shift_numeric(build_hamiltonian(m), ctx, 2);
  double expected = ref::second_order_chi(p, 2);
  EXPECT_NEAR(numeric, expected, 1e-4 * expected);
}

TEST(DispersiveShiftNumeric, VanishesWithoutCoupling) {
  ModelSpec m = parse_model(build::model_path("toy_model.toml"));
  ref::ToyParameters p;
  p.g = 0.0;
  NumericContext ctx{m.signature, {20}, toy_bindings(p), {}, "Omega", {}};
  EXPECT_NEAR(dispersive_shift_numeric(build_hamiltonian(m), ctx, 3), 0.0, 1e-12);
}

TEST(DispersiveShiftNumeric, StronglyMixedStatesAreAmbiguous) {
  // With no bare energies the coupling alone fixes the eigenbasis, which is far from any number state.
  OperatorSum h = term({0}, {1}, {1}, "g") + term({1}, {0}, {1}, "g") + term({0}, {1}, {-1}, "g") + term({1}, {0}, {-1}, "g");
  auto ctx = build::context(10, {{"g", 0.3}, {"hbar", 1.0}});
  EXPECT_THROW(dispersive_shift_numeric(h, ctx, 1), AssignmentAmbiguous);
}

TEST(DispersiveShiftNumeric, RequiresTwoLevelSystem) {
  ModelSpec m = parse_model(build::model_path("two_qubit_jc.toml"));
  NumericContext ctx{m.signature, {6}, model_bindings(m), {}, {}, {}};
  EXPECT_THROW(dispersive_shift_numeric(build_hamiltonian(m), ctx, 1), NotTwoLevel);
}

TEST(Decompose, NumberOperator) {
  Matrix M = ref::kron(ref::number(5), ref::identity(2));
  OperatorSum expected = term({0}, {0}, {0}, "N0") + term({1}, {1}, {0}, "N0");
  EXPECT_EQ(decompose_matrix(M, build::kQubitMode, {5}), expected);
}

TEST(Decompose, CouplingHasFourChannels) {
  const double g = 0.05;
  Matrix a = ref::annihilation(6);
  Matrix V = g * ref::kron(a + a.adjoint(), ref::sigma_x());
  OperatorSum d = decompose_matrix(V, build::kQubitMode, {6});
  ASSERT_EQ(d.size(), 4u);
  for (const auto& [k, c] : d.terms()) {
    EXPECT_EQ(std::abs(k.delta[0]), 1);
    EXPECT_NE(k.bra, k.ket);
    ASSERT_TRUE(c.numerator().is_constant());
    EXPECT_NEAR(to_double(c.numerator().constant_term()), g, 1e-15);
  }
}

TEST(Decompose, RoundTripsRandomHermitianMatrices) {
  std::mt19937_64 rng(31);
  auto ctx = build::context(6, {});
  for (int i = 0; i < 10; ++i) {
    Matrix M = ref::random_hermitian(ctx.dimension(), rng);
    OperatorSum d = decompose_matrix(M, build::kQubitMode, {6});
    EXPECT_LT(operator_norm(materialize(d, ctx) - M), 1e-12 * operator_norm(M));
    EXPECT_LT(operator_norm(materialize(dagger(d), ctx) - M), 1e-12 * operator_norm(M));
  }
}

TEST(Decompose, RecoversMaterializedOperators) {
  std::mt19937_64 rng(32);
  Bindings b{{"x", 0.7}, {"y", -1.3}};
  auto ctx = build::context(7, b);
  for (int i = 0; i < 10; ++i) {
    OperatorSum X = build::random_operator(rng);
    Matrix M = materialize(X, ctx);
    Matrix again = materialize(decompose_matrix(M, build::kQubitMode, {7}), ctx);
    EXPECT_LT(operator_norm(again - M), 1e-11 * std::max(1.0, operator_norm(M)));
  }
}

TEST(Decompose, ShapeMismatchIsReported) {
  EXPECT_THROW(decompose_matrix(Matrix::Zero(5, 5), build::kQubitMode, {6}), ShapeMismatch);
  EXPECT_THROW(decompose_matrix(Matrix::Zero(14, 13), build::kQubitMode, {6}), ShapeMismatch);
}

TEST(MatrixElementCheck, RabiGenerator) {
  auto s = first_order("rabi.toml");
  NumericContext ctx{s.spec.signature, {20}, model_bindings(s.spec), {}, {}, {}};
  EXPECT_LT(matrix_element_check(s.h0, s.S, s.P, ctx), 1e-10);
  EXPECT_EQ(matrix_element_check(s.h0, OperatorSum{}, OperatorSum{}, ctx), 0.0);
  EXPECT_GT(matrix_element_check(s.h0, s.S.scaled(Rational(3, 2)), s.P, ctx), 1e-4);
}

TEST(MatrixElementCheck, DrivenToyGenerator) {
  auto s = first_order("toy_model.toml");
  Bindings b = model_bindings(s.spec);
  b["alpha"] = -0.013;
  NumericContext ctx{s.spec.signature, {20}, b, {}, "Omega", {}};
  EXPECT_LT(matrix_element_check(s.h0, s.S, s.P, ctx), 1e-10);
}

TEST(MatrixElementCheck, TwoModesTwoQubits) {
  auto s = first_order("two_mode_two_qubit.toml");
  NumericContext ctx{s.spec.signature, {6, 6}, model_bindings(s.spec), {}, {}, {}};
  EXPECT_LT(matrix_element_check(s.h0, s.S, s.P, ctx), 1e-10);
}

TEST(MatrixElementCheck, DegenerateLevelsAreReported) {
  OperatorSum h0 = term({0}, {0}, {0}, "N0") + term({1}, {1}, {0}, "N0");
  OperatorSum P = term({0}, {1}, {0}, "1", 0, 1);
  auto ctx = build::context(5, {});
  try {
    matrix_element_check(h0, P, P, ctx);
    FAIL() << "expected DegenerateSpectrum";
  } catch (const DegenerateSpectrum& e) {
    EXPECT_FALSE(e.pairs().empty());
  }
}

TEST(SimilarityTransform, SeriesConvergesToExactConjugation) {
  std::mt19937_64 rng(33);
  Matrix H = ref::random_hermitian(8, rng);
  Matrix K = ref::random_hermitian(8, rng);
  Matrix S = Complex(0, 0.01) * K;  // anti-Hermitian and small
  Matrix exact = (-S).exp() * H * S.exp();
  EXPECT_LT(operator_norm(similarity_transform(H, S, 8) - exact), 1e-13);
  EXPECT_EQ(similarity_transform(H, Matrix::Zero(8, 8), 3), H);
}

TEST(SimilarityTransform, FirstOrderGeneratorRemovesCouplingAtFirstOrder) {
  ModelSpec m = parse_model(build::model_path("rabi.toml"));
  SwtResult r = effective_hamiltonian(build_hamiltonian(m), build_mask(m), 1);
  NumericContext ctx{m.signature, {20}, model_bindings(m), {}, {}, {}};
  Matrix H = materialize(build_hamiltonian(m), ctx);
  Matrix S = materialize(r.generator_total(), ctx);
  double before = off_block_norm(H, ctx, 3);
  double after = off_block_norm(similarity_transform(H, S, 3), ctx, 3);
  EXPECT_LT(after, 0.1 * before);
}
