// dense_reference.hpp — test-side reference implementations that share no code with the library:
// dense ladder/projector matrices built from textbook Fock-space formulas, Kronecker products in
// the library's basis order (bosonic modes first, then finite subspaces), and closed-form
// dispersive-shift expressions for the driven anharmonic resonator + two-level model.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace ref {

using Matrix = Eigen::MatrixXcd;

inline Matrix identity(int d) { return Matrix::Identity(d, d); }

// Annihilation operator on Fock levels 0..n_max: a|n> = sqrt(n)|n-1>.
inline Matrix annihilation(int n_max) {
  Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline Matrix creation(int n_max) { return annihilation(n_max).adjoint(); }

inline Matrix number(int n_max) {
  Matrix N = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) N(n, n) = n;
  return N;
}

// |mu><nu| on a d-level system.
inline Matrix projector(int d, int mu, int nu) {
  Matrix p = Matrix::Zero(d, d);
  p(mu, nu) = 1;
  return p;
}

inline Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

inline Matrix kron(const std::vector<Matrix>& factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

inline Matrix sigma_x() {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 1) = s(1, 0) = 1;
  return s;
}

// sigma_z with state 0 as the upper level.
inline Matrix sigma_z() {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1;
  s(1, 1) = -1;
  return s;
}

inline Matrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = {n01(rng), n01(rng)};
  return (m + m.adjoint()) / 2.0;
}

struct ToyParameters {
  double Omega_T = 1.0;
  double Omega_z = 0.5;
  double alpha = 0.0;
  double g = 0.05;
  double Omega = 2.0;
  double hbar = 1.0;
};

// Published eight-fraction form of the dispersive shift for the driven toy model.
inline double eight_fraction_chi(const ToyParameters& p, double N) {
  const double a = p.alpha, T = p.Omega_T, z = p.Omega_z, W = p.Omega;
  double s = (-2 * N - 1) / (a + 2 * a * N + T - z - W) + (2 * N + 1) / (a - 2 * a * N - T + z + W) +
             (2 * N + 1) / (-a + 2 * a * N + T + z - W) + (2 * N + 1) / (a + 2 * a * N + T + z - W) +
             1 / (a - T - z + W) + 1 / (a + T - z - W) - 1 / (a - T + z + W) + 1 / (W - a - T - z);
  return p.g * p.g / (2 * p.hbar) * std::abs(s);
}

// Its zero-anharmonicity simplification.
inline double closed_form_chi_no_anharmonicity(const ToyParameters& p, double N) {
  return 4 * N * p.g * p.g * p.Omega_z / (p.hbar * std::abs(p.Omega_z * p.Omega_z - std::pow(p.Omega_T - p.Omega, 2)));
}

// Rayleigh-Schrodinger second-order level shifts in the frame rotating at Omega, where the model
// is (Omega_T - Omega) N + alpha N^2 + Omega_z/2 sigma_z + g (a + a^dag) sigma_x / hbar.
inline double second_order_chi(const ToyParameters& p, int N) {
  auto A = [&](double n) { return p.Omega_T + p.alpha * (2 * n + 1) - p.Omega - p.Omega_z; };
  auto B = [&](double n) { return A(n) + 2 * p.Omega_z; };
  auto d0 = [&](double n) { return -(n + 1) / A(n) + (n > 0 ? n / B(n - 1) : 0.0); };
  auto d1 = [&](double n) { return -(n + 1) / B(n) + (n > 0 ? n / A(n - 1) : 0.0); };
  double g2 = p.g * p.g / p.hbar;
  return std::abs(g2 * ((d0(N) - d0(0)) - (d1(N) - d1(0))));
}

// Poles of second_order_chi in Omega at level N: the zeros of A(n), B(n) for n = 0..N.
inline std::vector<double> second_order_poles(const ToyParameters& p, int N) {
  std::vector<double> poles;
  for (int n = 0; n <= N; ++n) {
    poles.push_back(p.Omega_T + p.alpha * (2 * n + 1) - p.Omega_z);
    poles.push_back(p.Omega_T + p.alpha * (2 * n + 1) + p.Omega_z);
  }
  return poles;
}

// Poles of the eight-fraction form in Omega.
inline std::vector<double> eight_fraction_poles(const ToyParameters& p, int N) {
  const double a = p.alpha, T = p.Omega_T, z = p.Omega_z;
  return {a + 2 * a * N + T - z, -a + 2 * a * N + T - z, -a + 2 * a * N + T + z, a + 2 * a * N + T + z,
          T + z - a,             a + T - z,              T - z - a,              a + T + z};
}

// Rotating-frame toy Hamiltonian on n_max + 1 Fock levels (mode first, then the two-level system).
inline Matrix toy_rotating_hamiltonian(const ToyParameters& p, int n_max) {
  const Matrix N = number(n_max);
  const Matrix a = annihilation(n_max);
  Matrix H0 = p.hbar * kron((p.Omega_T - p.Omega) * N + p.alpha * N * N, identity(2)) +
              p.hbar * p.Omega_z / 2 * kron(identity(n_max + 1), sigma_z());
  return H0 + p.g * kron(a + a.adjoint(), sigma_x());
}

}  // namespace ref
