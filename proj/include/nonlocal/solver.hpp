#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "nonlocal/domain.hpp"
#include "nonlocal/field.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/operator.hpp"

namespace nonlocal {

// L u = f in D, u = g outside D. g is read at grid nodes outside D and
// taken equal to g_far beyond the grid box.
struct DirichletProblem {
  const KernelTable* kernel = nullptr;
  Domain domain;
  Function f;
  Function g;          // exterior data, 0 when null
  double g_far = 0;
  double h = 1.0 / 64;
};

struct SolverOptions {
  double margin = 0;           // grid box beyond the bounding box of D
  std::string method = "auto";  // "dense", "cg" or "auto"
  Eigen::Index dense_limit = 5000;
  double cg_tol = 1e-12;       // relative residual
  int cg_max_iter = 10000;
};

struct MatrixStats {
  Eigen::Index unknowns = 0;
  double dominance_margin = 0;    // min over rows of |a_ii| - sum_{j != i} |a_ij|
  double condition_estimate = 0;  // ||A||_inf ||A^{-1}||_inf
  std::string method;
  int iterations = 0;
};

struct SolveResult {
  Field u;               // solution on D, exterior data elsewhere
  double residual_sup = 0;
  MatrixStats stats;
  double runtime = 0;    // seconds, solve only
};

// Discrete operator on the grid box. For node x_i in D:
//   (L_h u)_i = c_in sum_d (u_{i+e_d} - 2u_i + u_{i-e_d}) + sum_k W_k (u_{i+k} - u_i)
// with delta = 2h, c_in = M2(delta) / (2 n h^2) and
// W_k = int_{|y| >= delta} hat(y/h - k) j(|y|) dy (tensor hat functions).
// All off-diagonal entries are nonnegative and sum_k W_k = T(delta).
class LinearSystem {
 public:
  LinearSystem() = default;
  LinearSystem(const KernelTable& kernel, const Domain& domain, double h, double margin = 0);

  const Grid& grid() const { return grid_; }
  const Domain& domain() const { return domain_; }
  Eigen::Index unknowns() const { return Eigen::Index(nodes_.size()); }
  // Grid node of unknown i; unknown of node k (-1 outside D).
  Eigen::Index node(Eigen::Index i) const { return nodes_[i]; }
  Eigen::Index unknown(Eigen::Index k) const { return unknown_of_(k); }
  double delta() const { return delta_; }
  double c_in() const { return c_in_; }
  double diagonal() const { return diag_; }
  double tail_delta() const { return tail_delta_; }
  // W at offset (|k0|, |k1|).
  double weight(int k0, int k1 = 0) const { return W_(std::abs(k0), std::abs(k1)); }
  const Eigen::MatrixXd& weights() const { return W_; }
  // Row mass outside the box, times g_far in the right-hand side.
  const Eigen::VectorXd& beyond_box() const { return beyond_; }
  // Coupling of each row to exterior nodes (box and beyond): -diag - sum of
  // off-diagonal entries to unknowns.
  Eigen::VectorXd exterior_mass() const;

  Eigen::MatrixXd dense() const;
  // A u on the unknowns.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  // f - (exterior couplings) g - g_far beyond_box.
  Eigen::VectorXd rhs(const Eigen::VectorXd& f, const Eigen::VectorXd& g_nodes, double g_far) const;

  // f at unknowns and g at box nodes outside D.
  Eigen::VectorXd sample_unknowns(const Function& f) const;
  Eigen::VectorXd sample_exterior(const Function& g) const;
  // Field from unknown values and exterior node data.
  Field to_field(const Eigen::VectorXd& u, const Eigen::VectorXd& g_nodes) const;

 private:
  // sum_m K(m - i) x_m over the whole box, K = W plus the c_in neighbours.
  Eigen::VectorXd convolve(const Eigen::VectorXd& x_nodes) const;

  Grid grid_;
  Domain domain_;
  std::vector<Eigen::Index> nodes_;
  Eigen::VectorXi unknown_of_;
  double delta_ = 0, c_in_ = 0, diag_ = 0, tail_delta_ = 0;
  Eigen::MatrixXd W_;
  Eigen::VectorXd beyond_;
  std::array<int, 2> pad_{1, 1};
  std::vector<std::complex<double>> kernel_hat_;
};

// Assembles once, then solves for any number of right-hand sides: dense
// Cholesky of -A up to dense_limit unknowns, otherwise CG with FFT products.
class DirichletSolver {
 public:
  DirichletSolver(const KernelTable& kernel, const Domain& domain, double h,
                  const SolverOptions& opt = {});

  const LinearSystem& system() const { return sys_; }
  SolveResult solve(const Function& f, const Function& g = nullptr, double g_far = 0) const;
  SolveResult solve_values(const Eigen::VectorXd& f, const Eigen::VectorXd& g_nodes,
                           double g_far = 0) const;
  // Solves A u = b on the unknowns.
  Eigen::VectorXd solve_raw(const Eigen::VectorXd& b, int* iterations = nullptr) const;
  const MatrixStats& stats() const { return stats_; }

 private:
  LinearSystem sys_;
  SolverOptions opt_;
  bool dense_ = true;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  MatrixStats stats_;
};

LinearSystem assemble(const DirichletProblem& problem, double margin = 0);
SolveResult solve(const DirichletProblem& problem, const SolverOptions& opt = {});

struct ComparisonReport {
  bool hypotheses_hold = false;   // L_h u >= f >= L_h v on D within tol
  double max_violation = 0;       // max over D of u - v
  bool pass = false;
};

// u <= v + tol on D for L_h u >= f >= L_h v in D and u <= v outside D.
ComparisonReport verify_comparison(const LinearSystem& sys, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& v, const Eigen::VectorXd& f,
                                   double tol = 1e-8);

struct MaxPrincipleReport {
  double sup_u = 0;   // f >= 0, g = 0: expect sup u <= tol ||f||
  double inf_u = 0;
  bool pass = false;
};

// f >= 0 with zero exterior data: the solution is <= tol ||f|| on D. With
// f = 0 and g >= 0 (dual form) the solution is >= -tol ||g||.
MaxPrincipleReport verify_max_principle(const DirichletSolver& solver, const Eigen::VectorXd& f,
                                        const Eigen::VectorXd& g_nodes = {}, double tol = 1e-8);

// L_h u = 0 on B with data g outside B.
SolveResult harmonic_solve(const KernelTable& kernel, const Domain& ball, const Function& g,
                           double h, double margin, double g_far = 0);

}  // namespace nonlocal
