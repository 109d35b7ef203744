#include "nonlocal/solver.hpp"

#include <unsupported/Eigen/FFT>

#include <chrono>
#include <cmath>

#include "nonlocal/error.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

using Complex = std::complex<double>;

double hat(double t) { return std::max(0.0, 1 - std::abs(t)); }

int fft_size(int m) {
  int p = 1;
  while (p < m) p *= 2;
  return p;
}

// In-place 2-d transform of a P0 x P1 buffer stored with the first index fastest.
void fft2(std::vector<Complex>& buf, int P0, int P1, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in(std::max(P0, P1)), out(std::max(P0, P1));
  auto pass = [&](int len, int count, int stride, int step) {
    for (int c = 0; c < count; ++c) {
      for (int i = 0; i < len; ++i) in[i] = buf[c * step + i * stride];
      if (inverse)
        fft.inv(out.data(), in.data(), len);
      else
        fft.fwd(out.data(), in.data(), len);
      for (int i = 0; i < len; ++i) buf[c * step + i * stride] = out[i];
    }
  };
  if (P0 > 1) pass(P0, P1, 1, P0);
  if (P1 > 1) pass(P1, P0, P0, 1);
}

// h int_{|s| >= 2} hat(s - k) j(h |s|) ds
double weight_1d(const KernelTable& kernel, double h, int k) {
  if (k <= 1) return 0;
  auto f = [&](double s) { return hat(s - k) * kernel.density(h * s); };
  double sum = 0;
  for (auto [a, b] : {std::pair{double(k - 1), double(k)}, std::pair{double(k), double(k + 1)}}) {
    a = std::max(a, 2.0);
    if (b > a) sum += integrate<double>(f, a, b, 0.0, 1e-13, 200);
  }
  return h * sum;
}

// h^2 int int_{|s| >= 2} hat(s0 - k0) hat(s1 - k1) j(h |s|) ds, split into
// the four cells where the tensor hat is bilinear.
double weight_2d(const KernelTable& kernel, double h, int k0, int k1) {
  static const auto gl = gauss_legendre<double>(8);
  const auto& [gx, gw] = gl;
  auto integrand = [&](double s0, double s1) {
    return hat(s0 - k0) * hat(s1 - k1) * kernel.density(h * std::hypot(s0, s1));
  };
  double sum = 0;
  for (int c0 = -1; c0 <= 0; ++c0)
    for (int c1 = -1; c1 <= 0; ++c1) {
      const double a0 = k0 + c0, b0 = a0 + 1, a1 = k1 + c1, b1 = a1 + 1;
      const double n0 = std::clamp(0.0, a0, b0), n1 = std::clamp(0.0, a1, b1);
      const double near = std::hypot(n0, n1);
      const double far = std::hypot(std::max(std::abs(a0), std::abs(b0)),
                                    std::max(std::abs(a1), std::abs(b1)));
      if (far <= 2) continue;
      if (near >= 2) {
        double s = 0;
        for (int i = 0; i < gx.size(); ++i)
          for (int j = 0; j < gx.size(); ++j)
            s += gw(i) * gw(j) *
                 integrand(a0 + 0.5 * (gx(i) + 1), a1 + 0.5 * (gx(j) + 1));
        sum += 0.25 * s;
        continue;
      }
      // The cell meets the excluded disk |s| < 2: nested adaptive rule with
      // the circle as a breakpoint of the inner integral.
      auto inner = [&](double s0) {
        const double c = s0 * s0 < 4 ? std::sqrt(4 - s0 * s0) : 0.0;
        auto g = [&](double s1) { return integrand(s0, s1); };
        double v = 0;
        const double lo = std::min(b1, -c), hi = std::max(a1, c);
        if (lo > a1) v += integrate<double>(g, a1, lo, 0.0, 1e-13, 200);
        if (b1 > hi) v += integrate<double>(g, hi, b1, 0.0, 1e-13, 200);
        return v;
      };
      double v = 0;
      double cut[4] = {a0, std::clamp(-2.0, a0, b0), std::clamp(2.0, a0, b0), b0};
      for (int p = 0; p < 3; ++p)
        if (cut[p + 1] > cut[p]) v += integrate<double>(inner, cut[p], cut[p + 1], 0.0, 1e-12, 400);
      sum += v;
    }
  return h * h * sum;
}

}  // namespace

LinearSystem::LinearSystem(const KernelTable& kernel, const Domain& domain, double h,
                           double margin)
    : domain_(domain) {
  if (!(h > 0)) throw DomainError("grid spacing must be positive");
  if (kernel.dim() != domain.dim()) throw DomainError("kernel and domain dimensions differ");
  grid_ = Grid::covering(domain, h, margin);
  const int n = grid_.dim;
  unknown_of_ = Eigen::VectorXi::Constant(grid_.size(), -1);
  for (Eigen::Index k = 0; k < grid_.size(); ++k)
    if (domain.sdist(grid_.node(k)) > 0) {
      unknown_of_(k) = int(nodes_.size());
      nodes_.push_back(k);
    }
  if (nodes_.empty()) throw DomainError("no grid node inside " + domain.name());

  delta_ = 2 * h;
  c_in_ = kernel.second_moment(delta_) / (2 * n * h * h);
  tail_delta_ = kernel.tail(delta_);
  diag_ = -2 * n * c_in_ - tail_delta_;

  const int n0 = grid_.n[0], n1 = grid_.n[1];
  W_ = Eigen::MatrixXd::Zero(n0, n1);
  if (n == 1) {
    parallel_for(n0, [&](std::int64_t k) { W_(k, 0) = weight_1d(kernel, h, int(k)); });
  } else {
    const int m = std::max(n0, n1);
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m, m);
    parallel_for(m, [&](std::int64_t a) {
      for (int b = 0; b <= a; ++b) full(a, b) = weight_2d(kernel, h, int(a), b);
    });
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) full(a, b) = full(b, a);
    W_ = full.topLeftCorner(n0, n1);
  }

  pad_ = {fft_size(2 * n0 - 1), n1 > 1 ? fft_size(2 * n1 - 1) : 1};
  const int P0 = pad_[0], P1 = pad_[1];
  kernel_hat_.assign(std::size_t(P0) * P1, Complex(0));
  for (int a = -(n0 - 1); a <= n0 - 1; ++a)
    for (int b = -(n1 - 1); b <= n1 - 1; ++b) {
      double v = W_(std::abs(a), std::abs(b));
      if (std::abs(a) + std::abs(b) == 1) v += c_in_;
      kernel_hat_[((a + P0) % P0) + std::size_t(P0) * ((b + P1) % P1)] = v;
    }
  fft2(kernel_hat_, P0, P1, false);

  const Eigen::VectorXd box = convolve(Eigen::VectorXd::Ones(grid_.size()));
  beyond_.resize(unknowns());
  for (Eigen::Index i = 0; i < unknowns(); ++i)
    beyond_(i) = tail_delta_ + 2 * n * c_in_ - box(nodes_[i]);
}

Eigen::VectorXd LinearSystem::convolve(const Eigen::VectorXd& x) const {
  const int P0 = pad_[0], P1 = pad_[1];
  std::vector<Complex> buf(std::size_t(P0) * P1, Complex(0));
  for (Eigen::Index k = 0; k < grid_.size(); ++k) {
    const auto [i, j] = grid_.multi_index(k);
    buf[i + std::size_t(P0) * j] = x(k);
  }
  fft2(buf, P0, P1, false);
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] *= kernel_hat_[k];
  fft2(buf, P0, P1, true);
  Eigen::VectorXd y(grid_.size());
  for (Eigen::Index k = 0; k < grid_.size(); ++k) {
    const auto [i, j] = grid_.multi_index(k);
    y(k) = buf[i + std::size_t(P0) * j].real();
  }
  return y;
}

Eigen::VectorXd LinearSystem::exterior_mass() const {
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(grid_.size());
  for (auto k : nodes_) ind(k) = 1;
  const Eigen::VectorXd inside = convolve(ind);
  Eigen::VectorXd out(unknowns());
  for (Eigen::Index i = 0; i < unknowns(); ++i) out(i) = -diag_ - inside(nodes_[i]);
  return out;
}

Eigen::MatrixXd LinearSystem::dense() const {
  const Eigen::Index N = unknowns();
  Eigen::MatrixXd A(N, N);
  parallel_for(N, [&](std::int64_t i) {
    const auto [a0, a1] = grid_.multi_index(nodes_[i]);
    for (Eigen::Index j = 0; j < N; ++j) {
      const auto [b0, b1] = grid_.multi_index(nodes_[j]);
      const int d0 = std::abs(a0 - b0), d1 = std::abs(a1 - b1);
      A(i, j) = W_(d0, d1) + (d0 + d1 == 1 ? c_in_ : 0.0);
    }
    A(i, i) = diag_;
  });
  return A;
}

Eigen::VectorXd LinearSystem::apply(const Eigen::VectorXd& u) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(grid_.size());
  for (Eigen::Index i = 0; i < unknowns(); ++i) x(nodes_[i]) = u(i);
  const Eigen::VectorXd y = convolve(x);
  Eigen::VectorXd out(unknowns());
  for (Eigen::Index i = 0; i < unknowns(); ++i) out(i) = y(nodes_[i]) + diag_ * u(i);
  return out;
}

Eigen::VectorXd LinearSystem::rhs(const Eigen::VectorXd& f, const Eigen::VectorXd& g_nodes,
                                  double g_far) const {
  Eigen::VectorXd out = f - g_far * beyond_;
  if (g_nodes.size() == 0) return out;
  Eigen::VectorXd x = g_nodes;
  for (auto k : nodes_) x(k) = 0;
  const Eigen::VectorXd y = convolve(x);
  for (Eigen::Index i = 0; i < unknowns(); ++i) out(i) -= y(nodes_[i]);
  return out;
}

Eigen::VectorXd LinearSystem::sample_unknowns(const Function& f) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(unknowns());
  if (f)
    for (Eigen::Index i = 0; i < unknowns(); ++i) out(i) = f(grid_.node(nodes_[i]));
  return out;
}

Eigen::VectorXd LinearSystem::sample_exterior(const Function& g) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid_.size());
  if (g)
    for (Eigen::Index k = 0; k < grid_.size(); ++k)
      if (unknown_of_(k) < 0) out(k) = g(grid_.node(k));
  return out;
}

Field LinearSystem::to_field(const Eigen::VectorXd& u, const Eigen::VectorXd& g_nodes) const {
  Field out{grid_, g_nodes.size() ? g_nodes : Eigen::VectorXd::Zero(grid_.size())};
  for (Eigen::Index i = 0; i < unknowns(); ++i) out.values(nodes_[i]) = u(i);
  return out;
}

DirichletSolver::DirichletSolver(const KernelTable& kernel, const Domain& domain, double h,
                                 const SolverOptions& opt)
    : sys_(kernel, domain, h, opt.margin), opt_(opt) {
  const Eigen::Index N = sys_.unknowns();
  if (opt.method == "dense")
    dense_ = true;
  else if (opt.method == "cg")
    dense_ = false;
  else if (opt.method == "auto")
    dense_ = N <= opt.dense_limit;
  else
    throw DomainError("unknown solver method " + opt.method);
  if (dense_) {
    llt_.compute(-sys_.dense());
    if (llt_.info() != Eigen::Success) throw ConvergenceError("-A is not positive definite");
  }
  stats_.unknowns = N;
  stats_.method = dense_ ? "dense-cholesky" : "cg-fft";
  const Eigen::VectorXd ext = sys_.exterior_mass();
  stats_.dominance_margin = ext.minCoeff();
  // Off-diagonal entries are nonnegative, so the largest row sum of |a_ij|
  // is 2|a_ii| - min(exterior mass), and (-A)^{-1} >= 0 gives
  // ||A^{-1}||_inf = max((-A)^{-1} 1).
  const double normA = 2 * std::abs(sys_.diagonal()) - stats_.dominance_margin;
  const Eigen::VectorXd z = solve_raw(-Eigen::VectorXd::Ones(N));
  stats_.condition_estimate = normA * z.maxCoeff();
}

Eigen::VectorXd DirichletSolver::solve_raw(const Eigen::VectorXd& b, int* iterations) const {
  if (dense_) {
    if (iterations) *iterations = 0;
    return llt_.solve(-b);
  }
  // CG on -A u = -b. The diagonal is constant, so Jacobi scaling changes nothing.
  const Eigen::Index N = sys_.unknowns();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(N), r = -b, p = r, q(N);
  const double bnorm = b.norm();
  double rr = r.squaredNorm();
  int it = 0;
  while (std::sqrt(rr) > opt_.cg_tol * bnorm && it < opt_.cg_max_iter) {
    q = -sys_.apply(p);
    const double a = rr / p.dot(q);
    u += a * p;
    r -= a * q;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++it;
  }
  if (iterations) *iterations = it;
  if (bnorm > 0 && std::sqrt(rr) > 1e3 * opt_.cg_tol * bnorm)
    throw ConvergenceError("conjugate gradients stalled after " + std::to_string(it) +
                           " iterations");
  return u;
}

SolveResult DirichletSolver::solve_values(const Eigen::VectorXd& f, const Eigen::VectorXd& g_nodes,
                                          double g_far) const {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::VectorXd b = sys_.rhs(f, g_nodes, g_far);
  SolveResult out;
  out.stats = stats_;
  const Eigen::VectorXd u = solve_raw(b, &out.stats.iterations);
  out.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.residual_sup = (sys_.apply(u) - b).lpNorm<Eigen::Infinity>();
  out.u = sys_.to_field(u, g_nodes);
  return out;
}

SolveResult DirichletSolver::solve(const Function& f, const Function& g, double g_far) const {
  return solve_values(sys_.sample_unknowns(f), sys_.sample_exterior(g), g_far);
}

LinearSystem assemble(const DirichletProblem& problem, double margin) {
  if (!problem.kernel) throw DomainError("problem has no kernel");
  return LinearSystem(*problem.kernel, problem.domain, problem.h, margin);
}

SolveResult solve(const DirichletProblem& problem, const SolverOptions& opt) {
  if (!problem.kernel) throw DomainError("problem has no kernel");
  const DirichletSolver s(*problem.kernel, problem.domain, problem.h, opt);
  return s.solve(problem.f, problem.g, problem.g_far);
}

ComparisonReport verify_comparison(const LinearSystem& sys, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& v, const Eigen::VectorXd& f,
                                   double tol) {
  ComparisonReport out;
  const double fs = std::max(1.0, f.lpNorm<Eigen::Infinity>());
  out.hypotheses_hold = (sys.apply(u) - f).minCoeff() >= -tol * fs &&
                        (f - sys.apply(v)).minCoeff() >= -tol * fs;
  out.max_violation = (u - v).maxCoeff();
  const double scale =
      std::max({1.0, u.lpNorm<Eigen::Infinity>(), v.lpNorm<Eigen::Infinity>()});
  out.pass = out.hypotheses_hold && out.max_violation <= tol * scale;
  return out;
}

MaxPrincipleReport verify_max_principle(const DirichletSolver& solver, const Eigen::VectorXd& f,
                                        const Eigen::VectorXd& g_nodes, double tol) {
  const auto& sys = solver.system();
  Eigen::VectorXd g = g_nodes.size() ? g_nodes : Eigen::VectorXd::Zero(sys.grid().size());
  for (Eigen::Index i = 0; i < sys.unknowns(); ++i) g(sys.node(i)) = 0;
  const Eigen::VectorXd u = solver.solve_raw(sys.rhs(f, g, 0));
  MaxPrincipleReport out;
  out.sup_u = u.maxCoeff();
  out.inf_u = u.minCoeff();
  const double scale = std::max(f.lpNorm<Eigen::Infinity>(), g.lpNorm<Eigen::Infinity>());
  out.pass = true;
  // The zero data beyond the box count as exterior values.
  if (f.minCoeff() >= 0) out.pass &= out.sup_u <= std::max(0.0, g.maxCoeff()) + tol * scale;
  if (f.maxCoeff() <= 0) out.pass &= out.inf_u >= std::min(0.0, g.minCoeff()) - tol * scale;
  return out;
}

SolveResult harmonic_solve(const KernelTable& kernel, const Domain& ball, const Function& g,
                           double h, double margin, double g_far) {
  const DirichletSolver s(kernel, ball, h, {.margin = margin});
  return s.solve(nullptr, g, g_far);
}

}  // namespace nonlocal
