#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"

namespace coexist {

/// Anything that can act on a node vector: y = Op x.
template <class Op>
concept LinearOperator = requires(const Op& op, std::span<const double> x,
                                  std::span<double> y) {
  { op.size() } -> std::convertible_to<std::size_t>;
  op.apply(x, y);
};

namespace blas {

inline double dot(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    sum += x[i] * y[i];
  return sum;
}

inline double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

// y += alpha x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& v : x)
    v *= alpha;
}

} // namespace blas

/// Square sparse matrix in compressed row storage.
///
/// Every row stores its diagonal entry, which makes shifted copies such as
/// A = L - lambda0 I cheap to form.
class SparseOperator {
public:
  SparseOperator() = default;

  SparseOperator(std::vector<std::size_t> row_offsets,
                 std::vector<std::size_t> columns, std::vector<double> values,
                 bool symmetric)
      : offsets_(std::move(row_offsets)), columns_(std::move(columns)),
        values_(std::move(values)), symmetric_(symmetric) {
    if (offsets_.empty() || offsets_.back() != columns_.size() ||
        columns_.size() != values_.size())
      throw std::invalid_argument("SparseOperator: inconsistent CSR arrays");
    const std::size_t n = offsets_.size() - 1;
    diagonal_.assign(n, columns_.size());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
        if (columns_[k] >= n)
          throw std::invalid_argument("SparseOperator: column out of range");
        if (columns_[k] == r)
          diagonal_[r] = k;
      }
    for (std::size_t r = 0; r < n; ++r)
      if (diagonal_[r] == columns_.size())
        throw std::invalid_argument("SparseOperator: row " + std::to_string(r) +
                                    " has no diagonal entry");
  }

  std::size_t size() const noexcept {
    return offsets_.empty() ? 0 : offsets_.size() - 1;
  }
  bool symmetric() const noexcept { return symmetric_; }
  const std::vector<std::size_t>& row_offsets() const noexcept { return offsets_; }
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double diagonal(std::size_t row) const { return values_[diagonal_.at(row)]; }

  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    for (std::size_t r = 0; r < n; ++r) {
      double sum = 0.0;
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
        sum += values_[k] * x[columns_[k]];
      y[r] = sum;
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(size());
    apply(x, y);
    return y;
  }

  /// Copy of this operator with sigma subtracted from the diagonal.
  SparseOperator shifted(double sigma) const {
    SparseOperator out = *this;
    for (std::size_t k : out.diagonal_)
      out.values_[k] -= sigma;
    return out;
  }

  /// Copy of this operator with d added to the diagonal entrywise.
  SparseOperator plus_diagonal(std::span<const double> d) const {
    if (d.size() != size())
      throw std::invalid_argument("plus_diagonal: length mismatch");
    SparseOperator out = *this;
    for (std::size_t r = 0; r < d.size(); ++r)
      out.values_[out.diagonal_[r]] += d[r];
    return out;
  }

private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
  std::vector<std::size_t> diagonal_;
  bool symmetric_ = false;
};

/// Second-order finite-difference -Laplacian with Dirichlet nodes eliminated
/// (3-point stencil in 1D, 5-point in 2D).
inline SparseOperator assemble_laplacian(const Mesh& mesh) {
  const std::size_t dims = mesh.dimension();
  const int nx = mesh.resolution(0);
  const int ny = dims == 2 ? mesh.resolution(1) : 1;
  const double cx = 1.0 / (mesh.spacing(0) * mesh.spacing(0));
  const double cy = dims == 2 ? 1.0 / (mesh.spacing(1) * mesh.spacing(1)) : 0.0;

  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(mesh.size() * (1 + 2 * dims));
  vals.reserve(mesh.size() * (1 + 2 * dims));

  // Columns are pushed in ascending order within each row.
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      if (i > 0) {
        cols.push_back(mesh.index(i - 1, j));
        vals.push_back(-cx);
      }
      if (dims == 2 && j > 0) {
        cols.push_back(mesh.index(i, j - 1));
        vals.push_back(-cy);
      }
      cols.push_back(mesh.index(i, j));
      vals.push_back(2.0 * cx + 2.0 * cy);
      if (dims == 2 && j + 1 < ny) {
        cols.push_back(mesh.index(i, j + 1));
        vals.push_back(-cy);
      }
      if (i + 1 < nx) {
        cols.push_back(mesh.index(i + 1, j));
        vals.push_back(-cx);
      }
      offsets.push_back(cols.size());
    }
  }
  return SparseOperator(std::move(offsets), std::move(cols), std::move(vals),
                        true);
}

struct SolverResult {
  Vector x;
  double residual = 0.0; // ||b - Op x|| / max(1, ||b||)
  int iterations = 0;
};

/// Conjugate gradients for a symmetric positive definite operator.
///
/// Stops when ||b - Op x|| <= tol * max(1, ||b||) (Euclidean norms), or when
/// the true residual has reached the rounding floor eps * ||Op|| * ||x|| with
/// ||Op|| estimated from the Rayleigh quotients seen. Throws ConvergenceError
/// when max_iter is exhausted, the operator shows non-positive curvature or
/// the residual stalls above both limits.
template <LinearOperator Op>
SolverResult conjugate_gradient(const Op& op, std::span<const double> b,
                                double tol, int max_iter) {
  if (!(tol > 0.0))
    throw std::invalid_argument("conjugate_gradient: tol must be positive");
  const std::size_t n = op.size();
  if (b.size() != n)
    throw std::invalid_argument("conjugate_gradient: rhs length mismatch");

  SolverResult out{Vector(n, 0.0), 0.0, 0};
  const double scale = std::max(1.0, blas::norm(b));
  Vector r(b.begin(), b.end());
  Vector p(n);
  Vector q(n);
  double op_norm = 0.0;

  // The recursively updated residual can drift below the true one at tight
  // tolerances; the true residual is recomputed and CG restarted from it.
  for (int restart = 0;; ++restart) {
    double rr = blas::dot(r, r);
    out.residual = std::sqrt(rr) / scale;
    p = r;
    while (out.residual > tol) {
      if (out.iterations >= max_iter)
        throw ConvergenceError("conjugate gradients did not converge",
                               out.residual, out.iterations);
      op.apply(p, q);
      const double curvature = blas::dot(p, q);
      if (!(curvature > 0.0))
        throw ConvergenceError("conjugate gradients hit non-positive curvature",
                               out.residual, out.iterations);
      op_norm = std::max(op_norm, curvature / blas::dot(p, p));
      const double alpha = rr / curvature;
      blas::axpy(alpha, p, out.x);
      blas::axpy(-alpha, q, r);
      const double rr_next = blas::dot(r, r);
      const double beta = rr_next / rr;
      rr = rr_next;
      for (std::size_t i = 0; i < n; ++i)
        p[i] = r[i] + beta * p[i];
      ++out.iterations;
      out.residual = std::sqrt(rr) / scale;
    }

    op.apply(out.x, q);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = b[i] - q[i];
    out.residual = blas::norm(r) / scale;
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * op_norm *
                         blas::norm(out.x) / scale;
    if (out.residual <= std::max(tol, floor))
      return out;
    if (restart == 4)
      throw ConvergenceError("conjugate gradients stalled above tolerance",
                             out.residual, out.iterations);
  }
}

inline constexpr double default_linear_tol = 1e-10;

inline int default_max_iter(std::size_t n) {
  return static_cast<int>(std::max<std::size_t>(1000, 20 * n));
}

/// Solves op x = b for symmetric positive definite op.
template <LinearOperator Op>
Vector solve_spd(const Op& op, std::span<const double> b,
                 double tol = default_linear_tol, int max_iter = 0) {
  return conjugate_gradient(op, b, tol,
                            max_iter > 0 ? max_iter : default_max_iter(op.size()))
      .x;
}

/// Operator restricted to the mesh-orthogonal complement of a unit vector u:
/// x -> P Op P x with P = I - u (u, .)_mesh.
template <LinearOperator Op> class ProjectedOperator {
public:
  ProjectedOperator(const Op& op, std::span<const double> u, const Mesh& mesh)
      : op_(op), u_(u), mesh_(mesh), work_(op.size()) {}

  std::size_t size() const { return op_.size(); }

  void project(std::span<double> x) const {
    blas::axpy(-inner_product(mesh_, x, u_), u_, x);
  }

  void apply(std::span<const double> x, std::span<double> y) const {
    work_.assign(x.begin(), x.end());
    project(work_);
    op_.apply(work_, y);
    project(y);
  }

private:
  const Op& op_;
  std::span<const double> u_;
  const Mesh& mesh_;
  mutable Vector work_;
};

/// Solution of the bordered system  A z + xi u0 = rhs,  (z, u0) = 0.
struct BorderedSolution {
  Vector z;
  double xi = 0.0;            // component of rhs along u0 left unresolved by A z
  double residual_norm = 0.0; // ||A z + xi u0 - rhs|| (Euclidean)
  int iterations = 0;
};

/// Bordered solve without precondition checks. The restriction of op to the
/// complement of u0 must be positive definite; op itself may be singular or
/// indefinite along u0.
template <LinearOperator Op>
BorderedSolution bordered_solve_unchecked(const Op& op,
                                          std::span<const double> u0,
                                          std::span<const double> rhs,
                                          const Mesh& mesh,
                                          double tol = default_linear_tol,
                                          int max_iter = 0) {
  const std::size_t n = op.size();
  ProjectedOperator<Op> projected(op, u0, mesh);
  Vector b(rhs.begin(), rhs.end());
  projected.project(b);

  SolverResult cg = conjugate_gradient(
      projected, b, tol, max_iter > 0 ? max_iter : default_max_iter(n));

  BorderedSolution out;
  out.z = std::move(cg.x);
  projected.project(out.z);
  out.iterations = cg.iterations;

  Vector r(n);
  op.apply(out.z, r);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = rhs[i] - r[i];
  out.xi = inner_product(mesh, r, u0) / inner_product(mesh, u0, u0);
  blas::axpy(-out.xi, u0, r);
  out.residual_norm = blas::norm(r);
  return out;
}

/// Inverts A on the complement of its kernel span{u0}.
///
/// Requires ||u0||_mesh = 1 and ||A u0||_mesh <= kernel_tol. A nonzero xi is a
/// result, not an error: it measures how far rhs is from the range of A.
template <LinearOperator Op>
BorderedSolution bordered_solve(const Op& A, std::span<const double> u0,
                                std::span<const double> rhs, const Mesh& mesh,
                                double tol = default_linear_tol,
                                double kernel_tol = 1e-8) {
  detail::check_length(mesh, u0.size(), "bordered_solve");
  detail::check_length(mesh, rhs.size(), "bordered_solve");
  if (A.size() != mesh.size())
    throw std::invalid_argument("bordered_solve: operator size mismatch");
  const double norm_u0 = l2_norm(mesh, u0);
  if (std::abs(norm_u0 - 1.0) > 1e-8)
    throw std::invalid_argument("bordered_solve: u0 is not normalized (norm " +
                                std::to_string(norm_u0) + ")");
  Vector Au0(u0.size());
  A.apply(u0, Au0);
  const double kernel_residual = l2_norm(mesh, Au0);
  if (kernel_residual > kernel_tol)
    throw std::invalid_argument(
        "bordered_solve: u0 is not in the kernel of A (residual " +
        std::to_string(kernel_residual) + ")");
  return bordered_solve_unchecked(A, u0, rhs, mesh, tol);
}

} // namespace coexist
