#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>

#include "error.hpp"
#include "mesh.hpp"
#include "operator.hpp"

namespace coexist {

/// Eigenvalue with a mesh-normalized eigenvector.
struct Eigenpair {
  double lambda = 0.0;
  Vector vector;
  double residual = 0.0; // ||L v - lambda v||_mesh
  int iterations = 0;
};

struct EigenOptions {
  double tol = 1e-9;                      // target for Eigenpair::residual
  double linear_tol = default_linear_tol; // inner CG tolerance, capped at tol / 100
  int max_iter = 500;
};

namespace detail {

inline void normalize(const Mesh& mesh, Vector& v) {
  const double n = l2_norm(mesh, v);
  if (!(n > 0.0))
    throw ConvergenceError("inverse iteration collapsed to the zero vector",
                           0.0, 0);
  blas::scale(1.0 / n, v);
}

inline void remove_component(const Mesh& mesh, std::span<const double> unit,
                             Vector& v) {
  blas::axpy(-inner_product(mesh, v, unit), unit, v);
}

// Rayleigh quotient and residual norm of a normalized vector. When deflate is
// non-empty the residual is measured on the complement of that unit vector.
inline std::pair<double, double> rayleigh(const SparseOperator& L,
                                          const Mesh& mesh,
                                          std::span<const double> v,
                                          std::span<const double> deflate) {
  Vector Lv = L * v;
  const double lambda = inner_product(mesh, v, Lv);
  blas::axpy(-lambda, v, Lv);
  if (!deflate.empty())
    blas::axpy(-inner_product(mesh, Lv, deflate), deflate, Lv);
  return {lambda, l2_norm(mesh, Lv)};
}

inline Eigenpair inverse_iteration(const SparseOperator& L, const Mesh& mesh,
                                   Vector v, std::span<const double> deflate,
                                   const EigenOptions& opts) {
  detail::check_length(mesh, L.size(), "inverse_iteration");
  // Inner solves must be tighter than the eigen-residual target.
  const double inner_tol = std::min(opts.linear_tol, 0.01 * opts.tol);
  Eigenpair out;
  if (!deflate.empty())
    remove_component(mesh, deflate, v);
  normalize(mesh, v);
  for (out.iterations = 0;; ++out.iterations) {
    const auto [lambda, residual] = rayleigh(L, mesh, v, deflate);
    out.lambda = lambda;
    out.residual = residual;
    if (residual <= opts.tol)
      break;
    if (out.iterations >= opts.max_iter)
      throw ConvergenceError("inverse iteration did not converge", residual,
                             out.iterations);
    v = solve_spd(L, v, inner_tol);
    if (!deflate.empty())
      remove_component(mesh, deflate, v);
    normalize(mesh, v);
  }
  out.vector = std::move(v);
  return out;
}

} // namespace detail

/// Smallest eigenvalue of a symmetric positive definite L and its eigenvector,
/// by inverse power iteration from the constant vector.
///
/// The eigenvector is normalized in the mesh L2 norm and its sign is chosen so
/// that its mean is positive.
inline Eigenpair principal_eigenpair(const SparseOperator& L, const Mesh& mesh,
                                     const EigenOptions& opts = {}) {
  Eigenpair pair =
      detail::inverse_iteration(L, mesh, Vector(mesh.size(), 1.0), {}, opts);
  double mean = 0.0;
  for (double x : pair.vector)
    mean += x;
  if (mean < 0.0)
    blas::scale(-1.0, pair.vector);
  return pair;
}

/// Smallest eigenpair of L restricted to the complement of span{u0}.
///
/// The start vector mixes a coordinate ramp with fixed-seed noise so that it
/// has a component in every eigenspace.
inline Eigenpair second_eigenpair(const SparseOperator& L,
                                  std::span<const double> u0, const Mesh& mesh,
                                  const EigenOptions& opts = {}) {
  detail::check_length(mesh, u0.size(), "second_eigenpair");
  std::mt19937_64 rng(0x5eed1234u);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  Vector v(mesh.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double ramp = 0.0;
    for (std::size_t a = 0; a < mesh.dimension(); ++a) {
      const auto [lo, hi] = mesh.spec().bounds[a];
      ramp += (mesh.nodes()[i][a] - 0.5 * (lo + hi)) / (hi - lo);
    }
    v[i] = ramp + noise(rng);
  }
  return detail::inverse_iteration(L, mesh, std::move(v), u0, opts);
}

inline double second_eigenvalue(const SparseOperator& L,
                                std::span<const double> u0, const Mesh& mesh,
                                const EigenOptions& opts = {}) {
  return second_eigenpair(L, u0, mesh, opts).lambda;
}

/// Numerical check of the simple-eigenvalue bifurcation conditions.
struct CRReport {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double gap = 0.0;
  bool kernel_dim_ok = false;
  double transversality_value = 0.0;
  bool transversality_ok = false;

  bool ok() const { return kernel_dim_ok && transversality_ok; }
  bool operator==(const CRReport&) const = default;
};

/// Simplicity is certified by the spectral gap. Transversality is the kernel
/// projection of the mixed derivative f_{u lambda}[u0] = -u0, i.e. -(u0, u0).
inline CRReport verify_crandall_rabinowitz(double lambda0, double lambda1,
                                           std::span<const double> u0,
                                           const Mesh& mesh, double gap_tol,
                                           double trans_tol) {
  CRReport r;
  r.lambda0 = lambda0;
  r.lambda1 = lambda1;
  r.gap = lambda1 - lambda0;
  r.kernel_dim_ok = r.gap > gap_tol;
  r.transversality_value = -inner_product(mesh, u0, u0);
  r.transversality_ok = std::abs(r.transversality_value) > trans_tol;
  return r;
}

} // namespace coexist
