#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "error.hpp"
#include "mesh.hpp"
#include "nonlinearity.hpp"
#include "operator.hpp"

namespace coexist {

/// F(U, lambda) = L U - lambda U + V_L U - g(U), the discrete Dirichlet
/// problem with m = lambda - V_L.
inline Vector residual(std::span<const double> U, double lambda,
                       const NonlinearityModel& model, const SparseOperator& L,
                       const Mesh& mesh) {
  detail::check_length(mesh, U.size(), "residual");
  Vector F = L * U;
  const double v_l = model.v_l();
  for (std::size_t i = 0; i < U.size(); ++i)
    F[i] += (v_l - lambda) * U[i] - model.value(U[i]);
  return F;
}

/// Jacobian of F with respect to U, assembled as a sparse matrix.
inline SparseOperator jacobian(std::span<const double> U, double lambda,
                               const NonlinearityModel& model,
                               const SparseOperator& L) {
  Vector d(U.size());
  const double v_l = model.v_l();
  for (std::size_t i = 0; i < U.size(); ++i)
    d[i] = v_l - lambda - model.slope(U[i]);
  return L.plus_diagonal(d);
}

/// (L - lambda I + V_L I - diag g'(U)) direction.
inline Vector jacobian_apply(std::span<const double> U, double lambda,
                             const NonlinearityModel& model,
                             const SparseOperator& L, const Mesh& mesh,
                             std::span<const double> direction) {
  detail::check_length(mesh, U.size(), "jacobian_apply");
  detail::check_length(mesh, direction.size(), "jacobian_apply");
  return jacobian(U, lambda, model, L) * direction;
}

struct BranchPoint {
  double s = 0.0;
  double lambda = 0.0;
  Vector U;
  double residual = 0.0; // ||F(U, lambda)||_mesh
  int newton_iters = 0;
};

struct NewtonOptions {
  double tol = 1e-10; // on ||F||_mesh
  int max_iters = 25;
  double linear_tol = default_linear_tol;
};

/// Data that fixes the bifurcation point and the local expansion used for
/// initial guesses.
struct BranchSeed {
  const SparseOperator& laplacian;
  std::span<const double> u0;
  double lambda0 = 0.0;
  double mu_s = 0.0;
  double mu_ss = 0.0;

  double predicted_lambda(double s) const {
    return lambda0 + mu_s * s + 0.5 * mu_ss * s * s;
  }
};

inline BranchSeed seed_from(const SpectralData& spectrum,
                            const BifurcationDiagnostics& d) {
  return {spectrum.laplacian, spectrum.principal.vector, d.lambda0, d.mu_s,
          d.mu_ss};
}

/// Newton iteration for F(U, lambda) = 0 with the amplitude constraint
/// (U, u0) = s, starting from (U, lambda).
///
/// Each step solves the bordered system
///   J dU - U dlambda = -F,   (dU, u0) = s - (U, u0)
/// by splitting dU = beta u0 + y with y orthogonal to u0 and resolving y with
/// two solves of J restricted to the complement of u0.
inline BranchPoint newton_at_amplitude(double s, Vector U, double lambda,
                                       const NonlinearityModel& model,
                                       const BranchSeed& seed, const Mesh& mesh,
                                       const NewtonOptions& opts) {
  const std::span<const double> u0 = seed.u0;
  const std::size_t n = U.size();
  BranchPoint pt;
  pt.s = s;
  double first_residual = -1.0;
  for (int iter = 0;; ++iter) {
    Vector F = residual(U, lambda, model, seed.laplacian, mesh);
    const double res = l2_norm(mesh, F);
    const double defect = inner_product(mesh, U, u0) - s;
    if (first_residual < 0.0)
      first_residual = res;
    if (res <= opts.tol && std::abs(defect) <= 1e-12 * std::max(1.0, std::abs(s))) {
      pt.lambda = lambda;
      pt.U = std::move(U);
      pt.residual = res;
      pt.newton_iters = iter;
      return pt;
    }
    if (!std::isfinite(res) || iter >= opts.max_iters ||
        res > 1e6 * std::max(first_residual, 1e-8))
      throw ConvergenceError("Newton iteration at s = " + std::to_string(s) +
                                 " diverged",
                             res, iter);

    const SparseOperator J = jacobian(U, lambda, model, seed.laplacian);
    const double beta = -defect;
    Vector r = J * u0;
    for (std::size_t i = 0; i < n; ++i)
      r[i] = -F[i] - beta * r[i];

    const BorderedSolution yr =
        bordered_solve_unchecked(J, u0, r, mesh, opts.linear_tol);
    const BorderedSolution yU =
        bordered_solve_unchecked(J, u0, U, mesh, opts.linear_tol);
    if (yU.xi == 0.0)
      throw ConvergenceError("singular bordered Newton system at s = " +
                                 std::to_string(s),
                             res, iter);
    const double dlambda = -yr.xi / yU.xi;
    for (std::size_t i = 0; i < n; ++i)
      U[i] += beta * u0[i] + yr.z[i] + dlambda * yU.z[i];
    lambda += dlambda;
  }
}

/// Nontrivial solution with (U, u0) = s, started from the local expansion.
inline BranchPoint solve_at_amplitude(double s, const NonlinearityModel& model,
                                      const BranchSeed& seed, const Mesh& mesh,
                                      const NewtonOptions& opts = {}) {
  if (s == 0.0)
    throw std::invalid_argument("solve_at_amplitude: s must be nonzero");
  Vector U(seed.u0.begin(), seed.u0.end());
  blas::scale(s, U);
  return newton_at_amplitude(s, std::move(U), seed.predicted_lambda(s), model,
                             seed, mesh, opts);
}

/// Least-squares model lambda(s) - lambda0 = a s + b s^2.
struct BranchFit {
  double a = 0.0;
  double b = 0.0;
  double rms = 0.0;

  bool operator==(const BranchFit&) const = default;
};

struct Branch {
  std::vector<BranchPoint> points; // sorted by s, s = 0 excluded
  NonlinearityModel model = NonlinearityModel::free();
  double lambda0 = 0.0;
  std::optional<BranchFit> fit;
  std::vector<std::string> truncations; // one message per truncated side
};

inline BranchFit fit_local_expansion(std::span<const BranchPoint> points,
                                     double lambda0) {
  bool has_neg = false;
  bool has_pos = false;
  for (const auto& p : points) {
    has_neg |= p.s < 0.0;
    has_pos |= p.s > 0.0;
  }
  if (points.size() < 5 || !has_neg || !has_pos)
    throw std::invalid_argument(
        "fit_local_expansion: need at least 5 points with both signs of s");

  // Normal equations for the 2x2 system in (s, s^2).
  double s2 = 0.0, s3 = 0.0, s4 = 0.0, ys = 0.0, ys2 = 0.0;
  for (const auto& p : points) {
    const double s = p.s;
    const double y = p.lambda - lambda0;
    s2 += s * s;
    s3 += s * s * s;
    s4 += s * s * s * s;
    ys += y * s;
    ys2 += y * s * s;
  }
  const double det = s2 * s4 - s3 * s3;
  BranchFit fit;
  fit.a = (ys * s4 - ys2 * s3) / det;
  fit.b = (s2 * ys2 - s3 * ys) / det;
  double sq = 0.0;
  for (const auto& p : points) {
    const double e = p.lambda - lambda0 - fit.a * p.s - fit.b * p.s * p.s;
    sq += e * e;
  }
  fit.rms = std::sqrt(sq / static_cast<double>(points.size()));
  return fit;
}

inline BranchFit fit_local_expansion(const Branch& branch, double lambda0) {
  return fit_local_expansion(branch.points, lambda0);
}

/// Sequential warm-started tracing. Each sign of s is traced outward from the
/// smallest |s|; the first Newton failure on a side truncates that side.
inline Branch trace_branch(const NonlinearityModel& model, const Mesh& mesh,
                           const BranchSeed& seed,
                           std::span<const double> s_values,
                           const NewtonOptions& opts = {}) {
  for (double s : s_values)
    if (s == 0.0)
      throw std::invalid_argument("trace_branch: s_values must be nonzero");

  Branch branch;
  branch.model = model;
  branch.lambda0 = seed.lambda0;

  for (int side : {-1, 1}) {
    std::vector<double> sv;
    for (double s : s_values)
      if ((s > 0.0) == (side > 0))
        sv.push_back(s);
    std::sort(sv.begin(), sv.end(),
              [](double x, double y) { return std::abs(x) < std::abs(y); });

    const BranchPoint* prev = nullptr;
    std::vector<BranchPoint> traced;
    traced.reserve(sv.size()); // prev points into traced
    for (double s : sv) {
      try {
        if (prev == nullptr) {
          traced.push_back(solve_at_amplitude(s, model, seed, mesh, opts));
        } else {
          Vector U = prev->U;
          blas::scale(s / prev->s, U);
          const double lambda = prev->lambda + seed.predicted_lambda(s) -
                                seed.predicted_lambda(prev->s);
          traced.push_back(
              newton_at_amplitude(s, std::move(U), lambda, model, seed, mesh, opts));
        }
        prev = &traced.back();
      } catch (const ConvergenceError& e) {
        branch.truncations.push_back(e.what());
        break;
      }
    }
    for (auto& p : traced)
      branch.points.push_back(std::move(p));
  }
  std::sort(branch.points.begin(), branch.points.end(),
            [](const BranchPoint& x, const BranchPoint& y) { return x.s < y.s; });

  try {
    branch.fit = fit_local_expansion(branch, seed.lambda0);
  } catch (const std::invalid_argument&) {
    branch.fit.reset();
  }
  return branch;
}

/// Agreement between the fitted branch and the predicted mu_s, mu_ss.
struct ConsistencyCheck {
  double a_error = 0.0;  // |a - mu_s|
  double a_bound = 0.0;  // max(1e-3, 1% |mu_s|)
  double b_error = 0.0;  // |2 b - mu_ss|
  double b_bound = 0.0;  // max(5e-3, 2% |mu_ss|)

  bool ok() const { return a_error <= a_bound && b_error <= b_bound; }
  bool operator==(const ConsistencyCheck&) const = default;
};

inline ConsistencyCheck check_consistency(const BranchFit& fit, double mu_s,
                                          double mu_ss) {
  ConsistencyCheck c;
  c.a_error = std::abs(fit.a - mu_s);
  c.a_bound = std::max(1e-3, 0.01 * std::abs(mu_s));
  c.b_error = std::abs(2.0 * fit.b - mu_ss);
  c.b_bound = std::max(5e-3, 0.02 * std::abs(mu_ss));
  return c;
}

} // namespace coexist
