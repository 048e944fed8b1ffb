#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "nonlinearity.hpp"
#include "operator.hpp"
#include "spectrum.hpp"

namespace coexist {

/// The nine co-existence types. Rows follow the sign of mu_s(0) in the order
/// (0, +, -), columns the sign of mu_ss(0) in the order (+, 0, -).
enum class CoexistenceType { I, II, III, IV, V, VI, VII, VIII, IX };

inline const char* to_string(CoexistenceType t) {
  static constexpr std::array<const char*, 9> names{
      "I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX"};
  return names[static_cast<int>(t)];
}

inline CoexistenceType coexistence_type_from_string(const std::string& s) {
  for (int i = 0; i < 9; ++i)
    if (s == to_string(static_cast<CoexistenceType>(i)))
      return static_cast<CoexistenceType>(i);
  throw std::invalid_argument("unknown co-existence type '" + s + "'");
}

/// -1, 0 or +1 with |x| <= zero_tol counted as zero.
inline int tolerant_sign(double x, double zero_tol) {
  if (std::abs(x) <= zero_tol)
    return 0;
  return x > 0.0 ? 1 : -1;
}

inline CoexistenceType type_from_signs(int sign_mu_s, int sign_mu_ss) {
  const int row = sign_mu_s == 0 ? 0 : (sign_mu_s > 0 ? 1 : 2);
  const int col = sign_mu_ss > 0 ? 0 : (sign_mu_ss == 0 ? 1 : 2);
  return static_cast<CoexistenceType>(3 * row + col);
}

inline CoexistenceType classify(double mu_s, double mu_ss, double zero_tol) {
  if (!(zero_tol > 0.0))
    throw std::invalid_argument("classify: zero_tol must be positive");
  return type_from_signs(tolerant_sign(mu_s, zero_tol),
                         tolerant_sign(mu_ss, zero_tol));
}

/// Which side of lambda0 carries the nontrivial branch, to second order in s.
enum class CoexistenceSide { above_lambda0, below_lambda0, degenerate, two_sided };

inline const char* to_string(CoexistenceSide side) {
  switch (side) {
  case CoexistenceSide::above_lambda0: return "above_lambda0";
  case CoexistenceSide::below_lambda0: return "below_lambda0";
  case CoexistenceSide::degenerate: return "degenerate";
  case CoexistenceSide::two_sided: return "two_sided";
  }
  return "unknown";
}

inline CoexistenceSide coexistence_side_from_string(const std::string& s) {
  for (auto side : {CoexistenceSide::above_lambda0, CoexistenceSide::below_lambda0,
                    CoexistenceSide::degenerate, CoexistenceSide::two_sided})
    if (s == to_string(side))
      return side;
  throw std::invalid_argument("unknown co-existence side '" + s + "'");
}

inline CoexistenceSide coexistence_side(double mu_s, double mu_ss,
                                        double zero_tol) {
  const int ss = tolerant_sign(mu_ss, zero_tol);
  if (tolerant_sign(mu_s, zero_tol) != 0)
    return CoexistenceSide::two_sided;
  if (ss > 0)
    return CoexistenceSide::above_lambda0;
  if (ss < 0)
    return CoexistenceSide::below_lambda0;
  return CoexistenceSide::degenerate;
}

/// Projections onto u0 that enter mu_s and mu_ss.
struct Moments {
  double I3 = 0.0;   // (u0^2, u0)
  double I4 = 0.0;   // (u0^3, u0)
  double M_zu = 0.0; // (u0 z_s, u0)
  double P_zu = 0.0; // (z_s, u0)

  bool operator==(const Moments&) const = default;
};

/// (f^p, g) on the mesh.
inline double power_moment(const Mesh& mesh, std::span<const double> f, int p,
                           std::span<const double> g) {
  Vector fp(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    fp[i] = std::pow(f[i], p);
  return inner_product(mesh, fp, g);
}

/// mu_s(0) = -1/2 g''(0) (u0^2, u0), for u0 normalized in the mesh norm.
inline double compute_mu_s(std::span<const double> u0,
                           const NonlinearityModel& model, const Mesh& mesh) {
  const double g2 = model.derivative_at_zero(2);
  if (g2 == 0.0)
    return 0.0;
  return -0.5 * g2 * power_moment(mesh, u0, 2, u0);
}

inline constexpr double solvability_tol = 1e-8;

/// Corrector z_s at s = 0: A z_s = mu_s u0 + 1/2 g''(0) u0^2 with (z_s, u0) = 0.
///
/// Throws VerificationError when the right-hand side is not in the range of A
/// (|xi| > solvability_tol), which means mu_s or u0 is inconsistent.
inline BorderedSolution compute_z_s(const SparseOperator& A,
                                    std::span<const double> u0,
                                    const NonlinearityModel& model,
                                    const Mesh& mesh, double mu_s,
                                    double tol = default_linear_tol) {
  const double half_g2 = 0.5 * model.derivative_at_zero(2);
  Vector rhs(u0.size());
  for (std::size_t i = 0; i < u0.size(); ++i)
    rhs[i] = mu_s * u0[i] + half_g2 * u0[i] * u0[i];
  BorderedSolution sol = bordered_solve(A, u0, rhs, mesh, tol);
  if (std::abs(sol.xi) > solvability_tol)
    throw VerificationError("solvability violated: corrector right-hand side "
                            "has component " +
                            std::to_string(sol.xi) + " along u0");
  return sol;
}

struct MuSS {
  double value = 0.0;
  // Closed form for the psi^3 model, 4 eta (u0 z_s, u0) - 2 eta (u0^2, u0)(z_s, u0).
  std::optional<double> sigma;
  // The second term of sigma alone; zero whenever (z_s, u0) = 0.
  std::optional<double> sigma_constraint_term;
};

/// mu_ss(0) = -1/3 g'''(0)(u0^3, u0) - 2 g''(0)(u0 z_s, u0) - 2 mu_s (z_s, u0).
inline MuSS compute_mu_ss(std::span<const double> u0,
                          std::span<const double> z_s,
                          const NonlinearityModel& model, const Mesh& mesh,
                          double mu_s) {
  const double g2 = model.derivative_at_zero(2);
  const double g3 = model.derivative_at_zero(3);
  MuSS out;
  double value = 0.0;
  if (g3 != 0.0)
    value -= g3 / 3.0 * power_moment(mesh, u0, 3, u0);
  double m_zu = 0.0;
  double p_zu = 0.0;
  if (g2 != 0.0 || mu_s != 0.0) {
    Vector u0z(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i)
      u0z[i] = u0[i] * z_s[i];
    m_zu = inner_product(mesh, u0z, u0);
    p_zu = inner_product(mesh, z_s, u0);
  }
  value -= 2.0 * g2 * m_zu + 2.0 * mu_s * p_zu;
  out.value = value;
  if (model.kind() == ModelKind::psi_k && model.k() == 3) {
    const double eta = model.eta();
    out.sigma_constraint_term = 2.0 * eta * power_moment(mesh, u0, 2, u0) * p_zu;
    out.sigma = 4.0 * eta * m_zu - *out.sigma_constraint_term;
  }
  return out;
}

struct DiagnosticsOptions {
  EigenOptions eigen{};
  double linear_tol = default_linear_tol;
  std::optional<double> zero_tol; // default 1e-6 max(1, |lambda0|)
  std::optional<double> gap_tol;  // default 1e-6 lambda0
  double trans_tol = 1e-6;

  double zero_tol_for(double lambda0) const {
    return zero_tol.value_or(1e-6 * std::max(1.0, std::abs(lambda0)));
  }
  double gap_tol_for(double lambda0) const {
    return gap_tol.value_or(1e-6 * lambda0);
  }
};

/// Everything about the linearization that does not depend on the model.
struct SpectralData {
  SparseOperator laplacian;
  SparseOperator shifted; // A = L - lambda0 I
  Eigenpair principal;
  Eigenpair second;
  CRReport cr;
};

inline SpectralData analyze_spectrum(const Mesh& mesh,
                                     const DiagnosticsOptions& opts = {}) {
  SpectralData out;
  out.laplacian = assemble_laplacian(mesh);
  out.principal = principal_eigenpair(out.laplacian, mesh, opts.eigen);
  out.second = second_eigenpair(out.laplacian, out.principal.vector, mesh, opts.eigen);
  out.shifted = out.laplacian.shifted(out.principal.lambda);
  const double lambda0 = out.principal.lambda;
  out.cr = verify_crandall_rabinowitz(lambda0, out.second.lambda,
                                      out.principal.vector, mesh,
                                      opts.gap_tol_for(lambda0), opts.trans_tol);
  return out;
}

struct BifurcationDiagnostics {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double V_L = 0.0;
  double m_critical = 0.0; // m at the bifurcation point, lambda0 - V_L
  CRReport cr;
  double mu_s = 0.0;
  double mu_ss = 0.0;
  std::optional<double> sigma;
  std::optional<double> sigma_constraint_term;
  double solvability_defect = 0.0; // xi of the corrector solve
  Vector u0;
  Vector z_s;
  Moments moments;
  double zero_tol = 0.0;
  CoexistenceType ctype = CoexistenceType::II;
  CoexistenceSide side = CoexistenceSide::degenerate;
  std::vector<std::string> warnings;
};

namespace detail {

// A sign is ambiguous when it lies within a decade of the zero tolerance.
inline bool near_threshold(double x, double zero_tol) {
  const double a = std::abs(x);
  return a > 0.1 * zero_tol && a < 10.0 * zero_tol;
}

inline std::vector<CoexistenceType> alternative_types(double mu_s, double mu_ss,
                                                      double zero_tol) {
  std::vector<int> s_signs{tolerant_sign(mu_s, zero_tol)};
  std::vector<int> ss_signs{tolerant_sign(mu_ss, zero_tol)};
  if (near_threshold(mu_s, zero_tol))
    s_signs.push_back(s_signs[0] == 0 ? (mu_s > 0 ? 1 : -1) : 0);
  if (near_threshold(mu_ss, zero_tol))
    ss_signs.push_back(ss_signs[0] == 0 ? (mu_ss > 0 ? 1 : -1) : 0);
  std::vector<CoexistenceType> out;
  for (int a : s_signs)
    for (int b : ss_signs)
      out.push_back(type_from_signs(a, b));
  return out;
}

} // namespace detail

/// mu_s, z_s, mu_ss and the co-existence type for one model.
inline BifurcationDiagnostics diagnose(const SpectralData& spectrum,
                                       const NonlinearityModel& model,
                                       const Mesh& mesh,
                                       const DiagnosticsOptions& opts = {}) {
  BifurcationDiagnostics d;
  const Vector& u0 = spectrum.principal.vector;
  d.lambda0 = spectrum.principal.lambda;
  d.lambda1 = spectrum.second.lambda;
  d.V_L = model.v_l();
  d.m_critical = d.lambda0 - d.V_L;
  d.cr = spectrum.cr;
  d.u0 = u0;

  d.mu_s = compute_mu_s(u0, model, mesh);
  BorderedSolution zs =
      compute_z_s(spectrum.shifted, u0, model, mesh, d.mu_s, opts.linear_tol);
  d.solvability_defect = zs.xi;
  d.z_s = std::move(zs.z);

  const MuSS mu_ss = compute_mu_ss(u0, d.z_s, model, mesh, d.mu_s);
  d.mu_ss = mu_ss.value;
  d.sigma = mu_ss.sigma;
  d.sigma_constraint_term = mu_ss.sigma_constraint_term;

  d.moments.I3 = power_moment(mesh, u0, 2, u0);
  d.moments.I4 = power_moment(mesh, u0, 3, u0);
  Vector u0z(u0.size());
  for (std::size_t i = 0; i < u0.size(); ++i)
    u0z[i] = u0[i] * d.z_s[i];
  d.moments.M_zu = inner_product(mesh, u0z, u0);
  d.moments.P_zu = inner_product(mesh, d.z_s, u0);

  d.zero_tol = opts.zero_tol_for(d.lambda0);
  d.ctype = classify(d.mu_s, d.mu_ss, d.zero_tol);
  d.side = coexistence_side(d.mu_s, d.mu_ss, d.zero_tol);

  const auto candidates = detail::alternative_types(d.mu_s, d.mu_ss, d.zero_tol);
  if (candidates.size() > 1) {
    std::string msg = "classification within a decade of zero_tol; candidate types:";
    for (auto t : candidates)
      msg += std::string(" ") + to_string(t);
    d.warnings.push_back(msg);
  }
  if (!d.cr.kernel_dim_ok)
    d.warnings.push_back("principal eigenvalue not certified simple (gap " +
                         std::to_string(d.cr.gap) + ")");
  if (!d.cr.transversality_ok)
    d.warnings.push_back("transversality check failed");
  return d;
}

inline BifurcationDiagnostics run_diagnostics(const Mesh& mesh,
                                              const NonlinearityModel& model,
                                              const DiagnosticsOptions& opts = {}) {
  return diagnose(analyze_spectrum(mesh, opts), model, mesh, opts);
}

/// One row of the psi^k summary table.
struct PsiKRow {
  int k = 0;
  double eta = 0.0;
  double d2_projection = 0.0; // (d_s^2 g(u)|_{s=0}, u0)
  double d3_projection = 0.0; // (d_s^3 g(u)|_{s=0}, u0)
  double mu_s = 0.0;
  double mu_ss = 0.0;
  CoexistenceType ctype = CoexistenceType::II;

  bool operator==(const PsiKRow&) const = default;
};

inline PsiKRow psi_k_row(const SpectralData& spectrum, const Mesh& mesh, int k,
                         double eta, const DiagnosticsOptions& opts = {}) {
  if (k < 3 || k > 8)
    throw std::invalid_argument("psi_k_table: k must lie in [3, 8], got " +
                                std::to_string(k));
  const auto model = NonlinearityModel::psi_k(k, eta);
  const BifurcationDiagnostics d = diagnose(spectrum, model, mesh, opts);
  PsiKRow row;
  row.k = k;
  row.eta = eta;
  // V_L = 0 for k >= 3, so d_s^2 g|0 = g''(0) u0^2 and
  // d_s^3 g|0 = g'''(0) u0^3 + 6 g''(0) u0 z_s.
  const double g2 = model.derivative_at_zero(2);
  const double g3 = model.derivative_at_zero(3);
  row.d2_projection = g2 * d.moments.I3;
  row.d3_projection = g3 * d.moments.I4 + 6.0 * g2 * d.moments.M_zu;
  row.mu_s = d.mu_s;
  row.mu_ss = d.mu_ss;
  row.ctype = d.ctype;
  return row;
}

inline std::vector<PsiKRow> psi_k_table(const SpectralData& spectrum,
                                        const Mesh& mesh,
                                        std::span<const int> k_list, double eta,
                                        const DiagnosticsOptions& opts = {}) {
  std::vector<PsiKRow> rows;
  rows.reserve(k_list.size());
  for (int k : k_list)
    rows.push_back(psi_k_row(spectrum, mesh, k, eta, opts));
  return rows;
}

inline std::vector<PsiKRow> psi_k_table(const Mesh& mesh,
                                        std::span<const int> k_list, double eta,
                                        const DiagnosticsOptions& opts = {}) {
  return psi_k_table(analyze_spectrum(mesh, opts), mesh, k_list, eta, opts);
}

} // namespace coexist
