#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace coexist {

enum class ModelKind { free, linear, psi_k, polynomial };

/// The interaction term g(u) = V(u) u as a polynomial in u.
///
/// Only g is represented; V = g/u is never formed. Every kind stores its
/// coefficients c_j of g(u) = sum_{j>=1} c_j u^j, so g(0) = 0 and g'(0) = c_1
/// hold by construction.
class NonlinearityModel {
public:
  /// Degree cap for the polynomial kind.
  static constexpr int max_degree = 6;

  static NonlinearityModel free() { return NonlinearityModel(ModelKind::free); }

  static NonlinearityModel linear(double v_l) {
    NonlinearityModel m(ModelKind::linear);
    m.coeffs_[1] = v_l;
    return m;
  }

  /// psi^k interaction, g(u) = -eta u^(k-1). k = 2 is the linear case with
  /// V_L = -eta.
  static NonlinearityModel psi_k(int k, double eta) {
    if (k < 2)
      throw std::invalid_argument("model.k: must be at least 2, got " +
                                  std::to_string(k));
    NonlinearityModel m(ModelKind::psi_k, k - 1);
    m.k_ = k;
    m.eta_ = eta;
    m.coeffs_[k - 1] = -eta;
    return m;
  }

  /// g(u) = sum_j c_j u^j with c = (c_1, c_2, ...), degree at most 6.
  static NonlinearityModel polynomial(std::span<const double> c) {
    if (c.size() > static_cast<std::size_t>(max_degree))
      throw std::invalid_argument("model.coeffs: degree exceeds " +
                                  std::to_string(max_degree));
    std::size_t degree = c.size();
    while (degree > 0 && c[degree - 1] == 0.0)
      --degree;
    NonlinearityModel m(ModelKind::polynomial, static_cast<int>(degree));
    for (std::size_t j = 0; j < degree; ++j)
      m.coeffs_[j + 1] = c[j];
    return m;
  }

  ModelKind kind() const noexcept { return kind_; }
  int k() const noexcept { return k_; }
  double eta() const noexcept { return eta_; }
  double v_l() const noexcept { return coeffs_[1]; }
  /// c_1, c_2, ... of g; at least three entries.
  std::vector<double> coefficients() const {
    return {coeffs_.begin() + 1, coeffs_.end()};
  }

  /// g(u) by Horner's rule.
  double value(double u) const {
    double acc = 0.0;
    for (std::size_t j = coeffs_.size() - 1; j >= 1; --j)
      acc = (acc + coeffs_[j]) * u;
    return acc;
  }

  /// g'(u).
  double slope(double u) const {
    double acc = 0.0;
    for (std::size_t j = coeffs_.size() - 1; j >= 1; --j)
      acc = acc * u + static_cast<double>(j) * coeffs_[j];
    return acc;
  }

  /// order-th derivative of g at 0 for order in {1, 2, 3}.
  double derivative_at_zero(int order) const {
    switch (order) {
    case 1: return coeffs_[1];
    case 2: return 2.0 * coeffs_[2];
    case 3: return 6.0 * coeffs_[3];
    default:
      throw std::invalid_argument("derivative_at_zero: order must be 1, 2 or 3");
    }
  }

  /// Pointwise g(U_i).
  Vector apply(std::span<const double> U) const {
    Vector out(U.size());
    for (std::size_t i = 0; i < U.size(); ++i)
      out[i] = value(U[i]);
    return out;
  }

  /// Pointwise g'(U_i).
  Vector apply_derivative(std::span<const double> U) const {
    Vector out(U.size());
    for (std::size_t i = 0; i < U.size(); ++i)
      out[i] = slope(U[i]);
    return out;
  }

  bool operator==(const NonlinearityModel&) const = default;

private:
  explicit NonlinearityModel(ModelKind kind, int degree = 3)
      : kind_(kind), coeffs_(static_cast<std::size_t>(std::max(degree, 3)) + 1, 0.0) {}

  ModelKind kind_;
  int k_ = 0;
  double eta_ = 0.0;
  std::vector<double> coeffs_; // coeffs_[0] is always 0
};

inline double derivative_at_zero(const NonlinearityModel& m, int order) {
  return m.derivative_at_zero(order);
}

inline Vector apply(const NonlinearityModel& m, std::span<const double> U) {
  return m.apply(U);
}

inline Vector apply_derivative(const NonlinearityModel& m,
                               std::span<const double> U) {
  return m.apply_derivative(U);
}

inline const char* to_string(ModelKind kind) {
  switch (kind) {
  case ModelKind::free: return "free";
  case ModelKind::linear: return "linear";
  case ModelKind::psi_k: return "psi_k";
  case ModelKind::polynomial: return "polynomial";
  }
  return "unknown";
}

} // namespace coexist
