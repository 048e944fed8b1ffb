#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace coexist {

/// Values attached to the interior nodes of a mesh, in mesh node order.
using Vector = std::vector<double>;

enum class DomainKind { interval, rectangle };

inline std::size_t axis_count(DomainKind kind) {
  return kind == DomainKind::interval ? 1 : 2;
}

/// Axis-aligned product domain with a per-axis interior node count.
struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  std::vector<std::pair<double, double>> bounds;
  std::vector<int> resolution;

  bool operator==(const DomainSpec&) const = default;
};

inline DomainSpec make_interval(double a, double b, int n) {
  return {DomainKind::interval, {{a, b}}, {n}};
}

inline DomainSpec make_rectangle(double ax, double bx, double ay, double by,
                                 int nx, int ny) {
  return {DomainKind::rectangle, {{ax, bx}, {ay, by}}, {nx, ny}};
}

/// Throws std::invalid_argument naming the first offending field.
inline void validate(const DomainSpec& spec) {
  const std::size_t dims = axis_count(spec.kind);
  if (spec.bounds.size() != dims)
    throw std::invalid_argument("domain.bounds: expected " +
                                std::to_string(dims) + " axis pair(s), got " +
                                std::to_string(spec.bounds.size()));
  if (spec.resolution.size() != dims)
    throw std::invalid_argument("domain.resolution: expected " +
                                std::to_string(dims) + " entr(ies), got " +
                                std::to_string(spec.resolution.size()));
  for (std::size_t a = 0; a < dims; ++a) {
    const auto [lo, hi] = spec.bounds[a];
    if (!(std::isfinite(lo) && std::isfinite(hi) && hi > lo))
      throw std::invalid_argument("domain.bounds[" + std::to_string(a) +
                                  "]: axis length must be positive");
    if (spec.resolution[a] < 3)
      throw std::invalid_argument("domain.resolution[" + std::to_string(a) +
                                  "]: must be at least 3");
  }
}

/// Uniform grid of interior nodes with homogeneous Dirichlet boundary.
///
/// Nodes are ordered lexicographically in their axis indices, the last axis
/// varying fastest. Every node carries the rectangle-rule weight prod(h_a).
class Mesh {
public:
  using Point = std::array<double, 2>;

  explicit Mesh(DomainSpec spec) : spec_(std::move(spec)) {
    validate(spec_);
    const std::size_t dims = axis_count(spec_.kind);
    double cell = 1.0;
    std::size_t count = 1;
    for (std::size_t a = 0; a < dims; ++a) {
      const auto [lo, hi] = spec_.bounds[a];
      h_[a] = (hi - lo) / (spec_.resolution[a] + 1);
      cell *= h_[a];
      count *= static_cast<std::size_t>(spec_.resolution[a]);
    }
    nodes_.reserve(count);
    if (dims == 1) {
      for (int i = 0; i < spec_.resolution[0]; ++i)
        nodes_.push_back({spec_.bounds[0].first + (i + 1) * h_[0], 0.0});
    } else {
      for (int i = 0; i < spec_.resolution[0]; ++i)
        for (int j = 0; j < spec_.resolution[1]; ++j)
          nodes_.push_back({spec_.bounds[0].first + (i + 1) * h_[0],
                            spec_.bounds[1].first + (j + 1) * h_[1]});
    }
    weights_.assign(count, cell);
  }

  const DomainSpec& spec() const noexcept { return spec_; }
  std::size_t dimension() const noexcept { return axis_count(spec_.kind); }
  std::size_t size() const noexcept { return nodes_.size(); }
  int resolution(std::size_t axis) const { return spec_.resolution.at(axis); }
  double spacing(std::size_t axis) const { return h_.at(axis); }
  double length(std::size_t axis) const {
    return spec_.bounds.at(axis).second - spec_.bounds.at(axis).first;
  }
  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  const Vector& weights() const noexcept { return weights_; }

  /// Linear index of the node with axis indices (i, j); j is ignored in 1D.
  std::size_t index(int i, int j = 0) const {
    return dimension() == 1
               ? static_cast<std::size_t>(i)
               : static_cast<std::size_t>(i) * spec_.resolution[1] + j;
  }

  /// Samples f at every interior node; f takes x, or (x, y) on a rectangle.
  template <class F> Vector sample(F&& f) const {
    Vector out(nodes_.size());
    constexpr bool one = std::is_invocable_v<F&, double>;
    constexpr bool two = std::is_invocable_v<F&, double, double>;
    if ((dimension() == 1 && !one) || (dimension() == 2 && !two))
      throw std::invalid_argument("Mesh::sample: callable does not match the dimension");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if constexpr (one)
        if (dimension() == 1) {
          out[i] = f(nodes_[i][0]);
          continue;
        }
      if constexpr (two)
        out[i] = f(nodes_[i][0], nodes_[i][1]);
    }
    return out;
  }

private:
  DomainSpec spec_;
  std::array<double, 2> h_{0.0, 0.0};
  std::vector<Point> nodes_;
  Vector weights_;
};

inline Mesh build_mesh(const DomainSpec& spec) { return Mesh(spec); }

namespace detail {
inline void check_length(const Mesh& mesh, std::size_t n, const char* what) {
  if (n != mesh.size())
    throw std::invalid_argument(std::string(what) + ": vector length " +
                                std::to_string(n) + " does not match " +
                                std::to_string(mesh.size()) + " mesh nodes");
}
} // namespace detail

/// Discrete L2 pairing sum_i w_i f_i g_i, accumulated in ascending node order.
inline double inner_product(const Mesh& mesh, std::span<const double> f,
                            std::span<const double> g) {
  detail::check_length(mesh, f.size(), "inner_product");
  detail::check_length(mesh, g.size(), "inner_product");
  const Vector& w = mesh.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    sum += w[i] * (f[i] * g[i]);
  return sum;
}

inline double l2_norm(const Mesh& mesh, std::span<const double> f) {
  return std::sqrt(inner_product(mesh, f, f));
}

} // namespace coexist
