#pragma once

// JSON and CSV serialization for configurations, reports and branch data.

#include <cmath>
#include <iomanip>
#include <limits>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "continuation.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "mesh.hpp"
#include "nonlinearity.hpp"
#include "spectrum.hpp"

namespace coexist {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV

/// Locale-independent rendering with 17 significant digits.
inline std::string format_real(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

inline void write_branch_csv(std::ostream& os, const Branch& branch,
                             const Mesh& mesh) {
  os << "s,lambda,l2_norm_U,residual,newton_iters\r\n";
  for (const auto& p : branch.points)
    os << format_real(p.s) << ',' << format_real(p.lambda) << ','
       << format_real(l2_norm(mesh, p.U)) << ',' << format_real(p.residual) << ','
       << p.newton_iters << "\r\n";
}

inline void write_table_csv(std::ostream& os, const std::vector<PsiKRow>& rows) {
  os << "k,eta,mu_s,mu_ss,type\r\n";
  for (const auto& r : rows)
    os << r.k << ',' << format_real(r.eta) << ',' << format_real(r.mu_s) << ','
       << format_real(r.mu_ss) << ',' << to_string(r.ctype) << "\r\n";
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v)
    j[key] = *v;
  else
    j[key] = nullptr;
}

template <class T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null())
    return std::nullopt;
  return j.at(key).get<T>();
}

} // namespace detail

inline void to_json(json& j, const CRReport& r) {
  j = json{{"lambda0", r.lambda0},
           {"lambda1", r.lambda1},
           {"gap", r.gap},
           {"kernel_dim_ok", r.kernel_dim_ok},
           {"transversality_value", r.transversality_value},
           {"transversality_ok", r.transversality_ok}};
}

inline void from_json(const json& j, CRReport& r) {
  j.at("lambda0").get_to(r.lambda0);
  j.at("lambda1").get_to(r.lambda1);
  j.at("gap").get_to(r.gap);
  j.at("kernel_dim_ok").get_to(r.kernel_dim_ok);
  j.at("transversality_value").get_to(r.transversality_value);
  j.at("transversality_ok").get_to(r.transversality_ok);
}

inline void to_json(json& j, const Moments& m) {
  j = json{{"I3", m.I3}, {"I4", m.I4}, {"M_zu", m.M_zu}, {"P_zu", m.P_zu}};
}

inline void from_json(const json& j, Moments& m) {
  j.at("I3").get_to(m.I3);
  j.at("I4").get_to(m.I4);
  j.at("M_zu").get_to(m.M_zu);
  j.at("P_zu").get_to(m.P_zu);
}

inline void to_json(json& j, const BranchFit& f) {
  j = json{{"a", f.a}, {"b", f.b}, {"rms", f.rms}};
}

inline void from_json(const json& j, BranchFit& f) {
  j.at("a").get_to(f.a);
  j.at("b").get_to(f.b);
  j.at("rms").get_to(f.rms);
}

inline void to_json(json& j, const ConsistencyCheck& c) {
  j = json{{"a_error", c.a_error},
           {"a_bound", c.a_bound},
           {"b_error", c.b_error},
           {"b_bound", c.b_bound},
           {"ok", c.ok()}};
}

inline void from_json(const json& j, ConsistencyCheck& c) {
  j.at("a_error").get_to(c.a_error);
  j.at("a_bound").get_to(c.a_bound);
  j.at("b_error").get_to(c.b_error);
  j.at("b_bound").get_to(c.b_bound);
}

inline void to_json(json& j, const PsiKRow& r) {
  j = json{{"k", r.k},
           {"eta", r.eta},
           {"d2_projection", r.d2_projection},
           {"d3_projection", r.d3_projection},
           {"mu_s", r.mu_s},
           {"mu_ss", r.mu_ss},
           {"type", to_string(r.ctype)}};
}

inline void from_json(const json& j, PsiKRow& r) {
  j.at("k").get_to(r.k);
  j.at("eta").get_to(r.eta);
  j.at("d2_projection").get_to(r.d2_projection);
  j.at("d3_projection").get_to(r.d3_projection);
  j.at("mu_s").get_to(r.mu_s);
  j.at("mu_ss").get_to(r.mu_ss);
  r.ctype = coexistence_type_from_string(j.at("type").get<std::string>());
}

// ---------------------------------------------------------------------------
// Domain and model descriptors

inline json domain_to_json(const DomainSpec& d) {
  json bounds = json::array();
  for (const auto& [lo, hi] : d.bounds)
    bounds.push_back({lo, hi});
  return json{{"kind", d.kind == DomainKind::interval ? "interval" : "rectangle"},
              {"bounds", bounds},
              {"resolution", d.resolution}};
}

inline DomainSpec domain_from_json(const json& j) {
  DomainSpec d;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "interval")
    d.kind = DomainKind::interval;
  else if (kind == "rectangle")
    d.kind = DomainKind::rectangle;
  else
    throw ConfigError("domain.kind: expected 'interval' or 'rectangle', got '" +
                      kind + "'");
  for (const auto& b : j.at("bounds")) {
    if (!b.is_array() || b.size() != 2)
      throw ConfigError("domain.bounds: each axis must be a [lo, hi] pair");
    d.bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
  }
  d.resolution = j.at("resolution").get<std::vector<int>>();
  try {
    validate(d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return d;
}

inline json model_to_json(const NonlinearityModel& m) {
  switch (m.kind()) {
  case ModelKind::free: return json{{"kind", "free"}};
  case ModelKind::linear: return json{{"kind", "linear"}, {"V_L", m.v_l()}};
  case ModelKind::psi_k:
    return json{{"kind", "psi_k"}, {"k", m.k()}, {"eta", m.eta()}};
  case ModelKind::polynomial: {
    std::vector<double> c = m.coefficients();
    while (!c.empty() && c.back() == 0.0)
      c.pop_back();
    return json{{"kind", "polynomial"}, {"coeffs", c}};
  }
  }
  return json{};
}

inline NonlinearityModel model_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "free")
      return NonlinearityModel::free();
    if (kind == "linear")
      return NonlinearityModel::linear(j.at("V_L").get<double>());
    if (kind == "psi_k")
      return NonlinearityModel::psi_k(j.at("k").get<int>(), j.at("eta").get<double>());
    if (kind == "polynomial")
      return NonlinearityModel::polynomial(j.at("coeffs").get<std::vector<double>>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("model.kind: expected free, linear, psi_k or polynomial, got '" +
                    kind + "'");
}

} // namespace coexist
