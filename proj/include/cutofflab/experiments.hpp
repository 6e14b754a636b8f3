#pragma once

// Config-driven experiment runner: strict JSON configs, per-experiment CSV
// tables and a JSON summary with declared pass/fail criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cutofflab/core.hpp"
#include "cutofflab/fit.hpp"
#include "cutofflab/floquet.hpp"
#include "cutofflab/hamiltonian.hpp"
#include "cutofflab/models.hpp"
#include "cutofflab/parallel.hpp"
#include "cutofflab/propagator.hpp"
#include "cutofflab/spectral_model.hpp"
#include "cutofflab/traces.hpp"

namespace cutofflab::experiments {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Registry

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string anchor;
  std::vector<std::string> required;  // keys of "params"
  std::vector<std::string> optional;
  bool needs_state = false;
  std::vector<std::string> criteria;  // keys of "criteria"
};

inline const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> registry{
      {"cutoff-convergence", "||U_N(t,s) P_N u - U(t,s) u|| over increasing cut-offs against the Galerkin oracle",
       "Theorem: strong convergence of the spectral cut-off dynamics", {"Ns", "N_ref", "t"}, {"s", "tol"}, true,
       {"max_final", "monotone", "max_oracle_delta"}},
      {"slicing-order", "first-order time-slicing error of U_{N,M} against a Richardson oracle",
       "Lemma: finite-dimensional unitary propagator (product formula)", {"N", "Ms", "t"}, {"s"}, false, {"slope"}},
      {"duhamel", "cut-off error against the Duhamel quadrature bound",
       "Proposition: Duhamel formula for the cut-off error", {"Ns", "N_ref", "t"},
       {"s", "tol", "quad_points", "quad_tol"}, true, {"bound_margin"}},
      {"energy-stability", "weighted growth of U_N against exp(C |t - s| / 2)",
       "Proposition: commutator estimate implies stability", {"Ns", "r", "t"}, {"s", "grid_points", "tol"}, false,
       {"bound_factor"}},
      {"word-convergence", "cut-off words P_N H(t_m) P_N ... P_N H(t_1) P_N u against the exact word",
       "Lemma: convergence of cut-off words", {"Ns", "times"}, {}, true, {"max_final", "monotone"}},
      {"fm-coefficients", "Floquet-Magnus coefficients H^[l]_N P_N u against N_ref",
       "Proposition: coefficient convergence", {"Ns", "N_ref", "ells"}, {"quad_tol"}, true,
       {"max_final", "monotone"}},
      {"stroboscopic", "stroboscopic error of the order-L effective Hamiltonian over periods T",
       "Proposition: finite-dimensional Magnus estimate", {"N", "Ls", "Ts"}, {"qs", "tol", "quad_tol"}, false,
       {"slopes", "telescoping_factor"}},
      {"effective-group", "exp(-i t H_FM,L,N) P_N u against N_ref",
       "Corollary: convergence of finite-order effective Hamiltonians", {"Ns", "N_ref", "L", "T", "t"},
       {"quad_tol"}, true, {"max_final", "monotone"}},
      {"traces", "heat-trace finite part, zeta values and the shift trace defect",
       "Regularized trace finite parts and trace defects", {"eps_grid"},
       {"betas", "include_log", "correction_order", "zeta_points", "defect_Ns"}, false,
       {"finite_part", "zeta", "defect_pair"}},
      {"amplitude", "regularized amplitude Tr(exp(-eps H0) U(t,s)) and its finite part",
       "Regularized transition amplitudes", {"N_ref", "t", "eps_grid"},
       {"s", "tol", "betas", "include_log", "correction_order"}, false, {"finite_part", "bounded_by_heat"}},
  };
  return registry;
}

inline const ExperimentInfo* find_experiment(const std::string& name) {
  for (const auto& e : list_experiments())
    if (e.name == name) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Formatting and hashing

/// 17 significant digits, the round-trip precision of a double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// FNV-1a 64 of the canonical (sorted-key, compact) config text.
inline std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// CUTOFFLAB_WORKERS if set to a positive integer, else 1.
inline unsigned default_workers() {
  if (const char* env = std::getenv("CUTOFFLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline const std::set<std::string> top_keys{"experiment", "description", "model",  "family", "params",
                                             "state",      "criteria",    "output_dir", "seed", "workers"};
inline const std::set<std::string> model_kinds{"fourier_circle", "hermite_line", "unit_linear"};

class Checker {
 public:
  std::vector<std::string> violations;

  void add(const std::string& path, const std::string& what) { violations.push_back(path + ": " + what); }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    add(path, "must be an object");
    return false;
  }

  void keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) add(path + "." + k, "unknown key");
  }

  std::optional<double> number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      add(path, "must be a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      add(path, "must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> positive(const json& j, const std::string& path) {
    auto v = number(j, path);
    if (v && !(*v > 0.0)) {
      add(path, "must be > 0");
      return std::nullopt;
    }
    return v;
  }

  std::optional<long long> integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
      add(path, "must be an integer");
      return std::nullopt;
    }
    return j.get<long long>();
  }

  std::optional<std::vector<double>> numbers(const json& j, const std::string& path, bool allow_empty = false) {
    if (!j.is_array() || (!allow_empty && j.empty())) {
      add(path, allow_empty ? "must be an array of numbers" : "must be a non-empty array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto v = number(j[i], path + "[" + std::to_string(i) + "]");
      if (v)
        out.push_back(*v);
      else
        ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<std::vector<long long>> integers(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
      add(path, "must be a non-empty array of integers");
      return std::nullopt;
    }
    std::vector<long long> out;
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto v = integer(j[i], path + "[" + std::to_string(i) + "]");
      if (v)
        out.push_back(*v);
      else
        ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<bool> boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) {
      add(path, "must be true or false");
      return std::nullopt;
    }
    return j.get<bool>();
  }
};

inline bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

inline ModelPtr model_from_kind(const std::string& kind) {
  if (kind == "fourier_circle") return build_model(ModelKind::fourier_circle);
  if (kind == "hermite_line") return build_model(ModelKind::hermite_line);
  if (kind == "unit_linear") return models::two_level_model();
  throw error(errc::config_invalid, "unknown model kind '" + kind + "'");
}

inline double default_loss_order(const std::string& kind) {
  if (kind == "fourier_circle") return 2.0;
  if (kind == "hermite_line") return 1.0;
  return 0.0;
}

inline void check_eps_grid(Checker& c, const json& j, const std::string& path) {
  if (j.is_object()) {
    c.keys(j, path, {"first", "points", "ratio"});
    if (!j.contains("first")) c.add(path + ".first", "required");
    if (!j.contains("points")) c.add(path + ".points", "required");
    if (j.contains("first")) c.positive(j["first"], path + ".first");
    if (j.contains("points")) {
      auto p = c.integer(j["points"], path + ".points");
      if (p && *p < 1) c.add(path + ".points", "must be >= 1");
    }
    if (j.contains("ratio")) {
      auto r = c.number(j["ratio"], path + ".ratio");
      if (r && !(*r > 0.0 && *r < 1.0)) c.add(path + ".ratio", "must lie in (0, 1)");
    }
    return;
  }
  auto v = c.numbers(j, path);
  if (!v) return;
  for (double e : *v)
    if (!(e > 0.0)) {
      c.add(path, "entries must be > 0");
      return;
    }
  if (!strictly_decreasing(*v)) c.add(path, "must be strictly decreasing");
}

inline std::vector<double> eps_grid_from(const json& j) {
  if (j.is_object()) return geometric_grid(j["first"].get<double>(), j["points"].get<int>(), j.value("ratio", 0.5));
  return j.get<std::vector<double>>();
}

inline void check_param(Checker& c, const std::string& key, const json& v, const std::string& path) {
  if (key == "Ns" || key == "defect_Ns") {
    auto ns = c.numbers(v, path);
    if (!ns) return;
    for (double n : *ns)
      if (!(n >= 0.0)) c.add(path, "cut-offs must be >= 0");
    if (!strictly_increasing(*ns)) c.add(path, "must be strictly increasing");
  } else if (key == "N_ref" || key == "N" || key == "T" || key == "tol" || key == "quad_tol") {
    c.positive(v, path);
  } else if (key == "s" || key == "t") {
    c.number(v, path);
  } else if (key == "r") {
    auto r = c.number(v, path);
    if (r && *r < 0.0) c.add(path, "must be >= 0");
  } else if (key == "Ms") {
    auto ms = c.integers(v, path);
    if (!ms) return;
    if (ms->size() < 4) c.add(path, "needs at least 4 entries");
    if (ms->front() < 1) c.add(path, "entries must be >= 1");
    for (std::size_t i = 1; i < ms->size(); ++i)
      if ((*ms)[i] != 2 * (*ms)[i - 1]) {
        c.add(path, "must be dyadic (each entry twice the previous)");
        break;
      }
  } else if (key == "Ts") {
    auto ts = c.numbers(v, path);
    if (!ts) return;
    if (ts->size() < 3) c.add(path, "needs at least 3 entries");
    for (double t : *ts)
      if (!(t > 0.0)) {
        c.add(path, "entries must be > 0");
        break;
      }
    if (!strictly_decreasing(*ts)) c.add(path, "must be strictly decreasing");
  } else if (key == "qs") {
    auto qs = c.integers(v, path);
    if (!qs) return;
    if (std::find(qs->begin(), qs->end(), 1LL) == qs->end()) c.add(path, "must contain 1");
    for (long long q : *qs)
      if (q < 1) {
        c.add(path, "entries must be >= 1");
        break;
      }
  } else if (key == "Ls" || key == "ells") {
    auto ls = c.integers(v, path);
    if (!ls) return;
    for (long long l : *ls)
      if (l < 0 || l > 2) {
        c.add(path, "orders must lie in {0, 1, 2}");
        break;
      }
  } else if (key == "L") {
    auto l = c.integer(v, path);
    if (l && (*l < 0 || *l > 2)) c.add(path, "order must lie in {0, 1, 2}");
  } else if (key == "quad_points" || key == "grid_points") {
    auto n = c.integer(v, path);
    if (n && *n < (key == "grid_points" ? 2 : 1)) c.add(path, "too small");
  } else if (key == "correction_order") {
    auto n = c.integer(v, path);
    if (n && (*n < 0 || *n > 4)) c.add(path, "must lie in 0..4");
  } else if (key == "times" || key == "zeta_points") {
    c.numbers(v, path);
  } else if (key == "betas") {
    auto b = c.numbers(v, path, true);
    if (b)
      for (double x : *b)
        if (!(x > 0.0)) {
          c.add(path, "exponents must be > 0");
          break;
        }
  } else if (key == "include_log") {
    c.boolean(v, path);
  } else if (key == "eps_grid") {
    check_eps_grid(c, v, path);
  }
}

inline void check_target(Checker& c, const json& j, const std::string& path, const std::set<std::string>& extra = {}) {
  if (!c.object(j, path)) return;
  std::set<std::string> allowed{"target", "tolerance"};
  allowed.insert(extra.begin(), extra.end());
  c.keys(j, path, allowed);
  for (const char* k : {"target", "tolerance"}) {
    if (!j.contains(k))
      c.add(path + "." + k, "required");
    else if (std::string(k) == "tolerance")
      c.positive(j[k], path + "." + k);
    else
      c.number(j[k], path + "." + k);
  }
  for (const auto& k : extra) {
    if (!j.contains(k))
      c.add(path + "." + k, "required");
    else
      c.number(j[k], path + "." + k);
  }
}

inline void check_criterion(Checker& c, const std::string& key, const json& v, const std::string& path) {
  if (key == "max_final" || key == "max_oracle_delta") {
    c.positive(v, path);
  } else if (key == "bound_margin" || key == "bound_factor" || key == "telescoping_factor") {
    auto x = c.number(v, path);
    if (x && *x < 0.0) c.add(path, "must be >= 0");
  } else if (key == "monotone") {
    if (!v.is_string() || (v != "decreasing" && v != "nonincreasing"))
      c.add(path, "must be \"decreasing\" or \"nonincreasing\"");
  } else if (key == "slope" || key == "finite_part") {
    check_target(c, v, path);
  } else if (key == "slopes") {
    if (!v.is_array() || v.empty()) {
      c.add(path, "must be a non-empty array");
      return;
    }
    for (std::size_t i = 0; i < v.size(); ++i) check_target(c, v[i], path + "[" + std::to_string(i) + "]", {"L"});
  } else if (key == "zeta") {
    if (!v.is_array() || v.empty()) {
      c.add(path, "must be a non-empty array");
      return;
    }
    for (std::size_t i = 0; i < v.size(); ++i) check_target(c, v[i], path + "[" + std::to_string(i) + "]", {"z"});
  } else if (key == "defect_pair") {
    auto p = c.numbers(v, path);
    if (p && p->size() != 2) c.add(path, "must hold two numbers");
  } else if (key == "bounded_by_heat") {
    c.boolean(v, path);
  }
}

}  // namespace detail

/// Every violated invariant of a parsed config; empty when it is runnable.
inline std::vector<std::string> validate_config(const json& config) {
  using detail::Checker;
  Checker c;
  if (!c.object(config, "config")) return c.violations;
  c.keys(config, "config", detail::top_keys);

  const ExperimentInfo* info = nullptr;
  if (!config.contains("experiment") || !config["experiment"].is_string()) {
    c.add("experiment", "required string");
  } else {
    info = find_experiment(config["experiment"].get<std::string>());
    if (!info) c.add("experiment", "unknown experiment '" + config["experiment"].get<std::string>() + "'");
  }
  if (config.contains("description") && !config["description"].is_string()) c.add("description", "must be a string");
  if (config.contains("output_dir") && !config["output_dir"].is_string()) c.add("output_dir", "must be a string");
  if (config.contains("seed")) {
    auto s = c.integer(config["seed"], "seed");
    if (s && *s < 0) c.add("seed", "must be >= 0");
  }
  if (config.contains("workers")) {
    auto w = c.integer(config["workers"], "workers");
    if (w && *w < 1) c.add("workers", "must be >= 1");
  }

  // Model
  ModelPtr model;
  std::string kind;
  if (!config.contains("model")) {
    c.add("model", "required");
  } else if (c.object(config["model"], "model")) {
    const json& m = config["model"];
    c.keys(m, "model", {"kind"});
    if (!m.contains("kind") || !m["kind"].is_string()) {
      c.add("model.kind", "required string");
    } else if (!detail::model_kinds.count(m["kind"].get<std::string>())) {
      c.add("model.kind", "unknown model kind '" + m["kind"].get<std::string>() + "'");
    } else {
      kind = m["kind"].get<std::string>();
      model = detail::model_from_kind(kind);
    }
  }

  // Family
  const bool family_used = info && info->name != "traces";
  if (config.contains("family")) {
    if (!family_used) c.add("family", "not used by this experiment");
    const json& f = config["family"];
    if (c.object(f, "family")) {
      c.keys(f, "family", {"terms", "period", "loss_order"});
      if (!f.contains("terms") || !f["terms"].is_array() || f["terms"].empty()) {
        c.add("family.terms", "required non-empty array");
      } else {
        for (std::size_t i = 0; i < f["terms"].size(); ++i) {
          const std::string path = "family.terms[" + std::to_string(i) + "]";
          const json& t = f["terms"][i];
          if (!c.object(t, path)) continue;
          c.keys(t, path, {"name", "coefficient", "amplitude"});
          if (!t.contains("name") || !t["name"].is_string())
            c.add(path + ".name", "required string");
          else if (model && !model->has_term(t["name"].get<std::string>()))
            c.add(path + ".name", "unknown term name '" + t["name"].get<std::string>() + "'");
          if (!t.contains("coefficient") || !t["coefficient"].is_string())
            c.add(path + ".coefficient", "required string");
          else if (!is_registered_coefficient(t["coefficient"].get<std::string>()))
            c.add(path + ".coefficient", "unknown coefficient '" + t["coefficient"].get<std::string>() + "'");
          if (t.contains("amplitude")) c.number(t["amplitude"], path + ".amplitude");
        }
      }
      if (f.contains("period") && !f["period"].is_null()) c.positive(f["period"], "family.period");
      if (f.contains("loss_order")) {
        auto mu = c.number(f["loss_order"], "family.loss_order");
        if (mu && *mu < 0.0) c.add("family.loss_order", "must be >= 0");
      }
    }
  } else if (family_used) {
    c.add("family", "required");
  }

  // Params
  if (info) {
    std::set<std::string> allowed(info->required.begin(), info->required.end());
    allowed.insert(info->optional.begin(), info->optional.end());
    if (!config.contains("params")) {
      c.add("params", "required");
    } else if (c.object(config["params"], "params")) {
      const json& p = config["params"];
      c.keys(p, "params", allowed);
      for (const auto& k : info->required)
        if (!p.contains(k)) c.add("params." + k, "required");
      for (const auto& [k, v] : p.items())
        if (allowed.count(k)) detail::check_param(c, k, v, "params." + k);

      const auto num = [&](const char* k) -> std::optional<double> {
        if (p.contains(k) && p[k].is_number()) return p[k].get<double>();
        return std::nullopt;
      };
      const auto max_ns = [&]() -> std::optional<double> {
        if (!p.contains("Ns") || !p["Ns"].is_array() || p["Ns"].empty()) return std::nullopt;
        double m = 0.0;
        for (const auto& x : p["Ns"])
          if (x.is_number()) m = std::max(m, x.get<double>());
        return m;
      };
      const auto n_ref = num("N_ref"), top = max_ns();
      if (n_ref && top) {
        const bool oracle = info->name == "cutoff-convergence" || info->name == "duhamel";
        if (oracle && !(*top * 4.0 < *n_ref)) c.add("params.N_ref", "must exceed 4 max(Ns)");
        if (!oracle && *top > *n_ref) c.add("params.N_ref", "must be >= max(Ns)");
      }
      const auto s = num("s"), t = num("t");
      if (t && s.value_or(0.0) > *t && info->name != "amplitude") c.add("params.t", "must be >= s");
    }
  }

  // State
  if (info && info->needs_state) {
    if (!config.contains("state")) {
      c.add("state", "required");
    } else if (c.object(config["state"], "state")) {
      const json& st = config["state"];
      c.keys(st, "state", {"labels", "amplitudes", "random_modes"});
      const bool has_labels = st.contains("labels"), has_random = st.contains("random_modes");
      if (has_labels == has_random) c.add("state", "exactly one of labels, random_modes");
      if (has_labels) {
        auto labels = c.integers(st["labels"], "state.labels");
        if (labels && model) {
          for (long long l : *labels) {
            try {
              model->index_of_label(l);
            } catch (const error&) {
              c.add("state.labels", "invalid label " + std::to_string(l));
            }
          }
        }
        if (st.contains("amplitudes")) {
          const json& a = st["amplitudes"];
          if (!a.is_array() || (labels && a.size() != labels->size())) {
            c.add("state.amplitudes", "must match labels in length");
          } else {
            for (std::size_t i = 0; i < a.size(); ++i) {
              const std::string path = "state.amplitudes[" + std::to_string(i) + "]";
              if (a[i].is_number()) continue;
              auto pair = c.numbers(a[i], path);
              if (pair && pair->size() != 2) c.add(path, "must be a number or [re, im]");
            }
          }
        }
      } else if (st.contains("amplitudes")) {
        c.add("state.amplitudes", "only valid with labels");
      }
      if (has_random) {
        auto k = c.integer(st["random_modes"], "state.random_modes");
        if (k && *k < 1) c.add("state.random_modes", "must be >= 1");
      }
    }
  } else if (config.contains("state")) {
    c.add("state", "not used by this experiment");
  }

  // Criteria
  if (config.contains("criteria") && c.object(config["criteria"], "criteria") && info) {
    const json& cr = config["criteria"];
    c.keys(cr, "criteria", std::set<std::string>(info->criteria.begin(), info->criteria.end()));
    for (const auto& [k, v] : cr.items())
      if (std::find(info->criteria.begin(), info->criteria.end(), k) != info->criteria.end())
        detail::check_criterion(c, k, v, "criteria." + k);
  }

  // Families that must be periodic with period 1.
  if (info && config.contains("family") && config["family"].is_object()) {
    const json& f = config["family"];
    const bool needs_unit_period = info->name == "fm-coefficients" || info->name == "stroboscopic" ||
                                   info->name == "effective-group";
    const bool periodic = f.contains("period") && f["period"].is_number();
    if (needs_unit_period && (!periodic || f["period"].get<double>() != 1.0))
      c.add("family.period", "this experiment needs period 1");
  }
  return c.violations;
}

/// Reads and parses a config file; unreadable or malformed JSON is an error.
inline json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::config_invalid, "cannot read config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw error(errc::config_invalid, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline std::vector<std::string> validate_config(const std::filesystem::path& path) {
  return validate_config(load_config(path));
}

// ---------------------------------------------------------------------------
// Running

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<unsigned> workers;
};

struct CriterionResult {
  std::string name;
  bool pass = false;
  json detail;
};

struct Report {
  std::string experiment;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  json summary;
  bool pass = true;
  std::filesystem::path out_dir;
};

namespace detail {

struct Context {
  json config;
  json params;
  json criteria;
  ModelPtr model;
  std::optional<HamiltonianFamily> family;
  std::optional<ScaleVector> state;
  unsigned workers = 1;
  std::uint64_t seed = 0;
};

struct Outcome {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  json slopes = json::object();
  json constants = json::object();
  json oracle = json::object();
  std::vector<CriterionResult> criteria;
};

inline HamiltonianFamily family_from(const json& f, ModelPtr model, const std::string& kind) {
  std::vector<FamilyTerm> terms;
  for (const auto& t : f["terms"])
    terms.push_back({t["name"].get<std::string>(),
                     make_coefficient(t["coefficient"].get<std::string>(), t.value("amplitude", 1.0))});
  std::optional<double> period;
  if (f.contains("period") && f["period"].is_number()) period = f["period"].get<double>();
  return assemble_family(std::move(model), std::move(terms), period, f.value("loss_order", default_loss_order(kind)));
}

/// Uniform in [-1, 1) from the raw engine output, identical on every platform.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline ScaleVector state_from(const json& st, const ModelPtr& model, std::uint64_t seed) {
  ScaleVector v{model, {}};
  if (st.contains("random_modes")) {
    std::mt19937_64 rng(seed);
    const auto k = st["random_modes"].get<index_t>();
    for (index_t j = 1; j <= k; ++j) {
      const double re = unit_draw(rng), im = unit_draw(rng);
      v.coeffs[j] = cplx(re, im);
    }
  } else {
    const auto labels = st["labels"].get<std::vector<index_t>>();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      cplx a = 1.0;
      if (st.contains("amplitudes")) {
        const json& x = st["amplitudes"][i];
        a = x.is_number() ? cplx(x.get<double>()) : cplx(x[0].get<double>(), x[1].get<double>());
      }
      v.coeffs[model->index_of_label(labels[i])] += a;
    }
  }
  const double n = sobolev_norm(v, 0.0);
  if (!(n > 0.0)) throw error(errc::config_invalid, "state has zero norm");
  v *= 1.0 / n;
  return v;
}

inline std::vector<double> get_list(const json& p, const char* key) { return p[key].get<std::vector<double>>(); }

template <typename T>
T get_or(const json& p, const char* key, T fallback) {
  return p.contains(key) ? p[key].get<T>() : fallback;
}

inline json slope_json(const SlopeFit& f) { return {{"value", f.slope}, {"residual", f.residual}}; }

inline CriterionResult check_monotone(const std::vector<double>& v, const std::string& mode) {
  bool ok = true;
  for (std::size_t i = 1; i < v.size(); ++i)
    ok = ok && (mode == "decreasing" ? v[i] < v[i - 1] : v[i] <= v[i - 1]);
  return {"monotone", ok, {{"mode", mode}}};
}

inline CriterionResult check_max_final(const std::string& name, double value, double limit) {
  return {name, value < limit, {{"value", value}, {"limit", limit}}};
}

inline CriterionResult check_target(const std::string& name, double value, const json& spec) {
  const double target = spec["target"].get<double>(), tol = spec["tolerance"].get<double>();
  return {name, std::abs(value - target) <= tol, {{"value", value}, {"target", target}, {"tolerance", tol}}};
}

/// Shared sweep criteria: final value, monotonicity.
inline void sweep_criteria(Outcome& out, const json& criteria, const std::vector<double>& values,
                           const std::string& label = "") {
  const std::string suffix = label.empty() ? "" : "[" + label + "]";
  if (criteria.contains("max_final")) {
    auto r = check_max_final("max_final", values.back(), criteria["max_final"].get<double>());
    r.name += suffix;
    out.criteria.push_back(r);
  }
  if (criteria.contains("monotone")) {
    auto r = check_monotone(values, criteria["monotone"].get<std::string>());
    r.name += suffix;
    out.criteria.push_back(r);
  }
}

inline SlopeFit fit_against_cutoff(const std::vector<double>& ns, const std::vector<double>& values) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (ns[i] > 0.0) {
      x.push_back(ns[i]);
      y.push_back(values[i]);
    }
  return loglog_slope(x, y, 1e-14);
}

// --- experiments ------------------------------------------------------------

inline Outcome run_cutoff_convergence(const Context& ctx) {
  const json& p = ctx.params;
  const auto ns = get_list(p, "Ns");
  const double n_ref = p["N_ref"].get<double>(), t = p["t"].get<double>(), s = get_or(p, "s", 0.0);
  const double tol = get_or(p, "tol", 1e-10);
  const ConvergenceSweep sweep = convergence_sweep_N(*ctx.family, *ctx.state, s, t, ns, n_ref, tol, ctx.workers);
  Outcome out;
  out.header = {"N", "d_N", "error", "oracle_delta"};
  std::vector<double> errors;
  for (const auto& pt : sweep.points) {
    out.rows.push_back({pt.cutoff, static_cast<double>(pt.dim), pt.error, sweep.oracle_delta});
    errors.push_back(pt.error);
  }
  out.slopes["error_vs_N"] = slope_json(fit_against_cutoff(ns, errors));
  out.constants["min_error"] = *std::min_element(errors.begin(), errors.end());
  out.constants["final_error"] = errors.back();
  out.oracle = {{"N_ref", n_ref}, {"self_check_delta", sweep.oracle_delta}, {"slices", sweep.oracle_slices}};
  sweep_criteria(out, ctx.criteria, errors);
  if (ctx.criteria.contains("max_oracle_delta"))
    out.criteria.push_back(
        check_max_final("max_oracle_delta", sweep.oracle_delta, ctx.criteria["max_oracle_delta"].get<double>()));
  return out;
}

inline Outcome run_slicing_order(const Context& ctx) {
  const json& p = ctx.params;
  const double n = p["N"].get<double>(), t = p["t"].get<double>(), s = get_or(p, "s", 0.0);
  const auto ms = p["Ms"].get<std::vector<index_t>>();
  const CutoffSpace space = cutoff_space(ctx.family->model, n);
  const SlicingOrder order = slicing_order_sweep(*ctx.family, space, s, t, ms, std::nullopt, ctx.workers);
  Outcome out;
  out.header = {"M", "error"};
  for (const auto& [m, e] : order.errors) out.rows.push_back({static_cast<double>(m), e});
  out.slopes["error_vs_inverse_M"] = slope_json(order.fit);
  out.constants["degenerate"] = order.fit.degenerate;
  out.constants["d_N"] = space.dim;
  out.oracle = {{"kind", "richardson"}, {"M", 2 * ms.back()}};
  if (ctx.criteria.contains("slope")) {
    auto r = check_target("slope", order.fit.slope, ctx.criteria["slope"]);
    r.pass = r.pass && !order.fit.degenerate;
    out.criteria.push_back(r);
  }
  return out;
}

inline Outcome run_duhamel(const Context& ctx) {
  const json& p = ctx.params;
  const auto ns = get_list(p, "Ns");
  const double n_ref = p["N_ref"].get<double>(), t = p["t"].get<double>(), s = get_or(p, "s", 0.0);
  DuhamelOptions opts;
  opts.tol = get_or(p, "tol", opts.tol);
  opts.quad_tol = get_or(p, "quad_tol", opts.quad_tol);
  const int quad_points = get_or(p, "quad_points", 8);
  const auto results = parallel_map(ns.size(), ctx.workers, [&](std::size_t i) {
    return at_point("N=" + fmt(ns[i]),
                    [&] { return duhamel_bound(*ctx.family, ns[i], n_ref, *ctx.state, s, t, quad_points, opts); });
  });
  Outcome out;
  out.header = {"N", "d_N", "error", "bound", "slack"};
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> errors;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto& r = results[i];
    const double dim = static_cast<double>(cutoff_space(ctx.family->model, ns[i]).dim);
    out.rows.push_back({ns[i], dim, r.error, r.bound, r.bound - r.error});
    worst = std::max(worst, r.error - r.bound);
    errors.push_back(r.error);
  }
  out.slopes["error_vs_N"] = slope_json(fit_against_cutoff(ns, errors));
  out.constants["max_error_minus_bound"] = worst;
  out.oracle = {{"N_ref", n_ref}};
  if (ctx.criteria.contains("bound_margin")) {
    const double margin = ctx.criteria["bound_margin"].get<double>();
    out.criteria.push_back({"bound_margin", worst <= margin, {{"max_error_minus_bound", worst}, {"margin", margin}}});
  }
  return out;
}

inline Outcome run_energy_stability(const Context& ctx) {
  const json& p = ctx.params;
  const auto ns = get_list(p, "Ns");
  const double r = p["r"].get<double>(), t = p["t"].get<double>(), s = get_or(p, "s", 0.0);
  const int grid = get_or(p, "grid_points", 33);
  const double tol = get_or(p, "tol", 1e-11);
  struct Point {
    index_t dim;
    double c;
    EnergyStability e;
  };
  const auto points = parallel_map(ns.size(), ctx.workers, [&](std::size_t i) {
    return at_point("N=" + fmt(ns[i]), [&] {
      const CutoffSpace space = cutoff_space(ctx.family->model, ns[i]);
      const double c = commutator_constant(*ctx.family, space, r, grid, std::min(s, t), std::max(s, t));
      return Point{space.dim, c, energy_stability_check(*ctx.family, space, r, s, t, c, tol)};
    });
  });
  Outcome out;
  out.header = {"N", "d_N", "r", "C", "max_ratio", "operator_ratio", "bound"};
  double worst = 0.0;
  std::vector<double> cs;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto& pt = points[i];
    out.rows.push_back({ns[i], static_cast<double>(pt.dim), r, pt.c, pt.e.max_ratio, pt.e.operator_ratio, pt.e.bound});
    worst = std::max(worst, pt.e.max_ratio / pt.e.bound);
    cs.push_back(pt.c);
  }
  // C(N) is measured, not assumed bounded; growth is reported.
  out.slopes["C_vs_N"] = slope_json(fit_against_cutoff(ns, cs));
  out.constants["max_C"] = *std::max_element(cs.begin(), cs.end());
  out.constants["max_ratio_over_bound"] = worst;
  if (ctx.criteria.contains("bound_factor")) {
    const double f = ctx.criteria["bound_factor"].get<double>();
    out.criteria.push_back({"bound_factor", worst <= 1.0 + f, {{"max_ratio_over_bound", worst}, {"factor", f}}});
  }
  return out;
}

inline Outcome run_word_convergence(const Context& ctx) {
  const json& p = ctx.params;
  const auto ns = get_list(p, "Ns");
  const auto times = get_list(p, "times");
  const ScaleVector exact = word_apply(*ctx.family, times, *ctx.state);
  const auto devs = parallel_map(ns.size(), ctx.workers, [&](std::size_t i) {
    return at_point("N=" + fmt(ns[i]), [&] {
      const CutoffSpace space = cutoff_space(ctx.family->model, ns[i]);
      ScaleVector diff = exact;
      diff -= word_apply(*ctx.family, times, *ctx.state, space);
      return std::make_pair(space.dim, sobolev_norm(diff, 0.0));
    });
  });
  Outcome out;
  out.header = {"N", "d_N", "m", "deviation"};
  std::vector<double> values;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    out.rows.push_back({ns[i], static_cast<double>(devs[i].first), static_cast<double>(times.size()), devs[i].second});
    values.push_back(devs[i].second);
  }
  out.constants["final_deviation"] = values.back();
  out.constants["exact_norm"] = sobolev_norm(exact, 0.0);
  out.oracle = {{"kind", "exact word on finitely supported vector"}};
  sweep_criteria(out, ctx.criteria, values);
  return out;
}

inline Outcome run_fm_coefficients(const Context& ctx) {
  const json& p = ctx.params;
  const auto ns = get_list(p, "Ns");
  const double n_ref = p["N_ref"].get<double>();
  const auto ells = p["ells"].get<std::vector<int>>();
  FmOptions opts;
  opts.quad_tol = get_or(p, "quad_tol", opts.quad_tol);
  Outcome out;
  out.header = {"ell", "N", "d_N", "deviation"};
  for (int ell : ells) {
    const auto pts = at_point("ell=" + std::to_string(ell), [&] {
      return fm_convergence_sweep(*ctx.family, ell, *ctx.state, ns, n_ref, opts, ctx.workers);
    });
    std::vector<double> values;
    for (const auto& pt : pts) {
      out.rows.push_back({static_cast<double>(ell), pt.cutoff, static_cast<double>(pt.dim), pt.deviation});
      values.push_back(pt.deviation);
    }
    out.constants["final_deviation_ell" + std::to_string(ell)] = values.back();
    sweep_criteria(out, ctx.criteria, values, "ell=" + std::to_string(ell));
  }
  out.oracle = {{"N_ref", n_ref}};
  return out;
}

inline Outcome run_stroboscopic(const Context& ctx) {
  const json& p = ctx.params;
  const double n = p["N"].get<double>();
  const auto ls = p["Ls"].get<std::vector<int>>();
  const auto ts = get_list(p, "Ts");
  const auto qs = get_or(p, "qs", std::vector<long>{1});
  const double tol = get_or(p, "tol", 1e-12);
  FmOptions opts;
  opts.quad_tol = get_or(p, "quad_tol", opts.quad_tol);
  const CutoffSpace space = cutoff_space(ctx.family->model, n);
  const FMExpansion expansion = fm_expansion(*ctx.family, space, *std::max_element(ls.begin(), ls.end()), opts);
  const auto monodromies = parallel_map(ts.size(), ctx.workers, [&](std::size_t i) {
    return at_point("T=" + fmt(ts[i]), [&] { return monodromy(*ctx.family, space, ts[i], tol); });
  });

  Outcome out;
  out.header = {"L", "T", "q", "error"};
  std::map<int, std::vector<double>> single;
  double worst_telescoping = 0.0;
  for (int l : ls) {
    FMExpansion truncated = expansion;
    truncated.coefficients.resize(static_cast<std::size_t>(l) + 1);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const Matrix h = truncated.at(ts[i]);
      std::map<long, double> errors;
      for (long q : qs) {
        errors[q] = stroboscopic_error(monodromies[i].monodromy, h, ts[i], q);
        out.rows.push_back({static_cast<double>(l), ts[i], static_cast<double>(q), errors[q]});
      }
      const double e1 = errors.at(1);
      single[l].push_back(e1);
      for (const auto& [q, e] : errors) {
        if (q == 1) continue;
        const double excess = e1 > 0.0 ? e / (static_cast<double>(q) * e1) - 1.0
                                       : (e > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        worst_telescoping = std::max(worst_telescoping, excess);
      }
    }
    out.slopes["L" + std::to_string(l)] = slope_json(loglog_slope(ts, single[l]));
  }
  int ambiguous = 0;
  for (const auto& m : monodromies) ambiguous += m.branch_ambiguous;
  out.constants["d_N"] = space.dim;
  out.constants["branch_ambiguous"] = ambiguous;
  out.constants["max_telescoping_excess"] = worst_telescoping;
  out.oracle = {{"monodromy_tol", tol}};
  if (ctx.criteria.contains("slopes")) {
    for (const auto& spec : ctx.criteria["slopes"]) {
      const int l = spec["L"].get<int>();
      const std::string name = "slope[L=" + std::to_string(l) + "]";
      if (!single.count(l)) {
        out.criteria.push_back({name, false, {{"reason", "order not in Ls"}}});
        continue;
      }
      out.criteria.push_back(check_target(name, loglog_slope(ts, single[l]).slope, spec));
    }
  }
  if (ctx.criteria.contains("telescoping_factor")) {
    const double f = ctx.criteria["telescoping_factor"].get<double>();
    out.criteria.push_back({"telescoping_factor", worst_telescoping <= f,
                            {{"max_excess", worst_telescoping}, {"factor", f}}});
  }
  return out;
}

inline Outcome run_effective_group(const Context& ctx) {
  const json& p = ctx.params;
  const auto ns = get_list(p, "Ns");
  const double n_ref = p["N_ref"].get<double>(), T = p["T"].get<double>(), t = p["t"].get<double>();
  const int l = p["L"].get<int>();
  FmOptions opts;
  opts.quad_tol = get_or(p, "quad_tol", opts.quad_tol);
  const auto pts = effective_group_convergence(*ctx.family, l, T, t, *ctx.state, ns, n_ref, opts, ctx.workers);
  Outcome out;
  out.header = {"N", "d_N", "deviation"};
  std::vector<double> values;
  for (const auto& pt : pts) {
    out.rows.push_back({pt.cutoff, static_cast<double>(pt.dim), pt.deviation});
    values.push_back(pt.deviation);
  }
  out.slopes["deviation_vs_N"] = slope_json(fit_against_cutoff(ns, values));
  out.constants["final_deviation"] = values.back();
  out.oracle = {{"N_ref", n_ref}};
  sweep_criteria(out, ctx.criteria, values);
  return out;
}

inline Outcome run_traces(const Context& ctx) {
  const json& p = ctx.params;
  const auto grid = eps_grid_from(p["eps_grid"]);
  const auto betas = get_or(p, "betas", std::vector<double>{1.0});
  const bool include_log = get_or(p, "include_log", false);
  const int correction_order = get_or(p, "correction_order", 1);
  const SpectralModel& model = *ctx.model;

  std::vector<cplx> values;
  double tail = 0.0;
  for (double e : grid) {
    const HeatTrace h = at_point("eps=" + fmt(e), [&] { return heat_trace(model, std::nullopt, e); });
    values.push_back(h.value);
    tail = std::max(tail, h.tail_bound);
  }
  const TraceFit fit = fit_finite_part(grid, values, betas, include_log, correction_order);
  Outcome out;
  out.header = {"epsilon", "value_re", "value_im", "fitted_re", "fitted_im"};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx f = fit.model_value(grid[i]);
    out.rows.push_back({grid[i], values[i].real(), values[i].imag(), f.real(), f.imag()});
  }
  out.constants["finite_part_re"] = fit.finite_part.real();
  out.constants["finite_part_im"] = fit.finite_part.imag();
  for (std::size_t i = 0; i < betas.size(); ++i)
    out.constants["singular_beta" + format_double(betas[i])] = fit.singular[i].real();
  if (include_log) out.constants["log_coefficient"] = fit.log_coefficient.real();
  out.constants["fit_residual"] = fit.residual;
  out.constants["fit_condition"] = fit.condition;
  out.constants["max_tail_bound"] = tail;

  std::map<double, cplx> zetas;
  if (p.contains("zeta_points") || ctx.criteria.contains("zeta")) {
    std::vector<double> zs = get_or(p, "zeta_points", std::vector<double>{});
    if (ctx.criteria.contains("zeta"))
      for (const auto& spec : ctx.criteria["zeta"]) zs.push_back(spec["z"].get<double>());
    for (double z : zs) {
      const cplx v = at_point("z=" + fmt(z), [&] { return zeta_value(model, {0.0}, z); });
      zetas[z] = v;
      out.constants["zeta_" + format_double(z)] = v.real();
    }
  }
  std::vector<TraceDefect> defects;
  if (p.contains("defect_Ns")) {
    for (double n : get_list(p, "defect_Ns")) {
      const TraceDefect d = trace_defect(cutoff_space(ctx.model, n), unilateral_shift(), shift_adjoint());
      defects.push_back(d);
      out.constants["defect_N" + format_double(n)] = {d.cutoff_of_commutator.real(), d.commutator_of_cutoffs.real()};
    }
  }
  out.oracle = {{"heat_tail_tol", HeatTraceOptions{}.tail_tol}};

  if (ctx.criteria.contains("finite_part"))
    out.criteria.push_back(check_target("finite_part", fit.finite_part.real(), ctx.criteria["finite_part"]));
  if (ctx.criteria.contains("zeta")) {
    for (const auto& spec : ctx.criteria["zeta"]) {
      const double z = spec["z"].get<double>();
      auto r = check_target("zeta[z=" + format_double(z) + "]", zetas[z].real(), spec);
      out.criteria.push_back(r);
    }
  }
  if (ctx.criteria.contains("defect_pair")) {
    const auto want = ctx.criteria["defect_pair"].get<std::vector<double>>();
    bool ok = !defects.empty();
    for (const auto& d : defects)
      ok = ok && d.cutoff_of_commutator == cplx(want[0]) && std::abs(d.commutator_of_cutoffs - want[1]) < 1e-12;
    out.criteria.push_back({"defect_pair", ok, {{"expected", want}, {"points", defects.size()}}});
  }
  return out;
}

inline Outcome run_amplitude(const Context& ctx) {
  const json& p = ctx.params;
  const auto grid = eps_grid_from(p["eps_grid"]);
  AmplitudeOptions opts;
  opts.s = get_or(p, "s", 0.0);
  opts.tol = get_or(p, "tol", opts.tol);
  opts.include_log = get_or(p, "include_log", false);
  opts.correction_order = get_or(p, "correction_order", 1);
  const auto betas = get_or(p, "betas", std::vector<double>{1.0});
  const double n_ref = p["N_ref"].get<double>(), t = p["t"].get<double>();
  const AmplitudeResult r = regularized_amplitude(*ctx.family, n_ref, t, grid, betas, opts);
  Outcome out;
  out.header = {"epsilon", "re", "im", "abs", "bias_bound"};
  bool bounded = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.rows.push_back({grid[i], r.values[i].real(), r.values[i].imag(), std::abs(r.values[i]), r.bias_bounds[i]});
    bounded = bounded && std::abs(r.values[i]) <= r.heat_values[i] * (1.0 + 1e-12);
  }
  out.constants["finite_part_re"] = r.fit.finite_part.real();
  out.constants["finite_part_im"] = r.fit.finite_part.imag();
  out.constants["fit_residual"] = r.fit.residual;
  out.constants["fit_condition"] = r.fit.condition;
  out.constants["max_bias_bound"] = *std::max_element(r.bias_bounds.begin(), r.bias_bounds.end());
  out.oracle = {{"N_ref", n_ref}, {"d_N_ref", r.dim}};
  if (ctx.criteria.contains("finite_part"))
    out.criteria.push_back(check_target("finite_part", r.fit.finite_part.real(), ctx.criteria["finite_part"]));
  if (ctx.criteria.contains("bounded_by_heat") && ctx.criteria["bounded_by_heat"].get<bool>())
    out.criteria.push_back({"bounded_by_heat", bounded, json::object()});
  return out;
}

inline std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + format_double(row[i]);
    text += "\n";
  }
  return text;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::invalid_parameters, "cannot write " + path.string());
  out << text;
}

}  // namespace detail

/// Validates, runs and writes results.csv and summary.json.
inline Report run_experiment(const json& config, const RunOptions& options = {}) {
  const auto violations = validate_config(config);
  if (!violations.empty()) {
    std::string msg = "config has " + std::to_string(violations.size()) + " violation(s)";
    for (const auto& v : violations) msg += "\n  " + v;
    throw error(errc::config_invalid, msg);
  }
  const auto start = std::chrono::steady_clock::now();

  detail::Context ctx;
  ctx.config = config;
  ctx.params = config["params"];
  ctx.criteria = config.value("criteria", json::object());
  const std::string kind = config["model"]["kind"].get<std::string>();
  ctx.model = detail::model_from_kind(kind);
  if (config.contains("family")) ctx.family = detail::family_from(config["family"], ctx.model, kind);
  ctx.seed = config.value("seed", std::uint64_t{0});
  if (config.contains("state")) ctx.state = detail::state_from(config["state"], ctx.model, ctx.seed);
  ctx.workers = options.workers.value_or(config.contains("workers") ? config["workers"].get<unsigned>()
                                                                     : default_workers());

  const std::string name = config["experiment"].get<std::string>();
  static const std::map<std::string, std::function<detail::Outcome(const detail::Context&)>> runners{
      {"cutoff-convergence", detail::run_cutoff_convergence},
      {"slicing-order", detail::run_slicing_order},
      {"duhamel", detail::run_duhamel},
      {"energy-stability", detail::run_energy_stability},
      {"word-convergence", detail::run_word_convergence},
      {"fm-coefficients", detail::run_fm_coefficients},
      {"stroboscopic", detail::run_stroboscopic},
      {"effective-group", detail::run_effective_group},
      {"traces", detail::run_traces},
      {"amplitude", detail::run_amplitude},
  };
  detail::Outcome outcome = runners.at(name)(ctx);

  Report report;
  report.experiment = name;
  report.header = outcome.header;
  report.rows = outcome.rows;
  json criteria = json::object();
  for (const auto& c : outcome.criteria) {
    json entry = c.detail;
    entry["pass"] = c.pass;
    criteria[c.name] = entry;
    report.pass = report.pass && c.pass;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.summary = {{"experiment", name},
                    {"config_hash", config_hash(config)},
                    {"slopes", outcome.slopes},
                    {"constants", outcome.constants},
                    {"criteria", criteria},
                    {"oracle", outcome.oracle},
                    {"pass", report.pass},
                    {"rows", outcome.rows.size()},
                    {"workers", ctx.workers},
                    {"wall_clock_seconds", seconds}};

  report.out_dir = options.out.value_or(config.contains("output_dir")
                                            ? std::filesystem::path(config["output_dir"].get<std::string>())
                                            : std::filesystem::path("results") / name);
  std::filesystem::create_directories(report.out_dir);
  detail::write_file(report.out_dir / "results.csv", detail::csv_text(report.header, report.rows));
  detail::write_file(report.out_dir / "summary.json", report.summary.dump(2) + "\n");
  return report;
}

}  // namespace cutofflab::experiments
