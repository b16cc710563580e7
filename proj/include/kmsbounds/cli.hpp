#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmsbounds/bounds.hpp"
#include "kmsbounds/classical_lab.hpp"
#include "kmsbounds/eta_free.hpp"
#include "kmsbounds/quantum_lab.hpp"
#include "kmsbounds/random.hpp"

namespace kmsbounds::cli {

using json = nlohmann::json;

enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailure = 1,
  kExitSchemaError = 2,
  kExitDimensionCap = 3,
  kExitUnsupportedModel = 4,
};

struct schema_error : error {
  using error::error;
};
struct unsupported_model_error : error {
  using error::error;
};

enum class ModelKind { heisenberg, ising_staggered, classical_heisenberg, custom };

inline const std::map<std::string, ModelKind>& model_names() {
  static const std::map<std::string, ModelKind> names{{"heisenberg", ModelKind::heisenberg},
                                                      {"ising_staggered", ModelKind::ising_staggered},
                                                      {"classical_heisenberg", ModelKind::classical_heisenberg},
                                                      {"custom", ModelKind::custom}};
  return names;
}

inline std::string model_name(ModelKind k) {
  for (const auto& [name, kind] : model_names()) {
    if (kind == k) return name;
  }
  return "custom";
}

/// Allowed `params` keys per model.
inline const std::set<std::string>& allowed_params(ModelKind k) {
  static const std::set<std::string> heis{"J", "delta"};
  static const std::set<std::string> ising{"J", "B"};
  static const std::set<std::string> classical{"J", "delta", "psi"};
  static const std::set<std::string> none{};
  switch (k) {
    case ModelKind::heisenberg: return heis;
    case ModelKind::ising_staggered: return ising;
    case ModelKind::classical_heisenberg: return classical;
    case ModelKind::custom: return none;
  }
  return none;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"decompose", "kms",  "dyson", "ks", "lemma1", "classical-invariance",
                                              "all"};
  return names;
}

struct CustomTerm {
  std::vector<Site> sites;
  Matrix matrix;
};

struct Truncation {
  int dyson_order = 3;
  int ks_order = 3;
  int quad_points = 8;
};

struct ModelConfig {
  ModelKind model = ModelKind::heisenberg;
  int nu = 1;
  int two_j = 1;
  std::map<std::string, double> params;
  std::optional<double> beta;
  std::optional<double> eps;  // empty means "auto"
  std::vector<int> extents;
  Truncation truncation;
  std::uint64_t seed = 0;
  std::string suite = "all";
  std::vector<CustomTerm> terms;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  SpinRep rep() const { return SpinRep(two_j); }
  Region window() const {
    std::vector<Site> sites;
    std::vector<int> c(static_cast<std::size_t>(nu), 0);
    while (true) {
      sites.emplace_back(c);
      int k = nu - 1;
      while (k >= 0 && ++c[static_cast<std::size_t>(k)] == extents[static_cast<std::size_t>(k)]) {
        c[static_cast<std::size_t>(k)] = 0;
        --k;
      }
      if (k < 0) break;
    }
    return Region(std::move(sites));
  }
};

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw schema_error("config: " + what); }

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
  }
}

inline int get_int(const json& j, const std::string& what, int lo, int hi) {
  if (!j.is_number_integer()) fail(what + " must be an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > hi) fail(what + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

inline double get_number(const json& j, const std::string& what) {
  if (!j.is_number()) fail(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(what + " must be finite");
  return v;
}

inline std::vector<Site> parse_sites(const json& j, int nu, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + ".sites must be a nonempty array");
  std::vector<Site> out;
  for (const auto& s : j) {
    if (!s.is_array() || static_cast<int>(s.size()) != nu) fail(where + ".sites entries need nu coordinates");
    std::vector<int> c;
    for (const auto& v : s) c.push_back(get_int(v, where + ".sites coordinate", -1000000, 1000000));
    out.emplace_back(std::move(c));
  }
  return out;
}

inline Matrix parse_matrix(const json& re, const json* im, std::size_t dim, const std::string& where) {
  auto rows = [&](const json& m, const std::string& part) {
    if (!m.is_array() || m.size() != dim) fail(where + "." + part + " must have " + std::to_string(dim) + " rows");
    for (const auto& row : m) {
      if (!row.is_array() || row.size() != dim) fail(where + "." + part + " rows must have " + std::to_string(dim) + " entries");
    }
  };
  rows(re, "re");
  if (im) rows(*im, "im");
  Matrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double a = get_number(re[r][c], where + ".re entry");
      const double b = im ? get_number((*im)[r][c], where + ".im entry") : 0.0;
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = complex(a, b);
    }
  }
  return out;
}

}  // namespace detail

/// Validates and converts a config document; unknown keys are rejected.
inline ModelConfig parse_config(const json& doc) {
  using detail::fail;
  if (!doc.is_object()) fail("top level must be an object");
  detail::reject_unknown(doc,
                         {"model", "nu", "two_j", "params", "beta", "eps", "window", "truncation", "seed", "suite",
                          "terms"},
                         "config");
  ModelConfig cfg;
  if (!doc.contains("model") || !doc["model"].is_string()) fail("'model' is required and must be a string");
  const auto it = model_names().find(doc["model"].get<std::string>());
  if (it == model_names().end()) fail("unknown model '" + doc["model"].get<std::string>() + "'");
  cfg.model = it->second;
  if (doc.contains("nu")) cfg.nu = detail::get_int(doc["nu"], "nu", 1, 3);
  if (doc.contains("two_j")) cfg.two_j = detail::get_int(doc["two_j"], "two_j", 1, 64);
  if (doc.contains("params")) {
    const auto& p = doc["params"];
    if (!p.is_object()) fail("params must be an object");
    detail::reject_unknown(p, allowed_params(cfg.model), "params for model " + model_name(cfg.model));
    for (const auto& [key, value] : p.items()) cfg.params[key] = detail::get_number(value, "params." + key);
  }
  if (doc.contains("beta")) {
    const double b = detail::get_number(doc["beta"], "beta");
    if (!(b > 0.0)) fail("beta must be > 0");
    cfg.beta = b;
  }
  if (doc.contains("eps")) {
    const auto& e = doc["eps"];
    if (e.is_string()) {
      if (e.get<std::string>() != "auto") fail("eps must be a positive number or \"auto\"");
    } else {
      const double v = detail::get_number(e, "eps");
      if (!(v > 0.0)) fail("eps must be > 0");
      cfg.eps = v;
    }
  }
  cfg.extents.assign(static_cast<std::size_t>(cfg.nu), 1);
  cfg.extents[0] = 2;
  if (doc.contains("window")) {
    const auto& w = doc["window"];
    if (!w.is_object()) fail("window must be an object");
    detail::reject_unknown(w, {"extents"}, "window");
    if (!w.contains("extents") || !w["extents"].is_array() || static_cast<int>(w["extents"].size()) != cfg.nu) {
      fail("window.extents must be an array of nu integers");
    }
    for (std::size_t k = 0; k < w["extents"].size(); ++k) {
      cfg.extents[k] = detail::get_int(w["extents"][k], "window.extents entry", 1, 64);
    }
  }
  if (doc.contains("truncation")) {
    const auto& t = doc["truncation"];
    if (!t.is_object()) fail("truncation must be an object");
    detail::reject_unknown(t, {"dyson_order", "ks_order", "quad_points"}, "truncation");
    if (t.contains("dyson_order")) cfg.truncation.dyson_order = detail::get_int(t["dyson_order"], "dyson_order", 0, 6);
    if (t.contains("ks_order")) cfg.truncation.ks_order = detail::get_int(t["ks_order"], "ks_order", 1, kMaxKernelOrder);
    if (t.contains("quad_points")) cfg.truncation.quad_points = detail::get_int(t["quad_points"], "quad_points", 1, 32);
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("seed must be a nonnegative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("suite")) {
    if (!doc["suite"].is_string()) fail("suite must be a string");
    cfg.suite = doc["suite"].get<std::string>();
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), cfg.suite) == names.end()) fail("unknown suite '" + cfg.suite + "'");
  }
  if (doc.contains("terms")) {
    if (cfg.model != ModelKind::custom) fail("terms are only allowed for the custom model");
    if (!doc["terms"].is_array()) fail("terms must be an array");
    const int d = cfg.two_j + 1;
    for (std::size_t i = 0; i < doc["terms"].size(); ++i) {
      const auto& t = doc["terms"][i];
      const std::string where = "terms[" + std::to_string(i) + "]";
      if (!t.is_object()) fail(where + " must be an object");
      detail::reject_unknown(t, {"sites", "re", "im"}, where);
      if (!t.contains("re")) fail(where + ".re is required");
      CustomTerm term;
      term.sites = detail::parse_sites(t.contains("sites") ? t["sites"] : json(), cfg.nu, where);
      const Region r(term.sites);
      if (r.size() != term.sites.size()) fail(where + ".sites contains duplicates");
      term.sites = r.sites();
      const auto dim = checked_dimension(d, r.size());
      term.matrix = detail::parse_matrix(t["re"], t.contains("im") ? &t["im"] : nullptr, dim, where);
      cfg.terms.push_back(std::move(term));
    }
  }
  return cfg;
}

inline ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw schema_error("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw schema_error(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

/// Canonical JSON form of a parsed config (defaults made explicit).
inline json to_json(const ModelConfig& cfg) {
  json doc;
  doc["model"] = model_name(cfg.model);
  doc["nu"] = cfg.nu;
  doc["two_j"] = cfg.two_j;
  doc["params"] = json::object();
  for (const auto& [k, v] : cfg.params) doc["params"][k] = v;
  if (cfg.beta) doc["beta"] = *cfg.beta;
  doc["eps"] = cfg.eps ? json(*cfg.eps) : json("auto");
  doc["window"] = {{"extents", cfg.extents}};
  doc["truncation"] = {{"dyson_order", cfg.truncation.dyson_order},
                       {"ks_order", cfg.truncation.ks_order},
                       {"quad_points", cfg.truncation.quad_points}};
  doc["seed"] = cfg.seed;
  doc["suite"] = cfg.suite;
  if (cfg.model == ModelKind::custom) {
    doc["terms"] = json::array();
    for (const auto& t : cfg.terms) {
      json term;
      term["sites"] = json::array();
      for (const auto& s : t.sites) term["sites"].push_back(s.coords);
      json re = json::array(), im = json::array();
      for (Eigen::Index r = 0; r < t.matrix.rows(); ++r) {
        json rr = json::array(), ii = json::array();
        for (Eigen::Index c = 0; c < t.matrix.cols(); ++c) {
          rr.push_back(t.matrix(r, c).real());
          ii.push_back(t.matrix(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
      }
      term["re"] = re;
      term["im"] = im;
      doc["terms"].push_back(term);
    }
  }
  return doc;
}

/// +inf is not representable in JSON; it is emitted as the string "+inf".
inline json beta_json(double beta) { return is_infinite_beta(beta) ? json("+inf") : json(beta); }

inline std::string format_number(double v, int digits = 17) {
  if (is_infinite_beta(v)) return "+inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------- models

/// Quantum interaction family of the config on `window`.
inline InteractionFamily quantum_family(const ModelConfig& cfg, const Region& window) {
  const SpinRep rep = cfg.rep();
  switch (cfg.model) {
    case ModelKind::heisenberg:
      return build_heisenberg(cfg.param("J", 1.0), cfg.param("delta", 1.0), rep, window);
    case ModelKind::ising_staggered:
      return build_ising_staggered(cfg.param("J", 1.0), cfg.param("B", 0.0), rep, window);
    case ModelKind::custom: {
      InteractionFamily fam(rep.dim());
      for (const auto& t : cfg.terms) fam.add(LocalOperator(Region(t.sites), t.matrix, rep.dim()));
      return fam;
    }
    case ModelKind::classical_heisenberg: break;
  }
  throw unsupported_model_error("model " + model_name(cfg.model) + " has no quantum interaction family");
}

inline Region custom_gamma(const ModelConfig& cfg, const InteractionFamily& fam) {
  return cfg.model == ModelKind::custom ? fam.support().unite(cfg.window()) : cfg.window();
}

struct ModelReport {
  BoundReport report;
  std::function<double(double)> beta_of_eps;  // our bound at fixed eps
  json details = json::object();
};

inline ModelReport model_report(const ModelConfig& cfg) {
  ModelReport out;
  const SpinRep rep = cfg.rep();
  const int nu = cfg.nu;
  switch (cfg.model) {
    case ModelKind::heisenberg: {
      const double s = heisenberg_coupling_sum(nu, cfg.param("J", 1.0), cfg.param("delta", 1.0), rep);
      out.report = heisenberg_report(nu, cfg.param("J", 1.0), cfg.param("delta", 1.0), rep);
      out.beta_of_eps = [s](double e) { return s > 0 ? nearest_neighbor_objective(e) / (18.0 * s) : kInfiniteBeta; };
      out.details["coupling_sum"] = s;
      break;
    }
    case ModelKind::ising_staggered: {
      const double j = cfg.param("J", 1.0);
      out.report = ising_staggered_report(nu, j, rep);
      out.beta_of_eps = [j, nu](double e) {
        return j != 0.0 ? nearest_neighbor_objective(e) / (36.0 * nu * std::abs(j)) : kInfiniteBeta;
      };
      out.details["field_independent"] = true;
      break;
    }
    case ModelKind::classical_heisenberg: {
      const double j = cfg.param("J", 1.0), delta = cfg.param("delta", 1.0), psi = cfg.param("psi", 0.0);
      const auto combined = combined_report(nu, j, delta, std::abs(psi));
      out.report = combined.report;
      const auto spec = classical_heisenberg_ti_spec(nu, j, delta, std::abs(psi));
      out.beta_of_eps = [spec](double e) { return beta_u_general(spec, e); };
      out.details["beta_tilde"] = beta_json(combined.beta_tilde);
      out.details["beta_closed_form"] = beta_json(combined.beta_closed);
      out.details["beta_hat"] = beta_json(combined.beta_hat);
      out.details["chain_holds"] = combined.chain_holds;
      out.details["fv_ratio"] = fv_ratio(nu, 0.0);
      break;
    }
    case ModelKind::custom: {
      const auto fam = quantum_family(cfg, cfg.window());
      const auto norms = std::make_shared<NormEvaluator>(fam);
      out.beta_of_eps = [norms](double e) { return beta_u_general(*norms, e); };
      auto& r = out.report;
      r.model_id = "custom";
      if (norms->has_multilocal()) {
        const auto best = optimize_beta(out.beta_of_eps);
        r.eps_star = best.eps_star;
        r.beta_u = best.beta;
      } else {
        r.eps_star = optimize_eps(nearest_neighbor_objective).eps_star;
        r.beta_u = kInfiniteBeta;
      }
      out.details["commuting"] = fam.max_psi_phibar_commutator() < 1e-10;
      r.refresh_ratios();
      break;
    }
  }
  if (cfg.eps) {
    auto& r = out.report;
    r.eps_star = *cfg.eps;
    if (cfg.model == ModelKind::classical_heisenberg) {
      r.comparators["combined"] = {*cfg.eps, out.beta_of_eps(*cfg.eps)};
    } else {
      r.beta_u = out.beta_of_eps(*cfg.eps);
    }
    r.refresh_ratios();
  }
  return out;
}

inline json report_json(const BoundReport& r) {
  json doc;
  doc["model_id"] = r.model_id;
  doc["eps_star"] = r.eps_star;
  doc["beta_u"] = beta_json(r.beta_u);
  doc["comparators"] = json::object();
  for (const auto& [name, c] : r.comparators) {
    doc["comparators"][name] = {{"beta", beta_json(c.beta)}, {"eps_star", c.eps_star}};
  }
  doc["ratios"] = json::object();
  for (const auto& [name, v] : r.ratios) doc["ratios"][name] = v;
  doc["checks"] = json::array();
  return doc;
}

// ---------------------------------------------------------------- checks

struct Check {
  std::string suite;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool upper = true;  // pass when value <= threshold, otherwise value >= threshold
  bool pass = false;
};

inline Check make_check(std::string suite, std::string name, double value, double threshold, bool upper = true) {
  Check c{std::move(suite), std::move(name), value, threshold, upper, false};
  c.pass = std::isfinite(value) && (upper ? value <= threshold : value >= threshold);
  return c;
}

inline json check_json(const Check& c) {
  return {{"suite", c.suite},
          {"name", c.name},
          {"value", c.value},
          {"threshold", c.threshold},
          {"comparison", c.upper ? "<=" : ">="},
          {"pass", c.pass}};
}

// ---------------------------------------------------------------- suites

inline std::vector<Check> suite_decompose(const ModelConfig& cfg, std::uint64_t seed, int draws = 100) {
  const Region lambda = custom_gamma(cfg, quantum_family(cfg, cfg.window()));
  const int d = cfg.rep().dim();
  checked_dimension(d, lambda.size());
  std::mt19937_64 rng(seed);
  double recon = 0.0, eta_free = 0.0, agree = 0.0, bound_excess = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double beta = cfg.beta ? *cfg.beta : (k % 2 == 0 ? 0.3 : 1.0);
    std::map<Site, Matrix> rho;
    for (const auto& x : lambda) {
      rho.emplace(x, gibbs_single_site(LocalOperator(Region::single(x), random_hermitian(d, rng), d), beta));
    }
    const EtaFamily eta(beta, std::move(rho), d);
    const LocalOperator a = random_hermitian(lambda, d, rng);
    const double an = operator_norm(a.matrix());
    const auto rec = decompose_recursive(a, eta);
    const auto mob = decompose_moebius(a, eta);
    recon = std::max(recon, operator_norm(Matrix(rec.sum().matrix() - a.matrix())) / an);
    for (const auto& [x, c] : rec.components) {
      const LocalOperator restricted = c;
      eta_free = std::max(eta_free, eta_free_residual(restricted, x, eta) / std::max(1.0, an));
      agree = std::max(agree, operator_norm(Matrix(c.matrix() - mob.at(x).matrix())));
      const double limit = std::pow(2.0, static_cast<double>(x.size())) * an;
      bound_excess = std::max(bound_excess, operator_norm(c.matrix()) / limit);
    }
  }
  return {make_check("decompose", "reconstruction_relative", recon, 1e-10),
          make_check("decompose", "eta_freeness", eta_free, 1e-10),
          make_check("decompose", "recursive_vs_moebius", agree, 1e-11),
          make_check("decompose", "component_norm_over_bound", bound_excess, 1.0)};
}

inline std::vector<Check> suite_kms(const ModelConfig& cfg, std::uint64_t seed, int draws = 50) {
  const auto fam = quantum_family(cfg, cfg.window());
  const Region gamma = custom_gamma(cfg, fam);
  const int d = cfg.rep().dim();
  const LocalOperator h = hamiltonian(fam, gamma);
  const double hn = operator_norm(h.matrix());
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  int discriminated = 0;
  const double betas[] = {0.5, 1.0, 2.0};
  for (int k = 0; k < draws; ++k) {
    const double beta = cfg.beta ? *cfg.beta : betas[k % 3];
    const LocalOperator a = random_operator(gamma, d, rng);
    const LocalOperator b = random_operator(gamma, d, rng);
    const double scale = operator_norm(a.matrix()) * operator_norm(b.matrix()) * std::exp(2.0 * beta * hn);
    const auto gibbs = DensityState::gibbs(h, beta);
    worst = std::max(worst, kms_residual(gibbs, h, beta, a, b) / scale);
    if (kms_residual(DensityState::tracial(gamma, d), h, beta, a, b) > 1e-3) ++discriminated;
  }
  std::vector<Check> out{make_check("kms", "gibbs_residual_scaled", worst, 1e-9)};
  if (hn > 1e-12) {
    out.push_back(make_check("kms", "mismatched_state_fraction", static_cast<double>(discriminated) / draws, 0.9, false));
  }
  return out;
}

inline std::vector<Check> suite_dyson(const ModelConfig& cfg, std::uint64_t seed) {
  const auto fam = quantum_family(cfg, cfg.window());
  const Region gamma = custom_gamma(cfg, fam);
  const FiniteSystem sys(gamma, fam, cfg.rep(), cfg.beta.value_or(1.0));
  std::mt19937_64 rng(seed);
  const LocalOperator a = random_hermitian(Region::single(gamma.min()), cfg.rep().dim(), rng);
  const LocalOperator h = hamiltonian(sys);
  const int n = cfg.truncation.dyson_order;
  auto err = [&](double t) {
    const auto exact = evolve(a, h, t);
    const auto series = dyson_truncated(a, sys, t, n, cfg.truncation.quad_points);
    return operator_norm(Matrix(exact.matrix() - series.value.matrix()));
  };
  const double e1 = err(0.1), e2 = err(0.05);
  const double threshold = 0.7 * std::pow(2.0, n + 1);
  std::vector<Check> out{make_check("dyson", "error_t0.1", e1, 1.0), make_check("dyson", "error_t0.05", e2, 1.0)};
  if (e1 < 1e-13) {
    out.push_back(make_check("dyson", "error_exact_when_free", e1, 1e-13));
  } else {
    out.push_back(make_check("dyson", "halving_ratio", e1 / std::max(e2, 1e-300), threshold, false));
  }
  return out;
}

inline std::vector<Check> suite_ks(const ModelConfig& cfg, std::uint64_t seed) {
  const auto fam = quantum_family(cfg, cfg.window());
  const Region gamma = custom_gamma(cfg, fam);
  const NormEvaluator norms(fam);
  double beta = cfg.beta.value_or(1.0);
  if (norms.has_multilocal()) {
    beta = optimize_beta([&](double e) { return beta_u_general(norms, e); }).beta / 10.0;
  }
  const FiniteSystem sys(gamma, fam, cfg.rep(), beta);
  const EtaFamily eta = EtaFamily::from_interaction(fam, gamma, beta);
  std::mt19937_64 rng(seed);
  const int d = cfg.rep().dim();
  std::vector<LocalOperator> elems;
  const Region first = Region::single(gamma.min());
  elems.push_back(decompose_recursive(random_hermitian(first, d, rng), eta).at(first));
  if (gamma.size() >= 2) {
    const Region two{gamma[0], gamma[1]};
    elems.push_back(decompose_recursive(random_hermitian(two, d, rng), eta).at(two));
  }
  const auto res = ks_residual(sys, elems, cfg.truncation.ks_order, cfg.truncation.quad_points);
  double final_rel = 0.0, telescoping = 0.0, monotone_violation = 0.0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const double an = operator_norm(elems[i].matrix());
    const auto& r = res[i].residuals;
    final_rel = std::max(final_rel, r.back() / an);
    telescoping = std::max(telescoping, res[i].telescoping_error);
    for (std::size_t k = 1; k < r.size(); ++k) {
      // residuals already at roundoff cannot decrease further
      if (r[k] > r[k - 1] && r[k] > 1e-14 * an) monotone_violation = std::max(monotone_violation, r[k] - r[k - 1]);
    }
  }
  return {make_check("ks", "beta_used", beta, kInfiniteBeta),
          make_check("ks", "final_residual_relative", final_rel, 1e-4),
          make_check("ks", "monotone_violation", monotone_violation, 0.0),
          make_check("ks", "telescoping_error", telescoping, 1e-10)};
}

inline std::vector<Check> suite_lemma1(const ModelConfig& cfg, std::uint64_t seed, int draws = 500) {
  const Region full = cfg.window();
  std::vector<Site> sites(full.begin(), full.begin() + static_cast<long>(std::min<std::size_t>(4, full.size())));
  const Region lattice(sites);
  const std::size_t m = lattice.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double eps_values[] = {0.3, 0.7, 1.5};
  int violations = 0;
  double worst = 0.0;
  for (int k = 0; k < draws; ++k) {
    std::map<Region, double> alpha;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
      if (unit(rng) < 0.5) alpha[lattice.subset(mask)] = unit(rng);
    }
    const std::uint64_t lmask = 1 + static_cast<std::uint64_t>(unit(rng) * static_cast<double>((1ULL << m) - 1));
    const Region lambda = lattice.subset(std::min<std::uint64_t>(lmask, (1ULL << m) - 1));
    const int n = 1 + k % 3;
    const double eps = eps_values[(k / 3) % 3];
    const auto c = lemma1_check(alpha, lambda, n, eps);
    if (c.lhs > c.rhs * (1.0 + 1e-12)) ++violations;
    if (c.rhs > 0) worst = std::max(worst, c.lhs / c.rhs);
  }
  return {make_check("lemma1", "violations", violations, 0.0), make_check("lemma1", "max_lhs_over_rhs", worst, 1.0)};
}

inline std::vector<Check> suite_classical_invariance(const ModelConfig& cfg, std::uint64_t seed, int draws = 20) {
  if (cfg.model != ModelKind::classical_heisenberg) {
    throw unsupported_model_error("suite classical-invariance needs model classical_heisenberg");
  }
  const Region full = cfg.window();
  std::vector<Site> sites(full.begin(), full.begin() + static_cast<long>(std::min<std::size_t>(2, full.size())));
  const Region window(sites);
  const double j = cfg.param("J", 1.0), delta = cfg.param("delta", 1.0), psi = cfg.param("psi", 0.0);
  std::vector<ClassicalPotential> pots;
  if (window.size() == 2 && graph_distance(window[0], window[1]) == 1) {
    pots.push_back(classical_heisenberg_bond(window[0], window[1], j, delta));
  }
  if (psi != 0.0) {
    for (const auto& x : window) pots.push_back(classical_field(x, Vec3::UnitZ(), psi));
  }
  const SphereGrid grid;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double beta = cfg.beta.value_or(0.5);
  double worst = 0.0;
  for (int k = 0; k < draws; ++k) {
    const Rotation r = random_rotation(rng);
    Eigen::Matrix3d c;
    Vec3 b;
    for (int p = 0; p < 3; ++p) {
      b(p) = normal(rng);
      for (int q = 0; q < 3; ++q) c(p, q) = normal(rng);
    }
    ClassicalObservable a;
    a.region = window;
    if (window.size() == 2) {
      a.eval = [c, b](std::span<const Vec3> s) { return s[0].dot(c * s[1]) + b.dot(s[0]); };
    } else {
      a.eval = [c, b](std::span<const Vec3> s) { return s[0].dot(c * s[0]) + b.dot(s[0]); };
    }
    const Site& x = window[static_cast<std::size_t>(k) % window.size()];
    worst = std::max(worst, invariance_residual(window, pots, beta, a, x, r, grid));
  }
  const double one = grid.integrate([](const Vec3&) { return 1.0; });
  const double s3 = grid.integrate([](const Vec3& s) { return s(2); });
  const double s3sq = grid.integrate([](const Vec3& s) { return s(2) * s(2); });
  return {make_check("classical-invariance", "max_residual", worst, 1e-6),
          make_check("classical-invariance", "sphere_mass_error", std::abs(one - 1.0), 1e-12),
          make_check("classical-invariance", "sphere_s3_error", std::abs(s3), 1e-12),
          make_check("classical-invariance", "sphere_s3_squared_error", std::abs(s3sq - 1.0 / 3.0), 1e-10)};
}

inline std::vector<std::string> suites_for(const ModelConfig& cfg, const std::string& suite) {
  const bool classical = cfg.model == ModelKind::classical_heisenberg;
  if (suite == "all") {
    if (classical) return {"lemma1", "classical-invariance"};
    return {"decompose", "kms", "dyson", "ks", "lemma1"};
  }
  const bool quantum_only = suite == "decompose" || suite == "kms" || suite == "dyson" || suite == "ks";
  if (classical && quantum_only) throw unsupported_model_error("suite " + suite + " needs a quantum model");
  if (!classical && suite == "classical-invariance") {
    throw unsupported_model_error("suite classical-invariance needs model classical_heisenberg");
  }
  return {suite};
}

inline std::vector<Check> run_suite(const ModelConfig& cfg, const std::string& suite, std::uint64_t seed) {
  if (suite == "decompose") return suite_decompose(cfg, seed);
  if (suite == "kms") return suite_kms(cfg, seed);
  if (suite == "dyson") return suite_dyson(cfg, seed);
  if (suite == "ks") return suite_ks(cfg, seed);
  if (suite == "lemma1") return suite_lemma1(cfg, seed);
  if (suite == "classical-invariance") return suite_classical_invariance(cfg, seed);
  throw schema_error("unknown suite '" + suite + "'");
}

// ---------------------------------------------------------------- commands

struct Options {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> suite;
  bool paper_table = false;
};

struct CommandResult {
  json doc;
  int exit_code = kExitOk;
};

inline void add_checks(CommandResult& res, const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    res.doc["checks"].push_back(check_json(c));
    if (!c.pass) res.exit_code = kExitVerificationFailure;
  }
}

inline CommandResult cmd_norms(const ModelConfig& cfg) {
  const auto mr = model_report(cfg);
  CommandResult res{report_json(mr.report)};
  const double eps = cfg.eps.value_or(mr.report.eps_star);
  const double zeta = cfg.beta ? 2.0 * *cfg.beta : 0.0;
  json norms;
  norms["eps"] = eps;
  norms["zeta"] = zeta;
  if (cfg.model == ModelKind::custom) {
    const auto fam = quantum_family(cfg, cfg.window());
    const NormEvaluator ne(fam);
    const auto w = [&](double e, double z) { return ne.evaluate({e, z}); };
    norms["phibar_eps"] = w(eps, 0.0).interior;
    norms["phibar_eps_log3"] = w(eps + kLog3, 0.0).interior;
    norms["phibar_eps_zeta"] = w(eps, zeta).interior;
    double psi_sup = 0.0;
    for (const auto& x : fam.support()) psi_sup = std::max(psi_sup, operator_norm(fam.psi(x).matrix()));
    norms["psi_site_sup"] = psi_sup;
    norms["psi_sum"] = psi_norm_sum(fam, fam.support());
  } else {
    TIInteractionSpec spec;
    switch (cfg.model) {
      case ModelKind::heisenberg:
        spec = heisenberg_ti_spec(cfg.nu, cfg.param("J", 1.0), cfg.param("delta", 1.0), cfg.rep());
        break;
      case ModelKind::ising_staggered:
        spec = ising_staggered_ti_spec(cfg.nu, cfg.param("J", 1.0), cfg.param("B", 0.0), cfg.rep());
        break;
      default:
        spec = classical_heisenberg_ti_spec(cfg.nu, cfg.param("J", 1.0), cfg.param("delta", 1.0),
                                            std::abs(cfg.param("psi", 0.0)));
        break;
    }
    norms["phibar_eps"] = norm_eps_zeta(spec, {eps, 0.0});
    norms["phibar_eps_log3"] = norm_eps_zeta(spec, {eps + kLog3, 0.0});
    norms["phibar_eps_zeta"] = norm_eps_zeta(spec, {eps, zeta});
    norms["phibar_log3"] = norm_eps_zeta(spec, {kLog3, 0.0});
    norms["psi_site_sup"] = spec.psi_site_norm;
  }
  res.doc["norms"] = norms;
  return res;
}

inline CommandResult cmd_beta_u(const ModelConfig& cfg) {
  const auto mr = model_report(cfg);
  CommandResult res{report_json(mr.report)};
  res.doc["details"] = mr.details;
  json trace = json::array();
  for (int k = 1; k <= 20; ++k) {
    const double e = k / 10.0;
    trace.push_back({{"eps", e}, {"beta", beta_json(mr.beta_of_eps(e))}});
  }
  res.doc["eps_trace"] = trace;
  return res;
}

struct PaperRow {
  std::string quantity;
  double value;
  double expected;
  double tolerance;
};

inline std::vector<PaperRow> paper_table_rows() {
  const auto opt = optimize_eps(nearest_neighbor_objective);
  const auto heis = heisenberg_report(1, 1.0, 1.0, SpinRep(1));
  const auto ising = ising_staggered_report(1, 1.0, SpinRep(1));
  return {
      {"eps_bar", opt.eps_star, 0.607, 0.002},
      {"objective_peak", opt.value, 0.117, 0.001},
      {"heisenberg_j1/2_ratio", heis.ratios.at("bratteli_robinson_645"), 0.412, 0.005},
      {"heisenberg_j1/2_br_eps_bar", heis.comparators.at("bratteli_robinson_645").eps_star, 0.518, 0.002},
      {"ising_j1/2_ratio", ising.ratios.at("bratteli_robinson_646"), 0.027, 0.003},
      {"ising_j1/2_br_eps_bar", ising.comparators.at("bratteli_robinson_646").eps_star, 0.505, 0.002},
      {"classical_fv_ratio_sup", fv_ratio(1000000, 0.0), 0.022, 0.001},
  };
}

inline CommandResult cmd_compare(const ModelConfig& cfg, const Options& opt) {
  if (cfg.model == ModelKind::custom) throw unsupported_model_error("compare supports heisenberg, ising_staggered and classical_heisenberg");
  const auto mr = model_report(cfg);
  CommandResult res{report_json(mr.report)};
  res.doc["details"] = mr.details;
  if (opt.paper_table) {
    json table = json::array();
    for (const auto& row : paper_table_rows()) {
      const bool pass = std::abs(row.value - row.expected) <= row.tolerance;
      table.push_back({{"quantity", row.quantity},
                       {"value", row.value},
                       {"expected", row.expected},
                       {"tolerance", row.tolerance},
                       {"pass", pass}});
      add_checks(res, {make_check("paper-table", row.quantity, std::abs(row.value - row.expected), row.tolerance)});
    }
    res.doc["paper_table"] = table;
  }
  return res;
}

inline CommandResult cmd_verify(const ModelConfig& cfg, const Options& opt) {
  const auto mr = model_report(cfg);
  CommandResult res{report_json(mr.report)};
  const std::uint64_t seed = opt.seed.value_or(cfg.seed);
  const std::string suite = opt.suite.value_or(cfg.suite);
  res.doc["seed"] = seed;
  res.doc["suite"] = suite;
  for (const auto& s : suites_for(cfg, suite)) add_checks(res, run_suite(cfg, s, seed));
  return res;
}

/// Norms, bounds, comparators (when supported) and every applicable suite.
inline CommandResult cmd_report(const ModelConfig& cfg, const Options& opt) {
  CommandResult res = cmd_beta_u(cfg);
  res.doc["norms"] = cmd_norms(cfg).doc["norms"];
  const std::uint64_t seed = opt.seed.value_or(cfg.seed);
  res.doc["seed"] = seed;
  for (const auto& s : suites_for(cfg, "all")) add_checks(res, run_suite(cfg, s, seed));
  return res;
}

// ---------------------------------------------------------------- output

enum class Format { text, json, csv };

inline std::string render(const json& doc, Format fmt) {
  std::ostringstream os;
  if (fmt == Format::json) {
    os << doc.dump(2) << '\n';
    return os.str();
  }
  // text output is for people; CSV keeps full precision
  const int digits = fmt == Format::csv ? 17 : 8;
  auto val = [digits](const json& v) -> std::string {
    if (v.is_number()) return format_number(v.get<double>(), digits);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  };
  if (fmt == Format::csv) {
    if (doc.contains("checks") && !doc["checks"].empty() && doc["comparators"].empty()) {
      os << "suite,name,value,threshold,comparison,pass\n";
      for (const auto& c : doc["checks"]) {
        os << val(c["suite"]) << ',' << val(c["name"]) << ',' << val(c["value"]) << ',' << val(c["threshold"]) << ','
           << val(c["comparison"]) << ',' << val(c["pass"]) << '\n';
      }
      return os.str();
    }
    os << "model_id,comparator,eps_star,beta,beta_u,ratio\n";
    for (const auto& [name, c] : doc["comparators"].items()) {
      os << val(doc["model_id"]) << ',' << name << ',' << val(c["eps_star"]) << ',' << val(c["beta"]) << ','
         << val(doc["beta_u"]) << ',' << (doc["ratios"].contains(name) ? val(doc["ratios"][name]) : "") << '\n';
    }
    return os.str();
  }
  os << "model_id  " << val(doc["model_id"]) << '\n';
  os << "eps_star  " << val(doc["eps_star"]) << '\n';
  os << "beta_u    " << val(doc["beta_u"]) << '\n';
  for (const auto& [name, c] : doc["comparators"].items()) {
    os << "  " << name << "  beta " << val(c["beta"]) << "  eps_star " << val(c["eps_star"]);
    if (doc["ratios"].contains(name)) os << "  ratio " << val(doc["ratios"][name]);
    os << '\n';
  }
  if (doc.contains("norms")) {
    for (const auto& [k, v] : doc["norms"].items()) os << "norm " << k << "  " << val(v) << '\n';
  }
  if (doc.contains("paper_table")) {
    for (const auto& row : doc["paper_table"]) {
      os << "reference " << val(row["quantity"]) << "  " << val(row["value"]) << "  expected " << val(row["expected"])
         << " +- " << val(row["tolerance"]) << "  " << (row["pass"].get<bool>() ? "ok" : "MISMATCH") << '\n';
    }
  }
  for (const auto& c : doc["checks"]) {
    os << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << val(c["suite"]) << '/' << val(c["name"]) << "  "
       << val(c["value"]) << ' ' << val(c["comparison"]) << ' ' << val(c["threshold"]) << '\n';
  }
  return os.str();
}

/// Runs one command and maps library errors onto the exit-code contract.
inline int run(const std::string& command, const std::string& config_path, const Options& opt, Format fmt,
               std::ostream& out, std::ostream& err) {
  try {
    ModelConfig cfg = load_config(config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    CommandResult res;
    if (command == "norms") {
      res = cmd_norms(cfg);
    } else if (command == "beta-u") {
      res = cmd_beta_u(cfg);
    } else if (command == "compare") {
      res = cmd_compare(cfg, opt);
    } else if (command == "verify") {
      res = cmd_verify(cfg, opt);
    } else if (command == "report") {
      res = cmd_report(cfg, opt);
    } else {
      err << "unknown command '" << command << "'\n";
      return kExitSchemaError;
    }
    out << render(res.doc, fmt);
    return res.exit_code;
  } catch (const dimension_cap_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDimensionCap;
  } catch (const unsupported_model_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnsupportedModel;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSchemaError;
  }
}

}  // namespace kmsbounds::cli
