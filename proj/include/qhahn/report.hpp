#pragma once

// Batch driver behind the command-line tool: configuration, the verify /
// cg-table / sweep runs, and their JSON and CSV reports.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qhahn/algebra.hpp"
#include "qhahn/aw3.hpp"
#include "qhahn/cg.hpp"
#include "qhahn/coupling.hpp"
#include "qhahn/errors.hpp"

namespace qhahn::report {

using nlohmann::json;

inline constexpr const char* kSchema = "qhahn.report/1";

/// Malformed or inconsistent configuration; the tool maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct FactorConfig {
  double a2 = 1.0;  // b2 for the second factor
  double a1 = 1.0;  // b1 for the second factor
  double mu = 0.5;
};

struct Tolerances {
  double relation = 1e-9;
  double crossmethod = 1e-8;
  double spectrum = 1e-8;
};

struct Outputs {
  std::string format = "json";
  std::string path;  // empty: standard output
};

struct RunConfig {
  double q = 0.8;
  FactorConfig A{1.0, 1.0, 1.0};
  FactorConfig B{1.0, 1.0, 0.5};
  int dim = 22;
  std::vector<int> sectors;  // empty: every admissible sector 0..dim-2
  Tolerances tolerances;
  Outputs outputs;
  LadderMode mode = LadderMode::automatic;
  int qhahn_max = 12;  // largest sector that gets the 3phi2 audit
};

inline const char* mode_name(LadderMode m) {
  switch (m) {
    case LadderMode::unitary: return "unitary";
    case LadderMode::raw: return "raw";
    case LadderMode::automatic: return "auto";
  }
  return "auto";
}

inline LadderMode parse_mode(const std::string& s) {
  if (s == "auto") return LadderMode::automatic;
  if (s == "unitary") return LadderMode::unitary;
  if (s == "raw") return LadderMode::raw;
  throw ConfigError("mode must be auto, unitary or raw, got '" + s + "'");
}

inline std::vector<int> effective_sectors(const RunConfig& c) {
  if (!c.sectors.empty()) return c.sectors;
  std::vector<int> all;
  for (int N = 0; N <= c.dim - 2; ++N) all.push_back(N);
  return all;
}

inline void validate(const RunConfig& c) {
  try {
    QBase<double> q(c.q);
  } catch (const InvalidBase& e) {
    throw ConfigError(std::string("q: ") + e.what());
  }
  if (c.A.a1 != c.B.a2) {
    std::ostringstream os;
    os.precision(17);
    os << "algebraA.a1 = " << c.A.a1 << " differs from algebraB.b2 = " << c.B.a2
       << "; the addition rule needs the shared parameter a1 = b2";
    throw ConfigError(os.str());
  }
  if (!(c.A.mu > 0) || !(c.B.mu > 0)) throw ConfigError("mu of both factors must be positive");
  if (c.dim < 2) throw ConfigError("dim must be at least 2");
  for (int N : c.sectors) {
    if (N < 0) throw ConfigError("sectors must be nonnegative");
    if (c.dim < N + 2)
      throw ConfigError("dim = " + std::to_string(c.dim) + " is too small for sector " + std::to_string(N) +
                        " (need dim >= max(sectors) + 2)");
  }
  if (!(c.tolerances.relation > 0) || !(c.tolerances.crossmethod > 0) || !(c.tolerances.spectrum > 0))
    throw ConfigError("tolerances must be positive");
  if (c.outputs.format != "json" && c.outputs.format != "csv")
    throw ConfigError("outputs.format must be csv or json, got '" + c.outputs.format + "'");
}

inline json to_json(const RunConfig& c) {
  return json{{"q", c.q},
              {"algebraA", {{"a2", c.A.a2}, {"a1", c.A.a1}, {"mu", c.A.mu}}},
              {"algebraB", {{"b2", c.B.a2}, {"b1", c.B.a1}, {"mu", c.B.mu}}},
              {"dim", c.dim},
              {"sectors", effective_sectors(c)},
              {"mode", mode_name(c.mode)},
              {"qhahn_max", c.qhahn_max},
              {"tolerances",
               {{"relation", c.tolerances.relation},
                {"crossmethod", c.tolerances.crossmethod},
                {"spectrum", c.tolerances.spectrum}}},
              {"outputs", {{"format", c.outputs.format}, {"path", c.outputs.path}}}};
}

/// Fields absent from `j` keep the values already in `base`.
inline RunConfig parse_config(const json& j, RunConfig base = {}) {
  RunConfig c = std::move(base);
  try {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    if (j.contains("q")) c.q = j.at("q").get<double>();
    if (j.contains("algebraA")) {
      const auto& a = j.at("algebraA");
      if (a.contains("a2")) c.A.a2 = a.at("a2").get<double>();
      if (a.contains("a1")) c.A.a1 = a.at("a1").get<double>();
      if (a.contains("mu")) c.A.mu = a.at("mu").get<double>();
    }
    if (j.contains("algebraB")) {
      const auto& b = j.at("algebraB");
      if (b.contains("b2")) c.B.a2 = b.at("b2").get<double>();
      if (b.contains("b1")) c.B.a1 = b.at("b1").get<double>();
      if (b.contains("mu")) c.B.mu = b.at("mu").get<double>();
    }
    if (j.contains("dim")) c.dim = j.at("dim").get<int>();
    if (j.contains("sectors")) c.sectors = j.at("sectors").get<std::vector<int>>();
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("qhahn_max")) c.qhahn_max = j.at("qhahn_max").get<int>();
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      if (t.contains("relation")) c.tolerances.relation = t.at("relation").get<double>();
      if (t.contains("crossmethod")) c.tolerances.crossmethod = t.at("crossmethod").get<double>();
      if (t.contains("spectrum")) c.tolerances.spectrum = t.at("spectrum").get<double>();
    }
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      if (o.contains("format")) c.outputs.format = o.at("format").get<std::string>();
      if (o.contains("path")) c.outputs.path = o.at("path").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// verify

namespace detail {

/// Worst value per gated category, with failures listed individually.
class Gate {
 public:
  void record(const std::string& category, double value, double tolerance, std::optional<int> sector = std::nullopt) {
    const double v = std::isnan(value) ? std::numeric_limits<double>::infinity() : value;
    auto it = worst_.find(category);
    if (it == worst_.end() || v > it->second.first) worst_[category] = {v, tolerance};
    if (!(value <= tolerance)) {
      json f{{"check", category}, {"value", finite_or_null(value)}, {"tolerance", tolerance}};
      if (sector) f["sector"] = *sector;
      failures_.push_back(std::move(f));
    }
  }
  void error(const std::string& category, const std::string& what, std::optional<int> sector = std::nullopt) {
    json f{{"check", category}, {"error", what}};
    if (sector) f["sector"] = *sector;
    failures_.push_back(std::move(f));
  }
  bool pass() const { return failures_.empty(); }
  json worst() const {
    json w = json::object();
    for (const auto& [k, v] : worst_) w[k] = json{{"value", finite_or_null(v.first)}, {"tolerance", v.second}};
    return w;
  }
  const json& failures() const { return failures_; }

 private:
  static json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

  std::map<std::string, std::pair<double, double>> worst_;
  json failures_ = json::array();
};

inline json constants_json(const AWStructure<double>& s) {
  return json{{"p0", s.p0}, {"p1", s.p1}, {"p2", s.p2}, {"t0", s.t0}, {"t1", s.t1}, {"B", s.B},
              {"B_second", s.B_second}, {"C1", s.C1}, {"C2", s.C2}, {"D1", s.D1}, {"D2", s.D2}};
}

inline json representation_json(const LadderRep<double>& rep, Gate& gate, double tol, const std::string& label) {
  const auto rr = relation_residuals(rep);
  const auto Q = casimir_matrix(rep);
  const double value = rep.casimir();
  double diag_dev = 0, offdiag = 0, scale = casimir_scale(rep);
  for (std::size_t i = 0; i + 1 < rep.dim; ++i) {
    diag_dev = std::max(diag_dev, std::abs(Q(i, i) - value) / scale);
    for (std::size_t j = 0; j + 1 < rep.dim; ++j)
      if (i != j) offdiag = std::max(offdiag, std::abs(Q(i, j)) / scale);
  }
  gate.record("representation_relations", rr.max_relative(), tol);
  gate.record("representation_casimir", std::max(diag_dev, offdiag), tol);
  return json{{"label", label},
              {"type", std::string(type_name(classify(rep.spec)))},
              {"unitary", rep.unitary},
              {"relations", {{"raise", rr.raise_rel}, {"lower", rr.lower_rel}, {"bracket", rr.bracket_rel}}},
              {"casimir_value", value},
              {"casimir_diagonal_deviation", diag_dev},
              {"casimir_offdiagonal", offdiag}};
}

inline json qhahn_audit_json(const QHahnAudit<double>& a) {
  json cands = json::array();
  for (const auto& c : a.candidates) {
    cands.push_back(json{{"lower_parameter", lower_parameter_name(c.lower)},
                         {"s_sign", c.s_sign},
                         {"status", c.status},
                         {"max_deviation", c.max_deviation ? json(*c.max_deviation) : json(nullptr)},
                         {"separability", c.separability ? json(*c.separability) : json(nullptr)},
                         {"positive_weights", c.positive_weights},
                         {"matches", c.matches}});
  }
  return json{{"N", a.N}, {"tolerance", a.tolerance}, {"candidates", cands}, {"any_match", a.any_match()}};
}

inline json closed_form_json(const ClosedFormAudit<double>& a) {
  auto fits = [](const std::vector<ScaledFit<double>>& v) {
    json out = json::array();
    for (const auto& f : v)
      out.push_back(json{{"form", f.form},
                         {"scale", std::isfinite(f.scale) ? json(f.scale) : json(nullptr)},
                         {"deviation", std::isfinite(f.deviation) ? json(f.deviation) : json(nullptr)}});
    return out;
  };
  return json{{"W_squared", fits(a.w_squared)},
              {"Z", fits(a.z)},
              {"lambda", {{"printed", a.lambda_printed_deviation}, {"corrected", a.lambda_corrected_deviation}}},
              {"offdiagonal_indices",
               {{"printed", a.side2_printed_deviation ? json(*a.side2_printed_deviation) : json(nullptr)},
                {"corrected", a.side2_corrected_deviation ? json(*a.side2_corrected_deviation) : json(nullptr)}}}};
}

}  // namespace detail

struct VerifyResult {
  json report;
  bool pass = false;
};

inline CoupledRep<double> build_composition(const RunConfig& c) {
  const QBase<double> q(c.q);
  const AlgebraSpec<double> A{c.A.a2, c.A.a1, q};
  const AlgebraSpec<double> B{c.B.a2, c.B.a1, q};
  return couple(build_ladder_rep(A, c.A.mu, static_cast<std::size_t>(c.dim), c.mode),
                build_ladder_rep(B, c.B.mu, static_cast<std::size_t>(c.dim), c.mode));
}

/// Verification suite on one composition. Throws ConfigError for invalid
/// configurations; every numerical problem is recorded in the report.
inline VerifyResult run_verify(const RunConfig& config) {
  validate(config);
  const auto& tol = config.tolerances;
  detail::Gate gate;
  json report{{"schema", kSchema}, {"config", to_json(config)}};

  std::optional<CoupledRep<double>> built;
  try {
    built = build_composition(config);
  } catch (const NonUnitaryRepresentation& e) {
    gate.error("representation", e.what());
    report["pass"] = false;
    report["worst"] = gate.worst();
    report["failures"] = gate.failures();
    return {report, false};
  }
  const CoupledRep<double>& c = *built;

  report["types"] = {{"A", std::string(type_name(classify(c.repA.spec)))},
                     {"B", std::string(type_name(classify(c.repB.spec)))},
                     {"C", std::string(type_name(classify(c.specC)))}};
  report["composed"] = {{"c2", c.specC.a2}, {"c1", c.specC.a1}, {"d", c.d}};
  report["unitary"] = c.unitary();
  report["representations"] = {detail::representation_json(c.repA, gate, tol.relation, "A"),
                               detail::representation_json(c.repB, gate, tol.relation, "B")};

  const bool analytic_spectrum = c.specC.a1 * c.specC.a2 != 0.0;
  const auto expanded = coupled_casimir_factored(c, CasimirGrouping::expanded);
  const auto printed = coupled_casimir_factored(c, CasimirGrouping::printed);

  json sectors = json::array();
  json audit_sectors = json::array();
  for (int N : effective_sectors(config)) {
    json sj{{"N", N}};
    json aj{{"N", N}};
    try {
      const auto rr = coupled_relation_residuals(c, N);
      sj["coupled_relations"] = {{"raise", rr.raise_rel}, {"lower", rr.lower_rel}, {"bracket", rr.bracket_rel}};
      gate.record("coupled_relations", rr.max_relative(), tol.relation, N);

      const double agree = casimir_agreement(c, expanded, N);
      sj["casimir_factored"] = agree;
      gate.record("casimir_factored", agree, tol.relation, N);
      aj["casimir_printed_grouping"] = casimir_agreement(c, printed, N);

      const auto s = sector(c, N);
      const auto ops = build_aw_operators(s);
      const auto st = structure_constants(s);
      const auto res = verify_aw_relations(ops, st);
      sj["aw"] = {{"constants", detail::constants_json(st)},
                  {"relation1", res.relation1},
                  {"relation2", res.relation2},
                  {"bracket31", res.bracket31},
                  {"bracket23", res.bracket23}};
      gate.record("aw_relations", res.max(), tol.relation, N);

      const auto fit = fit_structure_constants(ops, std::optional<AWStructure<double>>(st));
      json dev = json::object();
      for (const auto& d : fit.deviations) dev[d.name] = d.relative;
      const bool audited = !fit.degenerate && fit.residual() <= 1e-10;
      sj["aw_fit"] = {{"residual1", fit.residual1},
                      {"residual2", fit.residual2},
                      {"rank1", fit.rank1},
                      {"rank2", fit.rank2},
                      {"degenerate", fit.degenerate},
                      {"constants", detail::constants_json(fit.fitted)},
                      {"deviations", dev},
                      {"compared", audited}};
      if (audited) gate.record("aw_fit", fit.max_deviation(), tol.crossmethod, N);

      const auto cas = aw_casimir(ops, st, CasimirForm::rebalanced);
      sj["aw_casimir"] = {{"centrality", cas.centrality}, {"scalar_deviation", cas.scalar_deviation}};
      gate.record("aw_casimir", cas.max_centrality(), tol.relation, N);
      const auto cas_printed = aw_casimir(ops, st, CasimirForm::printed);
      aj["aw_casimir_printed"] = {{"centrality", cas_printed.centrality},
                                  {"scalar_deviation", cas_printed.scalar_deviation}};

      if (s.unitary) {
        const auto diag = cg_by_diagonalization(s);
        const auto recur = cg_by_recurrence(s);
        if (analytic_spectrum) {
          auto target = coupled_eigenvalues(s);
          std::sort(target.begin(), target.end());
          auto got = diag.eigenvalues;
          std::sort(got.begin(), got.end());
          double scale = 0, dev_spec = 0;
          for (double t : target) scale = std::max(scale, std::abs(t));
          for (std::size_t i = 0; i < got.size(); ++i) dev_spec = std::max(dev_spec, std::abs(got[i] - target[i]) / scale);
          sj["spectrum"] = dev_spec;
          gate.record("spectrum", dev_spec, tol.spectrum, N);
        }
        const double cross = max_entry_deviation(diag, recur);
        const double orth = std::max(orthogonality_check(diag), orthogonality_check(recur));
        sj["cg"] = {{"labeling", labeling_name(diag.labeling)},
                    {"crossmethod", cross},
                    {"orthogonality", orth}};
        gate.record("cg_crossmethod", cross, tol.crossmethod, N);
        gate.record("cg_orthogonality", orth, tol.relation, N);
        if (N <= config.qhahn_max) aj["qhahn"] = detail::qhahn_audit_json(qhahn_audit(s, recur));
        aj["closed_forms"] = detail::closed_form_json(closed_form_audit(s));
      }
    } catch (const Error& e) {
      sj["error"] = e.what();
      gate.error("sector", e.what(), N);
    }
    sectors.push_back(std::move(sj));
    audit_sectors.push_back(std::move(aj));
  }

  report["sectors"] = std::move(sectors);
  report["audit"] = {{"identification", "alpha = mu_a, beta = mu_b"},
                     {"casimir_grouping",
                      "casimir_factored uses {hopping + p2 term} q^Delta + Q_B q^{2A0} + Q_A q^{-2B0}; "
                      "casimir_printed_grouping multiplies all five terms by q^Delta"},
                     {"aw_casimir",
                      "aw_casimir uses halved C1 and D terms; aw_casimir_printed uses the full weights"},
                     {"sectors", std::move(audit_sectors)}};
  report["worst"] = gate.worst();
  report["failures"] = gate.failures();
  report["pass"] = gate.pass();
  return {report, gate.pass()};
}

// ---------------------------------------------------------------------------
// cg-table

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CGTableResult {
  json metadata;
  json rows;  // array of row objects
  bool pass = false;
  std::string csv() const {
    std::ostringstream os;
    for (const auto& [k, v] : metadata.items()) os << "# " << k << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    os << "n,x,eigenvalue,C_diag,C_recur,C_qhahn,abs_diag_recur,abs_diag_qhahn\n";
    for (const auto& r : rows) {
      auto cell = [](const json& v) { return v.is_null() ? std::string("nan") : format_real(v.get<double>()); };
      os << r.at("n").get<int>() << ',' << r.at("x").get<int>() << ',' << cell(r.at("eigenvalue")) << ','
         << cell(r.at("C_diag")) << ',' << cell(r.at("C_recur")) << ',' << cell(r.at("C_qhahn")) << ','
         << cell(r.at("abs_diag_recur")) << ',' << cell(r.at("abs_diag_qhahn")) << '\n';
    }
    return os.str();
  }
  json to_json() const { return json{{"schema", kSchema}, {"metadata", metadata}, {"rows", rows}, {"pass", pass}}; }
};

/// Overlap table on sector N by all three routes. Throws RequiresUnitary for
/// raw-mode compositions. The 3phi2 column uses the candidate closest to the
/// recurrence table; its disagreement does not fail the run.
inline CGTableResult run_cg_table(const RunConfig& config, int N) {
  validate(config);
  if (N < 0 || config.dim < N + 2)
    throw ConfigError("sector N = " + std::to_string(N) + " needs dim >= N + 2 (dim = " + std::to_string(config.dim) + ")");
  const auto c = build_composition(config);
  const auto s = sector(c, N);
  const auto diag = cg_by_diagonalization(s);
  const auto recur = cg_by_recurrence(s);

  std::optional<CGTable<double>> best;
  std::string best_name = "none";
  double best_dev = std::numeric_limits<double>::infinity();
  for (const auto lower : {LowerParameter::rq, LowerParameter::rq2})
    for (const int sign : {1, -1}) {
      const auto p = make_qhahn_params(s, sign);
      if (!p.defined) continue;
      try {
        auto t = cg_by_qhahn(s, p, lower);
        const double dev = max_entry_deviation(t, recur);
        if (dev < best_dev) {
          best_dev = dev;
          best = std::move(t);
          best_name = std::string("lower ") + lower_parameter_name(lower) + ", s sign " + (sign > 0 ? "+" : "-");
        }
      } catch (const Error&) {
      }
    }

  CGTableResult out;
  const double cross = max_entry_deviation(diag, recur);
  out.pass = cross <= config.tolerances.crossmethod;
  out.metadata = json{{"schema", kSchema},
                      {"q", c.q().value()},
                      {"algebraA", json{{"a2", c.repA.spec.a2}, {"a1", c.repA.spec.a1}, {"mu", c.repA.mu}}},
                      {"algebraB", json{{"b2", c.repB.spec.a2}, {"b1", c.repB.spec.a1}, {"mu", c.repB.mu}}},
                      {"N", N},
                      {"labeling", labeling_name(diag.labeling)},
                      {"qhahn_candidate", best_name},
                      {"max_abs_diag_recur", cross},
                      {"max_abs_diag_qhahn", best ? json(best_dev) : json(nullptr)},
                      {"tolerance", config.tolerances.crossmethod}};
  out.rows = json::array();
  for (int n = 0; n <= N; ++n)
    for (int x = 0; x <= N; ++x) {
      const double d = diag.coeffs(n, x);
      const double r = recur.coeffs(n, x);
      json row{{"n", n}, {"x", x}, {"eigenvalue", diag.eigenvalues[x]}, {"C_diag", d}, {"C_recur", r},
               {"abs_diag_recur", std::abs(d - r)}};
      if (best) {
        row["C_qhahn"] = best->coeffs(n, x);
        row["abs_diag_qhahn"] = std::abs(d - best->coeffs(n, x));
      } else {
        row["C_qhahn"] = nullptr;
        row["abs_diag_qhahn"] = nullptr;
      }
      out.rows.push_back(std::move(row));
    }
  return out;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepGrid {
  std::vector<double> q_values{0.5, 0.8, 1.25, 2.0};
  std::vector<double> mu_values{0.3, 0.5, 1.0, 1.7};
  std::vector<std::string> compositions{"sl+sl", "mixed", "eu+ + eu-", "eu- + eu+"};
  int dim = 22;
  int max_sector = 20;
  int qhahn_max = 12;
  Tolerances tolerances;
};

inline const std::vector<std::string>& known_compositions() {
  static const std::vector<std::string> names{"sl+sl", "mixed", "eu+ + eu-", "eu- + eu+"};
  return names;
}

/// Factor parameters of a named composition at base q, chosen so that both
/// factors are unitary where the type allows it.
inline std::pair<FactorConfig, FactorConfig> composition_factors(const std::string& name, double q) {
  const bool below = q < 1.0;
  if (name == "sl+sl") return {{1.0, 1.0, 0}, {1.0, 1.0, 0}};
  if (name == "mixed") return below ? std::pair<FactorConfig, FactorConfig>{{2.0, 0.7, 0}, {0.7, -1.3, 0}}
                                    : std::pair<FactorConfig, FactorConfig>{{-1.3, 0.7, 0}, {0.7, 2.0, 0}};
  if (name == "eu+ + eu-") return below ? std::pair<FactorConfig, FactorConfig>{{1.0, 0.0, 0}, {0.0, -1.0, 0}}
                                        : std::pair<FactorConfig, FactorConfig>{{-1.0, 0.0, 0}, {0.0, 1.0, 0}};
  if (name == "eu- + eu+") return {{0.0, 1.0, 0}, {1.0, 0.0, 0}};
  throw ConfigError("unknown composition '" + name + "'");
}

inline SweepGrid parse_grid(const json& j, SweepGrid g = {}) {
  try {
    if (!j.is_object()) throw ConfigError("sweep configuration must be a JSON object");
    if (j.contains("q_values")) g.q_values = j.at("q_values").get<std::vector<double>>();
    if (j.contains("mu_values")) g.mu_values = j.at("mu_values").get<std::vector<double>>();
    if (j.contains("compositions")) g.compositions = j.at("compositions").get<std::vector<std::string>>();
    if (j.contains("dim")) g.dim = j.at("dim").get<int>();
    if (j.contains("max_sector")) g.max_sector = j.at("max_sector").get<int>();
    if (j.contains("qhahn_max")) g.qhahn_max = j.at("qhahn_max").get<int>();
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      if (t.contains("relation")) g.tolerances.relation = t.at("relation").get<double>();
      if (t.contains("crossmethod")) g.tolerances.crossmethod = t.at("crossmethod").get<double>();
      if (t.contains("spectrum")) g.tolerances.spectrum = t.at("spectrum").get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sweep configuration: ") + e.what());
  }
  if (g.q_values.empty() || g.mu_values.empty() || g.compositions.empty())
    throw ConfigError("sweep grid has an empty axis");
  for (const auto& name : g.compositions) (void)composition_factors(name, 0.5);
  if (g.dim < g.max_sector + 2)
    throw ConfigError("dim = " + std::to_string(g.dim) + " is too small for max_sector = " + std::to_string(g.max_sector));
  return g;
}

inline json to_json(const SweepGrid& g) {
  return json{{"q_values", g.q_values},
              {"mu_values", g.mu_values},
              {"compositions", g.compositions},
              {"dim", g.dim},
              {"max_sector", g.max_sector},
              {"qhahn_max", g.qhahn_max},
              {"tolerances",
               {{"relation", g.tolerances.relation},
                {"crossmethod", g.tolerances.crossmethod},
                {"spectrum", g.tolerances.spectrum}}}};
}

struct SweepCell {
  std::string composition;
  double q = 0, mu_a = 0, mu_b = 0;
  RunConfig config;
};

/// Cells in a fixed order: composition, q, mu_a, mu_b.
inline std::vector<SweepCell> grid_cells(const SweepGrid& g) {
  std::vector<SweepCell> cells;
  for (const auto& name : g.compositions)
    for (double q : g.q_values)
      for (double mu_a : g.mu_values)
        for (double mu_b : g.mu_values) {
          auto [A, B] = composition_factors(name, q);
          A.mu = mu_a;
          B.mu = mu_b;
          RunConfig c;
          c.q = q;
          c.A = A;
          c.B = B;
          c.dim = g.dim;
          c.sectors.clear();
          for (int N = 0; N <= g.max_sector; ++N) c.sectors.push_back(N);
          c.tolerances = g.tolerances;
          c.qhahn_max = g.qhahn_max;
          cells.push_back({name, q, mu_a, mu_b, c});
        }
  return cells;
}

/// Worker count from QHAHN_THREADS, else the number of logical cores.
inline unsigned worker_count() {
  if (const char* env = std::getenv("QHAHN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

struct SweepResult {
  json report;
  bool pass = false;
};

/// Runs every cell through run_verify on a worker pool. Results are stored by
/// cell index, so the report does not depend on scheduling.
inline SweepResult run_sweep(const SweepGrid& grid, unsigned threads) {
  const auto cells = grid_cells(grid);
  std::vector<VerifyResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        results[i] = run_verify(cells[i].config);
      } catch (const Error& e) {
        results[i] = {json{{"schema", kSchema}, {"error", e.what()}, {"pass", false}}, false};
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }

  json cell_reports = json::array();
  json failed = json::array();
  std::map<std::string, std::pair<double, std::string>> worst;
  std::size_t passed = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    std::ostringstream id;
    id.precision(17);
    id << cell.composition << " q=" << cell.q << " mu_a=" << cell.mu_a << " mu_b=" << cell.mu_b;
    if (results[i].pass)
      ++passed;
    else
      failed.push_back(id.str());
    if (results[i].report.contains("worst"))
      for (const auto& [k, v] : results[i].report.at("worst").items()) {
        const double val = v.at("value").is_null() ? std::numeric_limits<double>::infinity() : v.at("value").get<double>();
        auto it = worst.find(k);
        if (it == worst.end() || val > it->second.first) worst[k] = {val, id.str()};
      }
    cell_reports.push_back(json{{"id", id.str()},
                                {"composition", cell.composition},
                                {"q", cell.q},
                                {"mu_a", cell.mu_a},
                                {"mu_b", cell.mu_b},
                                {"pass", results[i].pass},
                                {"report", results[i].report}});
  }
  json worst_json = json::object();
  for (const auto& [k, v] : worst)
    worst_json[k] = {{"value", std::isfinite(v.first) ? json(v.first) : json(nullptr)}, {"cell", v.second}};

  const bool pass = passed == cells.size();
  json report{{"schema", kSchema},
              {"grid", to_json(grid)},
              {"summary", {{"cells", cells.size()}, {"passed", passed}, {"failed", failed}, {"worst", worst_json}}},
              {"cells", std::move(cell_reports)},
              {"pass", pass}};
  return {std::move(report), pass};
}

}  // namespace qhahn::report
