#ifndef DLD_REPORT_HPP
#define DLD_REPORT_HPP

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dld/attacks.hpp"
#include "dld/config.hpp"
#include "dld/harness.hpp"

namespace dld {

using Json = nlohmann::ordered_json;

/// `# key = value` lines carrying the resolved config, its hash and the seed.
inline void write_csv_header(std::ostream& os, const ResolvedConfig& rc) {
  os << "# config_hash = " << config_hash(rc) << "\n";
  for (const auto& [k, v] : config_entries(rc)) os << "# " << k << " = " << v << "\n";
}

inline Json config_json(const ResolvedConfig& rc) {
  Json cfg = Json::object();
  for (const auto& [k, v] : config_entries(rc)) cfg[k] = v;
  return {{"config_hash", config_hash(rc)}, {"root_seed", rc.experiment.root_seed}, {"config", cfg}};
}

// ---------------------------------------------------------------------------
// Matrix results
// ---------------------------------------------------------------------------

/// Rows are tactics, columns are defenses.
inline void write_accuracy_csv(std::ostream& os, const ExperimentResult& r, const ResolvedConfig& rc) {
  write_csv_header(os, rc);
  os << "tactic";
  for (const auto& d : r.defenses) os << ',' << d;
  os << '\n';
  for (std::size_t t = 0; t < r.tactics.size(); ++t) {
    os << r.tactics[t];
    for (std::size_t d = 0; d < r.defenses.size(); ++d) os << ',' << format_double(r.cell(t, d).accuracy);
    os << '\n';
  }
}

/// Long format; only query indices where a cell's ASR changes, plus the
/// first and last index, are written.
inline void write_asr_csv(std::ostream& os, const ExperimentResult& r, const ResolvedConfig& rc) {
  write_csv_header(os, rc);
  os << "tactic,defense,query,asr\n";
  for (const auto& c : r.cells) {
    const auto& curve = c.asr_curve;
    for (std::size_t q = 0; q < curve.size(); ++q) {
      if (q == 0 || q + 1 == curve.size() || curve[q] != curve[q - 1]) {
        os << c.tactic << ',' << c.defense << ',' << q + 1 << ',' << format_double(curve[q]) << '\n';
      }
    }
  }
}

inline void write_reversal_csv(std::ostream& os, const ExperimentResult& r, const ResolvedConfig& rc) {
  write_csv_header(os, rc);
  os << "tactic,defense,mean_queries,mean_reversals,sd_reversals\n";
  for (const auto& c : r.cells) {
    os << c.tactic << ',' << c.defense << ',' << format_double(c.mean_queries) << ','
       << format_double(c.mean_reversals) << ',' << format_double(c.sd_reversals) << '\n';
  }
}

inline Json trace_json(const std::vector<TraceEntry>& trace) {
  Json out = Json::array();
  for (const auto& e : trace) out.push_back({e.query, e.observed, e.accepted, e.best});
  return out;
}

inline Json matrix_json(const ExperimentResult& r, const ResolvedConfig& rc) {
  Json j = config_json(rc);
  j["defenses"] = r.defenses;
  j["tactics"] = r.tactics;
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"tactic", c.tactic},
                     {"defense", c.defense},
                     {"accuracy", c.accuracy},
                     {"mean_queries", c.mean_queries},
                     {"mean_reversals", c.mean_reversals},
                     {"sd_reversals", c.sd_reversals},
                     {"asr_curve", c.asr_curve}});
  }
  j["cells"] = std::move(cells);
  return j;
}

/// One JSON object per line: a config line first, then one line per run.
inline void write_run_records(std::ostream& os, const ExperimentResult& r, const ResolvedConfig& rc) {
  os << config_json(rc).dump() << '\n';
  const std::string hash = config_hash(rc);
  for (const auto& c : r.cells) {
    for (const auto& run : c.runs) {
      Json line{{"config_hash", hash},
                {"seed", rc.experiment.root_seed},
                {"tactic", c.tactic},
                {"defense", c.defense},
                {"sample", run.sample},
                {"label", run.label},
                {"outcome", to_string(run.outcome)},
                {"queries_used", run.queries_used},
                {"reversal_count", run.reversal_count},
                {"success_query", run.success_query ? Json(*run.success_query) : Json(nullptr)},
                {"loss_trace", trace_json(run.trace)}};
      os << line.dump() << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline void write_sweep_csv(std::ostream& os, const SweepSpec& s, const std::vector<ExperimentResult>& results,
                            const ResolvedConfig& rc) {
  write_csv_header(os, rc);
  os << "axis,value,tactic,defense,accuracy\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const auto& c : results[i].cells) {
      os << to_string(s.axis) << ',' << format_double(s.values[i]) << ',' << c.tactic << ',' << c.defense << ','
         << format_double(c.accuracy) << '\n';
    }
  }
}

inline Json sweep_json(const SweepSpec& s, const std::vector<ExperimentResult>& results, const ResolvedConfig& rc) {
  Json j = config_json(rc);
  j["axis"] = std::string(to_string(s.axis));
  Json points = Json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    Json cells = Json::array();
    for (const auto& c : results[i].cells) {
      cells.push_back({{"tactic", c.tactic}, {"defense", c.defense}, {"accuracy", c.accuracy}});
    }
    points.push_back({{"value", s.values[i]}, {"cells", std::move(cells)}});
  }
  j["points"] = std::move(points);
  return j;
}

// ---------------------------------------------------------------------------
// Bound checks
// ---------------------------------------------------------------------------

inline Json bound_checks_json(const std::vector<BoundCheck>& checks, const ResolvedConfig& rc) {
  Json j = config_json(rc);
  Json list = Json::array();
  bool all = true;
  for (const auto& c : checks) {
    Json details = Json::object();
    for (const auto& [k, v] : c.details) details[k] = v;
    list.push_back({{"name", c.name},
                    {"empirical", c.empirical},
                    {"bound", c.bound},
                    {"sigma", c.sigma},
                    {"relation", c.relation},
                    {"trials", c.trials},
                    {"pass", c.pass},
                    {"details", std::move(details)}});
    all = all && c.pass;
  }
  j["bound_checks"] = std::move(list);
  j["pass"] = all;
  return j;
}

inline void write_bound_checks_csv(std::ostream& os, const std::vector<BoundCheck>& checks, const ResolvedConfig& rc) {
  write_csv_header(os, rc);
  os << "name,empirical,bound,sigma,relation,trials,pass\n";
  for (const auto& c : checks) {
    os << c.name << ',' << format_double(c.empirical) << ',' << format_double(c.bound) << ','
       << format_double(c.sigma) << ',' << c.relation << ',' << c.trials << ',' << (c.pass ? "true" : "false") << '\n';
  }
}

}  // namespace dld

#endif  // DLD_REPORT_HPP
