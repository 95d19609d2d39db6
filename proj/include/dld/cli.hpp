#ifndef DLD_CLI_HPP
#define DLD_CLI_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dld/config.hpp"
#include "dld/harness.hpp"
#include "dld/report.hpp"
#include "dld/rng.hpp"

namespace dld {

enum CheckStreamTag : std::uint64_t { kCheckStream = 4 };

// ---------------------------------------------------------------------------
// Bound checks driven by config
// ---------------------------------------------------------------------------

/// Runs every configured check. Each check draws from its own stream keyed by
/// its position, so adding a check does not perturb the others.
/// `bypass_runs`, when given, collects a few bypass-attack runs for export.
inline std::vector<BoundCheck> run_checks(const ResolvedConfig& rc, unsigned threads,
                                          std::vector<AttackRun>* bypass_runs = nullptr) {
  std::vector<BoundCheck> out;
  for (std::size_t i = 0; i < rc.checks.size(); ++i) {
    CheckSpec c = rc.checks[i];
    c.landscape.threads = threads;
    Rng rng = Rng::derive(rc.experiment.root_seed, {kCheckStream, i});
    switch (c.kind) {
      case CheckKind::Theorem1: {
        BoundCheck b = verify_theorem1(c.landscape, rng);
        b.name = c.name;
        out.push_back(std::move(b));
        break;
      }
      case CheckKind::Theorem2: {
        BoundCheck b = verify_theorem2(c.landscape, c.threshold, rng);
        b.name = c.name;
        out.push_back(std::move(b));
        break;
      }
      case CheckKind::BypassProbes: {
        const auto s = expected_bypass_probes(c.landscape.p, c.landscape.trials, rng, c.landscape.tau, c.landscape.h);
        BoundCheck b;
        b.name = c.name;
        b.relation = "within";
        b.empirical = s.mean;
        b.sigma = s.stderr_;
        b.bound = expected_probes_formula(c.landscape.p);
        b.trials = c.landscape.trials;
        b.details = {{"p", c.landscape.p}, {"exact_expectation", exact_expected_probes(c.landscape.p)}};
        evaluate(b);
        out.push_back(std::move(b));
        break;
      }
      case CheckKind::BypassAttack: {
        const BypassAttackSpec spec{c.landscape, c.budget_factor, c.max_probes};
        BypassAttackResult r = run_bypass_experiment(spec, rng, bypass_runs ? 20 : 0);
        const std::size_t n = c.landscape.trials;
        const std::vector<std::pair<std::string, double>> details{
            {"undefended_queries", static_cast<double>(r.undefended_queries)},
            {"budget", static_cast<double>(r.budget)},
            {"mean_bypass_queries", r.mean_bypass_queries},
            {"deterministic_dld_bypass_success", r.deterministic_bypass_success},
            {"l0", c.landscape.l0},
            {"p", c.landscape.p}};
        BoundCheck by;
        by.name = c.name + ".bypass_success";
        by.relation = "gt";
        by.empirical = r.bypass_success;
        by.bound = 0.95;
        by.trials = n;
        by.details = details;
        evaluate(by);
        BoundCheck st;
        st.name = c.name + ".standard_success";
        st.relation = "le";
        st.empirical = r.standard_success;
        st.bound = theorem1_bound(c.landscape.tau, c.landscape.p, c.landscape.eps);
        st.sigma = std::sqrt(st.bound * (1.0 - st.bound) / static_cast<double>(n));
        st.trials = n;
        st.details = details;
        evaluate(st);
        out.push_back(std::move(by));
        out.push_back(std::move(st));
        if (bypass_runs) {
          for (auto& run : r.sample_runs) bypass_runs->push_back(std::move(run));
        }
        break;
      }
      case CheckKind::BranchProportion: {
        for (std::size_t k = 0; k < c.ratios.size(); ++k) {
          DldParams params;
          params.tau = c.landscape.tau;
          params.h = c.landscape.h;
          params.s = build_interval_set(c.step, c.ratios[k]);
          Rng sub = Rng::derive(rc.experiment.root_seed, {kCheckStream, i, k});
          BoundCheck b;
          b.name = c.name + ".ratio=" + format_double(c.ratios[k]);
          b.relation = "within";
          b.empirical = branch_proportion(params, c.samples, c.periods, sub);
          b.bound = params.s.measure();
          b.sigma = std::sqrt(b.bound * (1.0 - b.bound) / static_cast<double>(c.samples));
          b.trials = c.samples;
          b.details = {{"step", c.step}, {"ratio", c.ratios[k]}};
          evaluate(b);
          out.push_back(std::move(b));
        }
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary tables
// ---------------------------------------------------------------------------

inline void print_matrix(std::ostream& os, const ExperimentResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "tactic");
  os << buf;
  for (const auto& d : r.defenses) {
    std::snprintf(buf, sizeof buf, " %11s", d.c_str());
    os << buf;
  }
  os << '\n';
  for (std::size_t t = 0; t < r.tactics.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%-10s", r.tactics[t].c_str());
    os << buf;
    for (std::size_t d = 0; d < r.defenses.size(); ++d) {
      std::snprintf(buf, sizeof buf, " %10.1f%%", 100.0 * r.cell(t, d).accuracy);
      os << buf;
    }
    os << '\n';
  }
}

inline void print_checks(std::ostream& os, const std::vector<BoundCheck>& checks) {
  char buf[256];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%-4s %-28s empirical=%-12.6g bound=%-12.6g sigma=%-10.3g (%s)\n",
                  c.pass ? "PASS" : "FAIL", c.name.c_str(), c.empirical, c.bound, c.sigma, c.relation.c_str());
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

struct CliConfig {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir = ".";
  std::string format = "csv";
  unsigned threads = 1;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  return os;
}

inline void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream os = open_output(p);
  body(os);
  os.flush();
  if (!os) throw IoError("failed writing '" + p.string() + "'");
}

inline int run_subcommand(const CliConfig& cli, std::ostream& out) {
  ResolvedConfig rc = load_config(cli.config_path);
  if (cli.seed) rc.experiment.root_seed = *cli.seed;
  rc.experiment.threads = cli.threads;
  const std::filesystem::path dir(cli.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + cli.output_dir + "'");
  const bool json = cli.format == "json";

  if (cli.subcommand == "run") {
    const ExperimentResult r = run_matrix(rc.experiment);
    if (json) {
      write_file(dir / "result.json", [&](std::ostream& os) { os << matrix_json(r, rc).dump(2) << '\n'; });
    } else {
      write_file(dir / "accuracy.csv", [&](std::ostream& os) { write_accuracy_csv(os, r, rc); });
      write_file(dir / "asr_curves.csv", [&](std::ostream& os) { write_asr_csv(os, r, rc); });
      write_file(dir / "reversals.csv", [&](std::ostream& os) { write_reversal_csv(os, r, rc); });
    }
    write_file(dir / "runs.jsonl", [&](std::ostream& os) { write_run_records(os, r, rc); });
    out << "under-attack accuracy (seed " << rc.experiment.root_seed << ")\n";
    print_matrix(out, r);
    return 0;
  }

  if (cli.subcommand == "sweep") {
    if (!rc.sweep) throw ConfigError("field 'sweep.axis' is required for the sweep subcommand");
    const auto results = sweep(rc.experiment, rc.sweep->axis, rc.sweep->values);
    if (json) {
      write_file(dir / "sweep.json", [&](std::ostream& os) { os << sweep_json(*rc.sweep, results, rc).dump(2) << '\n'; });
    } else {
      write_file(dir / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, *rc.sweep, results, rc); });
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      out << to_string(rc.sweep->axis) << " = " << format_double(rc.sweep->values[i]) << '\n';
      print_matrix(out, results[i]);
    }
    return 0;
  }

  const bool demo = cli.subcommand == "bypass-demo";
  if (rc.checks.empty()) throw ConfigError("field 'checks' is required for the " + cli.subcommand + " subcommand");
  if (demo) {
    for (const auto& c : rc.checks) {
      if (c.kind != CheckKind::BypassProbes && c.kind != CheckKind::BypassAttack) {
        throw ConfigError("field 'check." + c.name + ".kind': bypass-demo only runs bypass-probes and bypass-attack");
      }
    }
  }
  std::vector<AttackRun> runs;
  const auto checks = run_checks(rc, cli.threads, demo ? &runs : nullptr);
  write_file(dir / (demo ? "bypass.json" : "bound_checks.json"),
             [&](std::ostream& os) { os << bound_checks_json(checks, rc).dump(2) << '\n'; });
  if (!json) {
    write_file(dir / (demo ? "bypass.csv" : "bound_checks.csv"),
               [&](std::ostream& os) { write_bound_checks_csv(os, checks, rc); });
  }
  if (demo) {
    write_file(dir / "runs.jsonl", [&](std::ostream& os) {
      os << config_json(rc).dump() << '\n';
      const std::string hash = config_hash(rc);
      for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& r = runs[k];
        Json line{{"config_hash", hash},
                  {"seed", rc.experiment.root_seed},
                  {"trial", k},
                  {"outcome", to_string(r.outcome)},
                  {"queries_used", r.queries_used},
                  {"reversal_count", r.reversal_count},
                  {"success_query", r.success_query ? Json(*r.success_query) : Json(nullptr)},
                  {"loss_trace", trace_json(r.loss_trace)}};
        os << line.dump() << '\n';
      }
    });
  }
  print_checks(out, checks);
  for (const auto& c : checks) {
    if (!c.pass) return 1;
  }
  return 0;
}

}  // namespace detail

/// Parses argv and runs one subcommand. Exit codes: 0 success, 1 a bound
/// check failed, 2 config, usage or IO error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dashed-line defense simulator: score-based attacks against output post-processing defenses"};
  app.require_subcommand(1);
  CliConfig cli;
  for (const char* name : {"run", "sweep", "verify", "bypass-demo"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "Experiment config file")->required();
    sub->add_option("--seed", cli.seed, "Override root_seed");
    sub->add_option("--output", cli.output_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", cli.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--threads", cli.threads, "Worker threads for the harness")
        ->check(CLI::Range(1u, 1024u))
        ->capture_default_str();
    sub->callback([&cli, sub] { cli.subcommand = sub->get_name(); });
  }
  app.get_subcommand("run")->description("Attack x defense accuracy matrix");
  app.get_subcommand("sweep")->description("Accuracy against one DLD parameter");
  app.get_subcommand("verify")->description("Monte-Carlo checks of the analytic bounds");
  app.get_subcommand("bypass-demo")->description("Repeat-query bypass of random-DLD");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    return detail::run_subcommand(cli, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  }
  return 2;
}

}  // namespace dld

#endif  // DLD_CLI_HPP
