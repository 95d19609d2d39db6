// Acceptance checks. With no argument every criterion runs; with a number
// only that one does. Each prints one PASS/FAIL line; the exit code is 0 only
// if all selected criteria pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dld/cli.hpp"
#include "dld/dld.hpp"
#include "oracles.hpp"

using namespace dld;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string preset(const char* name) { return std::string(DLD_PRESET_DIR) + "/" + name; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const BoundCheck& find_check(const std::vector<BoundCheck>& cs, const std::string& name) {
  for (const auto& c : cs) {
    if (c.name == name) return c;
  }
  throw ConfigError("no check named " + name);
}

// 1. Map exactness against the long-double reference forms.
Verdict maps_exact() {
  Rng rng(Rng::derive(kDefaultSeed, {1}));
  long double worst = 0;
  for (int set = 0; set < 50; ++set) {
    const double tau = rng.uniform(0.5, 20.0);
    const double h = rng.uniform();
    const double alpha = rng.uniform();
    const int inv_step = 1 + static_cast<int>(rng.uniform_index(50));
    const double ratio = rng.uniform();
    const DldParams p{tau, h, build_interval_set(1.0 / inv_step, ratio)};
    const auto pairs = oracle::stepped_set(inv_step, ratio);
    for (int i = 0; i < 1000; ++i) {
      const double L = rng.uniform(0.0, 5 * tau);
      worst = std::max({worst, oracle::rel_err(dld_map(L, p), oracle::dashed(L, tau, h, pairs)),
                        oracle::rel_err(aaa_linear_map(L, tau), oracle::sawtooth(L, tau)),
                        oracle::rel_err(aaa_sine_map(L, tau, alpha), oracle::sine(L, tau, alpha))});
    }
  }
  return {worst <= 1e-12L, fmt("max relative error %.3Le over 50 x 1000 draws", worst)};
}

// 2. |L - D(L)| <= tau for both DLD variants.
Verdict distortion_bounded() {
  Rng rng(Rng::derive(kDefaultSeed, {2}));
  std::size_t bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const double tau = rng.uniform(0.1, 20.0);
    const double h = rng.uniform();
    const double L = rng.uniform(0.0, 10 * tau);
    const DldParams d{tau, h, build_interval_set(1.0 / (1 + static_cast<double>(rng.uniform_index(50))), rng.uniform())};
    const RandomDldParams r{tau, h, rng.uniform()};
    if (!(std::abs(L - dld_map(L, d)) <= tau)) ++bad;
    if (!(std::abs(L - random_dld_map(L, r, rng)) <= tau)) ++bad;
  }
  return {bad == 0, fmt("%zu violations in 100000 draws per variant", bad)};
}

// 3. Same-interval ordering: low <= high; low-branch L2 is beaten by smaller
// L1; high-branch L2 beats smaller L1.
Verdict ordering() {
  Rng rng(Rng::derive(kDefaultSeed, {3}));
  std::size_t bad = 0, pairs = 0;
  while (pairs < 100000) {
    const double tau = rng.uniform(0.5, 20.0);
    double h = rng.uniform();
    if (h == 0.0) continue;
    const double start = tau * static_cast<double>(rng.uniform_index(5));
    double a = start + tau * rng.uniform();
    double b = start + tau * rng.uniform();
    if (a == b || loss_bias(a, tau) != loss_bias(b, tau)) continue;
    ++pairs;
    if (a > b) std::swap(a, b);
    if (!(loss_low(a, tau, h) <= loss_high(b, tau, h)) || !(loss_low(b, tau, h) <= loss_high(a, tau, h))) ++bad;
    const DldParams p{tau, h, build_interval_set(0.04, rng.uniform())};
    const bool ok = dld_branch(b, p) == Branch::Low ? dld_map(a, p) > dld_map(b, p) : dld_map(a, p) < dld_map(b, p);
    if (!ok) ++bad;
  }
  return {bad == 0, fmt("%zu violations over %zu same-interval pairs", bad, pairs)};
}

// 4. Labels survive post-processing; the clean row of the matrix is untouched.
Verdict labels_preserved() {
  Rng rng(Rng::derive(kDefaultSeed, {4}));
  const std::vector<LossMap> maps{LossMap(DldParams{}), LossMap(AaaLinearParams{}), LossMap(AaaSineParams{})};
  std::size_t flips = 0;
  for (int i = 0; i < 100000; ++i) {
    std::vector<double> v(2 + rng.uniform_index(999));
    const double spread = std::pow(10.0, rng.uniform(-3, 3));
    for (double& x : v) x = rng.uniform(-spread, spread);
    const ScoreVector s(v);
    for (const auto& m : maps) {
      if (!(predicted_label(apply_postprocess(s, m, rng)) == predicted_label(s))) ++flips;
    }
  }
  ResolvedConfig rc = load_config(preset("table1_synthetic.cfg"));
  rc.experiment.tactics = {TacticEntry{}};
  const ExperimentResult r = run_matrix(rc.experiment);
  const double clean = r.cell("none", "none").accuracy;
  bool rows = true;
  for (const char* d : {"dld", "aaa-sine", "aaa-linear"}) rows = rows && r.cell("none", d).accuracy == clean;
  return {flips == 0 && rows && clean == 1.0,
          fmt("%zu label changes; clean %.3f, dld %.3f, aaa-sine %.3f, aaa-linear %.3f", flips, clean,
              r.cell("none", "dld").accuracy, r.cell("none", "aaa-sine").accuracy,
              r.cell("none", "aaa-linear").accuracy)};
}

std::vector<BoundCheck> checks_of(const char* name) { return run_checks(load_config(preset(name)), 1); }

std::string describe(const BoundCheck& c) {
  return fmt("%s %.5g vs %.5g (3 sigma %.3g)", c.name.c_str(), c.empirical, c.bound, 3 * c.sigma);
}

// 5. Standard attack success under random-DLD stays under the bound.
Verdict theorem1() {
  const auto cs = checks_of("theorem1.cfg");
  const auto& a = find_check(cs, "half");
  const auto& b = find_check(cs, "low-p");
  return {a.pass && b.pass && a.trials == 10000 && b.trials == 100000 && a.bound == 0.03125 &&
              std::abs(b.bound - 0.00243) < 1e-12,
          describe(a) + "; " + describe(b)};
}

// 6. Forced-acceptance chain reversals reach the bound.
Verdict theorem2() {
  const auto cs = checks_of("theorem2.cfg");
  const auto& a = find_check(cs, "tau6");
  const auto& b = find_check(cs, "tau12");
  return {a.pass && b.pass && a.bound == 2.0 && b.bound == 5.0, describe(a) + "; " + describe(b)};
}

// 7. Probe count to two distinct outputs, and the bypass-driven attack.
Verdict bypass() {
  const auto cs = checks_of("bypass.cfg");
  const auto& probes = find_check(cs, "probes");
  const auto& by = find_check(cs, "attack.bypass_success");
  const auto& st = find_check(cs, "attack.standard_success");
  const bool probes_ok = std::abs(probes.empirical - 5.0) <= 0.2;
  const bool attack_ok = by.empirical > 0.95 && st.empirical < 0.032;
  double exact = 0;
  for (const auto& [k, v] : probes.details) {
    if (k == "exact_expectation") exact = v;
  }
  return {probes_ok && attack_ok,
          fmt("mean probes %.4f (target 5 +- 0.2, exact expectation of the stopping time %.4f); "
              "bypass success %.4f (> 0.95); standard success %.4f (< 0.032)",
              probes.empirical, exact, by.empirical, st.empirical)};
}

// 8. Share of the rising branch tracks |S|.
Verdict branch() {
  const auto cs = checks_of("branch_proportion.cfg");
  bool ok = cs.size() == 9;
  double worst = 0;
  for (const auto& c : cs) {
    ok = ok && c.pass && c.trials == 100000;
    worst = std::max(worst, std::abs(c.empirical - c.bound) / c.sigma);
  }
  return {ok, fmt("%zu ratios, largest deviation %.2f sigma", cs.size(), worst)};
}

// 9. Table orderings on the synthetic classifier.
Verdict table() {
  const ResolvedConfig rc = load_config(preset("table1_synthetic.cfg"));
  const ExperimentResult r = run_matrix(rc.experiment);
  auto acc = [&](const char* t, const char* d) { return 100.0 * r.cell(t, d).accuracy; };
  auto minimum = [&](const char* d) {
    double m = 100.0;
    for (const char* t : {"standard", "explore", "sa", "reverse"}) m = std::min(m, acc(t, d));
    return m;
  };
  const double undefended = acc("standard", "none");
  const bool setup = rc.experiment.sample_count == 200 && rc.experiment.budget == 2500 && undefended < 20.0;
  const bool a = acc("reverse", "aaa-linear") <= acc("standard", "aaa-linear") - 20.0;
  const bool b = minimum("dld") > minimum("aaa-linear") && minimum("dld") > minimum("aaa-sine");
  const bool c = std::abs(minimum("dld") - minimum("random-dld")) <= 5.0;
  bool d = true;
  for (const char* def : {"rnd-1", "rnd-2", "aaa-sine", "aaa-linear", "random-dld", "dld"}) {
    d = d && minimum(def) > undefended;
  }
  return {setup && a && b && c && d,
          fmt("undefended %.1f; (a) aaa-linear %.1f -> %.1f %s; (b) min dld %.1f vs aaa-linear %.1f, aaa-sine %.1f %s; "
              "(c) random-dld %.1f %s; (d) min rnd-1 %.1f rnd-2 %.1f %s",
              undefended, acc("standard", "aaa-linear"), acc("reverse", "aaa-linear"), a ? "ok" : "no",
              minimum("dld"), minimum("aaa-linear"), minimum("aaa-sine"), b ? "ok" : "no", minimum("random-dld"),
              c ? "ok" : "no", minimum("rnd-1"), minimum("rnd-2"), d ? "ok" : "no")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10. Every preset, run twice through the CLI, writes identical bytes.
Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "dld_acceptance_determinism";
  fs::remove_all(root);
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  for (const auto& entry : fs::directory_iterator(DLD_PRESET_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    const std::string cfg = entry.path().string();
    const std::string text = slurp(entry.path());
    const bool is_sweep = text.find("sweep.axis") != std::string::npos;
    const bool is_matrix = text.find("tactics") != std::string::npos;
    const std::string sub = is_sweep ? "sweep" : is_matrix ? "run" : "verify";
    for (int rep = 0; rep < 2; ++rep) {
      const std::string out = (root / entry.path().stem() / std::to_string(rep)).string();
      const char* argv[] = {"dldsim", sub.c_str(), "--config", cfg.c_str(), "--output", out.c_str(), "--seed", "19260817"};
      std::ostringstream sink;
      const int code = run_cli(8, argv, sink, sink);
      if (code == 2) return {false, "preset " + cfg + " failed to run: " + sink.str()};
    }
    const fs::path first = root / entry.path().stem() / "0";
    for (const auto& f : fs::directory_iterator(first)) {
      ++files;
      const fs::path twin = root / entry.path().stem() / "1" / f.path().filename();
      if (!fs::exists(twin) || slurp(f.path()) != slurp(twin)) {
        mismatched.push_back(entry.path().stem().string() + "/" + f.path().filename().string());
      }
    }
  }
  fs::remove_all(root);
  std::string detail = fmt("%zu output files compared", files);
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty() && files > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "map exactness", 1, maps_exact},
      {2, "confidence distortion <= tau", 5, distortion_bounded},
      {3, "same-interval ordering", 5, ordering},
      {4, "label preservation", 10, labels_preserved},
      {5, "standard attack success bound", 120, theorem1},
      {6, "expected reversal bound", 120, theorem2},
      {7, "repeat-query bypass", 120, bypass},
      {8, "branch proportion", 10, branch},
      {9, "synthetic table orderings", 1800, table},
      {10, "determinism", 0, determinism},
  };
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  if (only < 0 || only > 10) {
    std::cerr << "usage: " << argv[0] << " [criterion 1-10]\n";
    return 2;
  }
  bool all_pass = true;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_seconds <= 0 || secs < c.limit_seconds;
    const bool pass = v.pass && in_time;
    all_pass = all_pass && pass;
    std::printf("%s criterion %d (%s): %s [%.2fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs,
                in_time ? "" : fmt(", over the %.0fs limit", c.limit_seconds).c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
