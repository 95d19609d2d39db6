#ifndef DLD_CONFIG_HPP
#define DLD_CONFIG_HPP

// Strict key = value experiment configuration.
//
//   # comment
//   budget = 2500
//   defenses = none, dld
//   defense.dld.variant = dld
//   defense.dld.step = 0.04
//
// Unknown keys, keys that do not apply to the chosen variant, and repeated
// keys are errors.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "dld/attacks.hpp"
#include "dld/defenses.hpp"
#include "dld/error.hpp"
#include "dld/generators.hpp"
#include "dld/harness.hpp"
#include "dld/interval_set.hpp"

namespace dld {

// ---------------------------------------------------------------------------
// Value formatting and parsing
// ---------------------------------------------------------------------------

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto item = trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    if constexpr (std::is_same_v<T, double>) {
      out += format_double(v[i]);
    } else {
      out += v[i];
    }
  }
  return out;
}

}  // namespace detail

inline double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError("field '" + std::string(key) + "': expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw ConfigError("field '" + std::string(key) + "': expected a non-negative integer, got '" + std::string(text) +
                      "'");
  }
  return v;
}

/// "(lo,hi] (lo,hi] ..." with optional commas between intervals.
inline IntervalSet parse_intervals(std::string_view key, std::string_view text) {
  std::vector<Interval> parts;
  std::size_t pos = 0;
  for (;;) {
    pos = text.find_first_not_of(" \t,", pos);
    if (pos == std::string_view::npos) break;
    const auto close = text.find(']', pos);
    if (text[pos] != '(' || close == std::string_view::npos) {
      throw ConfigError("field '" + std::string(key) + "': expected intervals written as (lo,hi]");
    }
    const auto body = text.substr(pos + 1, close - pos - 1);
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) throw ConfigError("field '" + std::string(key) + "': interval needs lo,hi");
    parts.push_back({parse_double(key, detail::trim(body.substr(0, comma))),
                     parse_double(key, detail::trim(body.substr(comma + 1)))});
    pos = close + 1;
  }
  try {
    return IntervalSet::from_intervals(parts);
  } catch (const Error& e) {
    throw ConfigError("field '" + std::string(key) + "': " + e.what());
  }
}

inline std::string format_intervals(const IntervalSet& s) {
  std::string out;
  for (const auto& iv : s.intervals()) {
    if (!out.empty()) out += ' ';
    out += '(' + format_double(iv.lo) + ',' + format_double(iv.hi) + ']';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resolved configuration
// ---------------------------------------------------------------------------

enum class CheckKind { Theorem1, Theorem2, BypassProbes, BypassAttack, BranchProportion };

inline std::string_view to_string(CheckKind k) {
  switch (k) {
    case CheckKind::Theorem1: return "theorem1";
    case CheckKind::Theorem2: return "theorem2";
    case CheckKind::BypassProbes: return "bypass-probes";
    case CheckKind::BypassAttack: return "bypass-attack";
    case CheckKind::BranchProportion: return "branch-proportion";
  }
  return "?";
}

inline CheckKind parse_check_kind(std::string_view s) {
  for (auto k : {CheckKind::Theorem1, CheckKind::Theorem2, CheckKind::BypassProbes, CheckKind::BypassAttack,
                 CheckKind::BranchProportion}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown check kind '" + std::string(s) + "'");
}

struct CheckSpec {
  std::string name;
  CheckKind kind = CheckKind::Theorem1;
  LandscapeTrialSpec landscape;
  int threshold = 23;
  double budget_factor = 10.0;
  std::size_t max_probes = 30;
  // branch-proportion
  std::vector<double> ratios{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double step = 0.04;
  std::size_t samples = 100000;
  std::size_t periods = 10;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::Ratio;
  std::vector<double> values;
};

struct ResolvedConfig {
  ExperimentConfig experiment;
  std::vector<CheckSpec> checks;
  std::optional<SweepSpec> sweep;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view defense_variant_name(const DefenseSpec& d) {
  if (d.post.is_identity()) return d.pre ? "rnd" : "identity";
  return d.post.variant_name();
}

// Keys each variant accepts beyond `variant`.
inline const std::set<std::string>& defense_keys(std::string_view variant) {
  static const std::map<std::string, std::set<std::string>, std::less<>> keys{
      {"identity", {"nu"}},
      {"rnd", {"nu"}},
      {"dld", {"tau", "h", "step", "ratio", "intervals", "nu"}},
      {"random-dld", {"tau", "h", "p", "nu"}},
      {"aaa-linear", {"tau", "nu"}},
      {"aaa-sine", {"tau", "alpha", "nu"}},
  };
  const auto it = keys.find(variant);
  if (it == keys.end()) {
    throw ConfigError("unknown defense variant '" + std::string(variant) +
                      "' (expected identity, rnd, dld, random-dld, aaa-linear or aaa-sine)");
  }
  return it->second;
}

inline const std::set<std::string>& check_keys(CheckKind k) {
  static const std::set<std::string> landscape{"tau", "h", "p", "eps", "drift", "l0", "trials", "dims"};
  static const std::map<CheckKind, std::set<std::string>> keys{
      {CheckKind::Theorem1, landscape},
      {CheckKind::Theorem2, [] { auto s = landscape; s.insert("threshold"); return s; }()},
      {CheckKind::BypassProbes, {"tau", "h", "p", "trials"}},
      {CheckKind::BypassAttack, [] { auto s = landscape; s.insert({"budget_factor", "max_probes"}); return s; }()},
      {CheckKind::BranchProportion, {"tau", "h", "ratios", "step", "samples", "periods"}},
  };
  return keys.at(k);
}

class KeyTable {
 public:
  void add(std::string key, std::string value, std::size_t line) {
    if (key.empty()) throw ConfigError("config line " + std::to_string(line) + ": empty key");
    if (!entries_.emplace(key, Entry{std::move(value), line}).second) {
      throw ConfigError("config line " + std::to_string(line) + ": field '" + key + "' given twice");
    }
  }

  std::optional<std::string> take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  void check_all_used() const {
    for (const auto& [key, e] : entries_) {
      if (!used_.count(key)) {
        throw ConfigError("config line " + std::to_string(e.line) + ": unknown field '" + key + "'");
      }
    }
  }

  /// Keys under `prefix` that are not in `allowed` are reported as errors.
  void check_prefix(const std::string& prefix, const std::set<std::string>& allowed) const {
    for (const auto& [key, e] : entries_) {
      if (key.rfind(prefix, 0) == 0 && !allowed.count(key.substr(prefix.size()))) {
        throw ConfigError("config line " + std::to_string(e.line) + ": field '" + key + "' does not apply here");
      }
    }
  }

 private:
  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

inline void read_double(KeyTable& t, const std::string& key, double& out) {
  if (auto v = t.take(key)) out = parse_double(key, *v);
}

template <class U>
void read_uint(KeyTable& t, const std::string& key, U& out) {
  if (auto v = t.take(key)) out = static_cast<U>(parse_uint(key, *v));
}

// Re-labels validation failures with the field prefix they came from.
template <class F>
auto with_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError("field '" + field + "': " + e.what());
  }
}

inline DefenseSpec parse_defense(KeyTable& t, const std::string& name) {
  const std::string pre = "defense." + name + ".";
  DefenseSpec d;
  d.name = name;
  std::string variant = name == "none" ? "identity" : "";
  if (auto v = t.take(pre + "variant")) variant = *v;
  if (variant.empty()) throw ConfigError("field '" + pre + "variant' is required");
  t.check_prefix(pre, [&] {
    auto s = with_field(pre + "variant", [&] { return defense_keys(variant); });
    s.insert("variant");
    return s;
  }());

  return with_field(pre + "variant", [&] {
    std::optional<double> nu;
    if (auto v = t.take(pre + "nu")) nu = parse_double(pre + "nu", *v);
    if (variant == "rnd" && !nu) nu = RndParams{}.nu;
    if (nu) {
      RndParams r{*nu};
      validate(r);
      d.pre = r;
    }
    if (variant == "identity" || variant == "rnd") {
      d.post = LossMap::identity();
    } else if (variant == "dld") {
      DldParams p;
      read_double(t, pre + "tau", p.tau);
      read_double(t, pre + "h", p.h);
      const auto iv = t.take(pre + "intervals");
      const auto step = t.take(pre + "step");
      const auto ratio = t.take(pre + "ratio");
      if (iv && (step || ratio)) throw ConfigError("give either intervals or step/ratio, not both");
      if (iv) {
        p.s = parse_intervals(pre + "intervals", *iv);
      } else if (step || ratio) {
        const double st = step ? parse_double(pre + "step", *step) : 0.04;
        const double ra = ratio ? parse_double(pre + "ratio", *ratio) : 0.5;
        p.s = build_interval_set(st, ra);
        d.step_ratio = std::pair{st, ra};
      }
      d.post = LossMap(p);
    } else if (variant == "random-dld") {
      RandomDldParams p;
      read_double(t, pre + "tau", p.tau);
      read_double(t, pre + "h", p.h);
      read_double(t, pre + "p", p.p);
      d.post = LossMap(p);
    } else if (variant == "aaa-linear") {
      AaaLinearParams p;
      read_double(t, pre + "tau", p.tau);
      d.post = LossMap(p);
    } else {
      AaaSineParams p;
      read_double(t, pre + "tau", p.tau);
      read_double(t, pre + "alpha", p.alpha);
      d.post = LossMap(p);
    }
    return d;
  });
}

inline CheckSpec parse_check(KeyTable& t, const std::string& name, std::size_t default_trials) {
  const std::string pre = "check." + name + ".";
  CheckSpec c;
  c.name = name;
  const auto kind = t.take(pre + "kind");
  if (!kind) throw ConfigError("field '" + pre + "kind' is required");
  c.kind = with_field(pre + "kind", [&] { return parse_check_kind(*kind); });
  t.check_prefix(pre, [&] {
    auto s = check_keys(c.kind);
    s.insert("kind");
    return s;
  }());
  auto& ls = c.landscape;
  ls.trials = default_trials;
  read_double(t, pre + "tau", ls.tau);
  read_double(t, pre + "h", ls.h);
  read_double(t, pre + "p", ls.p);
  read_double(t, pre + "eps", ls.eps);
  read_double(t, pre + "drift", ls.drift);
  ls.l0 = ls.tau;
  read_double(t, pre + "l0", ls.l0);
  read_uint(t, pre + "trials", ls.trials);
  read_uint(t, pre + "dims", ls.dims);
  if (auto v = t.take(pre + "threshold")) c.threshold = static_cast<int>(parse_uint(pre + "threshold", *v));
  read_double(t, pre + "budget_factor", c.budget_factor);
  read_uint(t, pre + "max_probes", c.max_probes);
  if (auto v = t.take(pre + "ratios")) {
    c.ratios.clear();
    for (const auto& item : split_list(*v)) c.ratios.push_back(parse_double(pre + "ratios", item));
  }
  read_double(t, pre + "step", c.step);
  read_uint(t, pre + "samples", c.samples);
  read_uint(t, pre + "periods", c.periods);

  with_field(pre + "kind", [&] {
    switch (c.kind) {
      case CheckKind::Theorem1:
      case CheckKind::Theorem2:
      case CheckKind::BypassAttack:
        validate(ls);
        if (c.threshold < 1) throw ConfigError("threshold must be >= 1");
        if (c.max_probes < 2) throw ConfigError("max_probes must be >= 2");
        if (!(c.budget_factor >= 1.0)) throw ConfigError("budget_factor must be >= 1");
        break;
      case CheckKind::BypassProbes:
        if (!(ls.p > 0.0 && ls.p < 1.0)) throw ConfigError("bypass probes need p in (0, 1)");
        if (ls.trials < 1) throw ConfigError("trials must be >= 1");
        break;
      case CheckKind::BranchProportion:
        if (c.ratios.empty()) throw ConfigError("ratios must not be empty");
        for (double r : c.ratios) build_interval_set(c.step, r);
        if (c.samples < 1 || c.periods < 1) throw ConfigError("samples and periods must be >= 1");
        validate(DldParams{ls.tau, ls.h, IntervalSet{}});
        break;
    }
    return 0;
  });
  return c;
}

}  // namespace detail

/// Parses config text. `source` names the input in error messages.
inline ResolvedConfig parse_config(std::string_view text, std::string_view source = "config") {
  detail::KeyTable t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + " line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    t.add(std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))), line_no);
  }

  ResolvedConfig rc;
  ExperimentConfig& e = rc.experiment;
  detail::read_uint(t, "root_seed", e.root_seed);
  detail::read_uint(t, "sample_count", e.sample_count);
  detail::read_uint(t, "budget", e.budget);
  detail::read_uint(t, "trials", e.trials);
  if (auto v = t.take("trace")) {
    if (*v == "none") e.trace = TraceMode::None;
    else if (*v == "minima") e.trace = TraceMode::Minima;
    else if (*v == "accepted") e.trace = TraceMode::Accepted;
    else if (*v == "full") e.trace = TraceMode::Full;
    else throw ConfigError("field 'trace': expected none, minima, accepted or full");
  }

  if (auto v = t.take("victim.kind")) {
    if (*v == "synthetic") e.victim.kind = VictimKind::Synthetic;
    else if (*v == "landscape") e.victim.kind = VictimKind::Landscape;
    else throw ConfigError("field 'victim.kind': expected synthetic or landscape");
  }
  detail::read_uint(t, "victim.input_dims", e.victim.input_dims);
  detail::read_uint(t, "victim.num_classes", e.victim.num_classes);
  detail::read_uint(t, "victim.seed", e.victim.seed);
  detail::read_double(t, "victim.scale", e.victim.scale);
  detail::read_double(t, "victim.spread", e.victim.spread);
  detail::read_uint(t, "victim.cell", e.victim.cell);
  detail::read_double(t, "victim.sample_noise", e.victim.sample_noise);
  detail::read_double(t, "victim.landscape_l0", e.victim.landscape_l0);
  detail::read_double(t, "victim.landscape_lipschitz", e.victim.landscape_lipschitz);

  if (auto v = t.take("generator.kind")) {
    e.generator.kind = detail::with_field("generator.kind", [&] { return parse_generator_kind(*v); });
  }
  if (auto v = t.take("generator.norm")) {
    e.generator.norm = detail::with_field("generator.norm", [&] { return parse_norm(*v); });
  }
  detail::read_double(t, "generator.epsilon_n", e.generator.epsilon_n);
  detail::read_double(t, "generator.p_init", e.generator.p_init);
  detail::read_double(t, "generator.step", e.generator.step);

  std::vector<std::string> defense_names{"none"};
  if (auto v = t.take("defenses")) defense_names = detail::split_list(*v);
  for (const auto& name : defense_names) {
    for (const auto& d : e.defenses) {
      if (d.name == name) throw ConfigError("field 'defenses': '" + name + "' listed twice");
    }
    e.defenses.push_back(detail::parse_defense(t, name));
  }

  TacticSpec base;
  // Defaults are valid, so a failure after reading a key is that key's fault.
  auto check_tactic = [&](const char* key) {
    detail::with_field(key, [&] {
      validate(base);
      return 0;
    });
  };
  if (auto v = t.take("tactic.reverse.threshold")) {
    base.reverse_threshold = static_cast<int>(parse_uint("tactic.reverse.threshold", *v));
    check_tactic("tactic.reverse.threshold");
  }
  detail::read_double(t, "tactic.explore.prob", base.explore_prob);
  check_tactic("tactic.explore.prob");
  detail::read_double(t, "tactic.sa.initial_temp", base.sa_initial_temp);
  check_tactic("tactic.sa.initial_temp");
  detail::read_double(t, "tactic.sa.decay", base.sa_decay);
  check_tactic("tactic.sa.decay");
  if (auto v = t.take("tactic.sa.stagnation_reset")) {
    base.sa_stagnation_reset = static_cast<int>(parse_uint("tactic.sa.stagnation_reset", *v));
    check_tactic("tactic.sa.stagnation_reset");
  }
  std::vector<std::string> tactic_names{"none", "standard"};
  if (auto v = t.take("tactics")) tactic_names = detail::split_list(*v);
  for (const auto& name : tactic_names) {
    for (const auto& existing : e.tactics) {
      if (existing.name == name) throw ConfigError("field 'tactics': '" + name + "' listed twice");
    }
    TacticEntry entry;
    entry.name = name;
    if (name != "none") {
      TacticSpec s = base;
      s.kind = detail::with_field("tactics", [&] { return parse_tactic_kind(name); });
      entry.spec = s;
    }
    e.tactics.push_back(entry);
  }

  if (auto axis = t.take("sweep.axis")) {
    SweepSpec s;
    s.axis = detail::with_field("sweep.axis", [&] { return parse_sweep_axis(*axis); });
    const auto values = t.take("sweep.values");
    if (!values) throw ConfigError("field 'sweep.values' is required with sweep.axis");
    for (const auto& item : detail::split_list(*values)) s.values.push_back(parse_double("sweep.values", item));
    if (s.values.empty()) throw ConfigError("field 'sweep.values' must not be empty");
    for (double v : s.values) detail::with_field("sweep.values", [&] { return apply_sweep_value(e, s.axis, v); });
    rc.sweep = s;
  }

  if (auto v = t.take("checks")) {
    for (const auto& name : detail::split_list(*v)) {
      for (const auto& c : rc.checks) {
        if (c.name == name) throw ConfigError("field 'checks': '" + name + "' listed twice");
      }
      rc.checks.push_back(detail::parse_check(t, name, e.trials));
    }
  }

  t.check_all_used();
  detail::with_field("config", [&] {
    validate(e);
    return 0;
  });
  return rc;
}

inline ResolvedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Canonical dump
// ---------------------------------------------------------------------------

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Every field with its resolved value, in a fixed order. Parsing the joined
/// entries yields an equivalent config.
inline ConfigEntries config_entries(const ResolvedConfig& rc) {
  const ExperimentConfig& e = rc.experiment;
  ConfigEntries out;
  auto put = [&](std::string k, std::string v) { out.emplace_back(std::move(k), std::move(v)); };
  auto num = [&](std::string k, double v) { put(std::move(k), format_double(v)); };
  auto uint = [&](std::string k, std::uint64_t v) { put(std::move(k), std::to_string(v)); };

  uint("root_seed", e.root_seed);
  uint("sample_count", e.sample_count);
  uint("budget", e.budget);
  uint("trials", e.trials);
  constexpr const char* trace_names[] = {"none", "minima", "accepted", "full"};
  put("trace", trace_names[static_cast<int>(e.trace)]);
  put("victim.kind", e.victim.kind == VictimKind::Synthetic ? "synthetic" : "landscape");
  uint("victim.input_dims", e.victim.input_dims);
  uint("victim.num_classes", e.victim.num_classes);
  uint("victim.seed", e.victim.seed);
  num("victim.scale", e.victim.scale);
  num("victim.spread", e.victim.spread);
  uint("victim.cell", e.victim.cell);
  num("victim.sample_noise", e.victim.sample_noise);
  num("victim.landscape_l0", e.victim.landscape_l0);
  num("victim.landscape_lipschitz", e.victim.landscape_lipschitz);
  put("generator.kind", std::string(to_string(e.generator.kind)));
  put("generator.norm", std::string(to_string(e.generator.norm)));
  num("generator.epsilon_n", e.generator.epsilon_n);
  num("generator.p_init", e.generator.p_init);
  num("generator.step", e.generator.step);

  std::vector<std::string> names;
  for (const auto& d : e.defenses) names.push_back(d.name);
  put("defenses", detail::join(names));
  for (const auto& d : e.defenses) {
    const std::string pre = "defense." + d.name + ".";
    put(pre + "variant", std::string(detail::defense_variant_name(d)));
    if (d.pre) num(pre + "nu", d.pre->nu);
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, DldParams>) {
            num(pre + "tau", p.tau);
            num(pre + "h", p.h);
            if (d.step_ratio) {
              num(pre + "step", d.step_ratio->first);
              num(pre + "ratio", d.step_ratio->second);
            } else {
              put(pre + "intervals", format_intervals(p.s));
            }
          } else if constexpr (std::is_same_v<P, RandomDldParams>) {
            num(pre + "tau", p.tau);
            num(pre + "h", p.h);
            num(pre + "p", p.p);
          } else if constexpr (std::is_same_v<P, AaaLinearParams>) {
            num(pre + "tau", p.tau);
          } else if constexpr (std::is_same_v<P, AaaSineParams>) {
            num(pre + "tau", p.tau);
            num(pre + "alpha", p.alpha);
          }
        },
        d.post.params());
  }

  names.clear();
  TacticSpec base;
  for (const auto& t : e.tactics) {
    names.push_back(t.name);
    if (t.spec) base = *t.spec;
  }
  put("tactics", detail::join(names));
  uint("tactic.reverse.threshold", static_cast<std::uint64_t>(base.reverse_threshold));
  num("tactic.explore.prob", base.explore_prob);
  num("tactic.sa.initial_temp", base.sa_initial_temp);
  num("tactic.sa.decay", base.sa_decay);
  uint("tactic.sa.stagnation_reset", static_cast<std::uint64_t>(base.sa_stagnation_reset));

  if (rc.sweep) {
    put("sweep.axis", std::string(to_string(rc.sweep->axis)));
    put("sweep.values", detail::join(rc.sweep->values));
  }

  if (!rc.checks.empty()) {
    names.clear();
    for (const auto& c : rc.checks) names.push_back(c.name);
    put("checks", detail::join(names));
  }
  for (const auto& c : rc.checks) {
    const std::string pre = "check." + c.name + ".";
    put(pre + "kind", std::string(to_string(c.kind)));
    const auto& keys = detail::check_keys(c.kind);
    const auto& ls = c.landscape;
    // Fixed emission order, filtered by the keys this kind accepts.
    const std::vector<std::pair<std::string, std::string>> all{
        {"tau", format_double(ls.tau)},
        {"h", format_double(ls.h)},
        {"p", format_double(ls.p)},
        {"eps", format_double(ls.eps)},
        {"drift", format_double(ls.drift)},
        {"l0", format_double(ls.l0)},
        {"trials", std::to_string(ls.trials)},
        {"dims", std::to_string(ls.dims)},
        {"threshold", std::to_string(c.threshold)},
        {"budget_factor", format_double(c.budget_factor)},
        {"max_probes", std::to_string(c.max_probes)},
        {"ratios", detail::join(c.ratios)},
        {"step", format_double(c.step)},
        {"samples", std::to_string(c.samples)},
        {"periods", std::to_string(c.periods)},
    };
    for (const auto& [k, v] : all) {
      if (keys.count(k)) put(pre + k, v);
    }
  }
  return out;
}

inline std::string dump_config(const ResolvedConfig& rc) {
  std::string out;
  for (const auto& [k, v] : config_entries(rc)) out += k + " = " + v + "\n";
  return out;
}

/// FNV-1a over the canonical dump, as 16 hex digits.
inline std::string config_hash(const ResolvedConfig& rc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump_config(rc)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dld

#endif  // DLD_CONFIG_HPP
