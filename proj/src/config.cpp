#include "stabsim/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace stabsim {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_field(const std::string& field, const std::string& msg) {
  throw ConfigError(field + ": " + msg);
}

std::uint64_t parse_u64(const std::string& field, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    fail_field(field, "expected a non-negative integer, got \"" + value + "\"");
  }
  return out;
}

int parse_int(const std::string& field, const std::string& value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    fail_field(field, "expected an integer, got \"" + value + "\"");
  }
  return out;
}

double parse_double(const std::string& field, const std::string& value) {
  try {
    size_t used = 0;
    const double out = std::stod(value, &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  fail_field(field, "expected a number, got \"" + value + "\"");
}

bool parse_bool(const std::string& field, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  fail_field(field, "expected true or false, got \"" + value + "\"");
}

// Splits "key=value" fault arguments such as "node=3".
std::pair<std::string, std::string> split_kv(const std::string& field, const std::string& tok) {
  const auto eq = tok.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size()) {
    fail_field(field, "expected key=value, got \"" + tok + "\"");
  }
  return {tok.substr(0, eq), tok.substr(eq + 1)};
}

struct Entry {
  std::string value;
  int line = 0;
};

using Table = std::map<std::string, Entry>;  // key: "section key"

}  // namespace

std::string ConfigGraph::describe() const {
  switch (source) {
    case Source::generated:
      return spec.describe();
    case Source::file:
      return "file:" + path;
    case Source::cascade:
      return "cascade";
  }
  return "?";
}

ScenarioSpec parse_scenario(const std::string& text) {
  const std::string field = "scenario";
  ScenarioSpec spec;
  spec.text = trim(text);

  std::istringstream in(spec.text);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  if (tokens.empty()) fail_field(field, "value is empty");

  const std::string& head = tokens[0];
  if (head == "none" || head == "worst-case-broadcast" || head == "memory-sweep") {
    if (tokens.size() != 1) fail_field(field, "\"" + head + "\" takes no arguments");
    spec.family = head == "none"                   ? ScenarioSpec::Family::none
                  : head == "worst-case-broadcast" ? ScenarioSpec::Family::worst_case_broadcast
                                                   : ScenarioSpec::Family::memory_sweep;
    return spec;
  }
  if (head != "broadcast" && head != "memory") {
    fail_field(field, "unknown scenario \"" + head +
                          "\" (expected none, worst-case-broadcast, memory-sweep, "
                          "broadcast ... or memory ...)");
  }

  std::optional<int> node, color_int, round;
  bool color_none = false, color_keep = false;
  std::optional<bool> final_flag;
  bool final_keep = false;
  std::set<std::string> seen;
  for (size_t i = 1; i < tokens.size(); ++i) {
    const auto [key, value] = split_kv(field, tokens[i]);
    if (!seen.insert(key).second) fail_field(field, "duplicate argument \"" + key + "\"");
    if (key == "node") {
      node = parse_int(field + " node", value);
    } else if (key == "color") {
      if (value == "none") {
        color_none = true;
      } else if (value == "keep" && head == "memory") {
        color_keep = true;
      } else {
        color_int = parse_int(field + " color", value);
        if (*color_int < 0) fail_field(field + " color", "colors are non-negative");
      }
    } else if (key == "final") {
      if (value == "keep" && head == "memory") {
        final_keep = true;
      } else {
        final_flag = parse_bool(field + " final", value);
      }
    } else if (key == "round") {
      round = parse_int(field + " round", value);
      if (*round < 0) fail_field(field + " round", "rounds are non-negative");
    } else {
      fail_field(field, "unknown argument \"" + key + "\"");
    }
  }
  if (!node) fail_field(field, "\"" + head + "\" requires node=<id>");
  if (!color_int && !color_none && !color_keep) {
    fail_field(field, "\"" + head + "\" requires color=<value>");
  }
  if (!final_flag && !final_keep) fail_field(field, "\"" + head + "\" requires final=<value>");

  spec.family = ScenarioSpec::Family::explicit_fault;
  if (head == "broadcast") {
    const Message payload{color_none ? kNoColor : *color_int, *final_flag};
    spec.fault = FaultScenario::broadcast(*node, payload, round.value_or(0));
  } else {
    std::optional<int> new_color;
    if (color_none) new_color = kNoColor;
    if (color_int) new_color = *color_int;
    std::optional<bool> new_done;
    if (final_flag) new_done = *final_flag;
    spec.fault = FaultScenario::memory(*node, new_color, new_done, round.value_or(0));
  }
  return spec;
}

namespace {

Table read_table(std::istream& in, const std::string& origin) {
  Table table;
  std::string section;
  std::string line;
  int lineno = 0;
  bool format_seen = false;
  auto fail_line = [&](const std::string& msg) -> void {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!format_seen) {
      const auto eq = t.find('=');
      if (eq == std::string::npos || trim(t.substr(0, eq)) != "format" ||
          trim(t.substr(eq + 1)) != "1") {
        fail_line("first line must be \"format=1\"");
      }
      format_seen = true;
      continue;
    }
    if (t.front() == '[') {
      if (t.back() != ']') fail_line("unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section != "experiment" && section != "graph") {
        fail_line("unknown section [" + section + "] (expected [experiment] or [graph])");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail_line("expected key = value");
    if (section.empty()) fail_line("key outside any section");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) fail_line("empty key");
    const auto [it, inserted] =
        table.emplace(section + " " + key, Entry{trim(t.substr(eq + 1)), lineno});
    if (!inserted) {
      fail_line("duplicate key \"" + key + "\" (first at line " + std::to_string(it->second.line) +
                ")");
    }
  }
  if (!format_seen) throw ConfigError(origin + ": empty file, expected \"format=1\"");
  return table;
}

class Fields {
 public:
  explicit Fields(Table table) : table_(std::move(table)) {}

  std::optional<std::string> take(const std::string& section, const std::string& key) {
    const auto it = table_.find(section + " " + key);
    if (it == table_.end()) return std::nullopt;
    std::string v = it->second.value;
    table_.erase(it);
    return v;
  }

  std::string require(const std::string& section, const std::string& key) {
    auto v = take(section, key);
    if (!v) fail_field("[" + section + "] " + key, "required key is missing");
    return *v;
  }

  void reject_leftovers() const {
    if (table_.empty()) return;
    const auto& [k, e] = *table_.begin();
    const auto space = k.find(' ');
    throw ConfigError("[" + k.substr(0, space) + "] " + k.substr(space + 1) + ": unknown key (line " +
                      std::to_string(e.line) + ")");
  }

 private:
  Table table_;
};

ConfigGraph build_graph(Fields& f) {
  ConfigGraph g;
  const std::string family = f.require("graph", "family");
  const std::string field = "[graph] family";

  auto geom = [&](const std::string& fam) -> GraphSpec {
    auto key = [&](const char* k) { return std::string("[graph] ") + k; };
    auto take_int = [&](const char* k) -> std::optional<int> {
      auto v = f.take("graph", k);
      if (!v) return std::nullopt;
      return parse_int(key(k), *v);
    };
    auto take_dbl = [&](const char* k) -> std::optional<double> {
      auto v = f.take("graph", k);
      if (!v) return std::nullopt;
      return parse_double(key(k), *v);
    };
    auto take_seed = [&]() -> std::uint64_t {
      auto v = f.take("graph", "seed");
      return v ? parse_u64(key("seed"), *v) : 0;
    };
    auto need_int = [&](const char* k, int min) {
      auto v = take_int(k);
      if (!v) fail_field(key(k), "required for family \"" + fam + "\"");
      if (*v < min) fail_field(key(k), "must be >= " + std::to_string(min));
      return *v;
    };

    if (fam == "star") return GraphSpec::star(need_int("d", 1));
    if (fam == "path") return GraphSpec::path(need_int("n", 1));
    if (fam == "complete") return GraphSpec::complete(need_int("n", 1));
    if (fam == "gnp") {
      const int n = need_int("n", 1);
      auto p = take_dbl("p");
      if (!p) fail_field(key("p"), "required for family \"gnp\"");
      if (*p < 0.0 || *p > 1.0) fail_field(key("p"), "must lie in [0, 1]");
      return GraphSpec::gnp(n, *p, take_seed());
    }
    if (fam == "unit_disc") {
      const int n = need_int("n", 1);
      auto r = take_dbl("radius");
      if (!r) fail_field(key("radius"), "required for family \"unit_disc\"");
      if (*r <= 0.0) fail_field(key("radius"), "must be positive");
      return GraphSpec::unit_disc(n, *r, take_seed());
    }
    fail_field(field, "unknown family \"" + fam +
                          "\" (expected star, path, complete, gnp, unit_disc, hub, file or "
                          "cascade)");
  };

  if (family == "file") {
    g.source = ConfigGraph::Source::file;
    auto path = f.take("graph", "file");
    if (!path || path->empty()) fail_field("[graph] file", "required for family \"file\"");
    g.path = *path;
    return g;
  }
  if (family == "cascade") {
    g.source = ConfigGraph::Source::cascade;
    return g;
  }
  if (family == "hub") {
    auto over = f.take("graph", "over");
    if (!over) fail_field("[graph] over", "required for family \"hub\"");
    g.spec = GraphSpec::hub_over_h(geom(*over));
    return g;
  }
  g.spec = geom(family);
  return g;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  Fields f(read_table(in, origin));
  ExperimentConfig cfg;

  cfg.protocol = f.require("experiment", "protocol");
  if (cfg.protocol != "acol" && cfg.protocol != "a1" && cfg.protocol != "a2" &&
      cfg.protocol != "a3") {
    fail_field("[experiment] protocol", "unknown protocol \"" + cfg.protocol +
                                            "\" (expected acol, a1, a2 or a3)");
  }
  cfg.trials = parse_u64("[experiment] trials", f.require("experiment", "trials"));
  if (cfg.trials < 1) fail_field("[experiment] trials", "must be >= 1");
  cfg.seed = parse_u64("[experiment] seed", f.require("experiment", "seed"));
  cfg.scenario = parse_scenario(f.require("experiment", "scenario"));

  if (auto v = f.take("experiment", "max_rounds")) {
    cfg.max_rounds = parse_int("[experiment] max_rounds", *v);
    if (cfg.max_rounds < 1) fail_field("[experiment] max_rounds", "must be >= 1");
  }
  if (auto v = f.take("experiment", "node")) {
    cfg.node = parse_int("[experiment] node", *v);
    if (*cfg.node < 0) fail_field("[experiment] node", "must be >= 0");
  }
  if (auto v = f.take("experiment", "radius_cap")) {
    cfg.radius_cap = parse_int("[experiment] radius_cap", *v);
    if (*cfg.radius_cap < 0) fail_field("[experiment] radius_cap", "must be >= 0");
  }
  if (auto v = f.take("experiment", "threads")) {
    cfg.threads = parse_int("[experiment] threads", *v);
    if (cfg.threads < 0) fail_field("[experiment] threads", "must be >= 0");
  }
  if (auto v = f.take("experiment", "output")) cfg.output = *v;
  if (auto v = f.take("experiment", "output_format")) {
    if (*v != "json" && *v != "csv") {
      fail_field("[experiment] output_format", "expected json or csv, got \"" + *v + "\"");
    }
    cfg.output_format = *v;
  }

  cfg.graph = build_graph(f);
  f.reject_leftovers();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse_config(in, path);
}

}  // namespace stabsim
