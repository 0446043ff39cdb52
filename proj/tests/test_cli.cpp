#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "stabsim/config.hpp"
#include "stabsim/graph.hpp"

using namespace stabsim;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

CmdResult run_cmd(const std::string& cmd) {
  CmdResult res;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    res.output.append(buf.data(), got);
  }
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

const std::string kCli = STABSIM_CLI_PATH;

std::string tmp_path(const std::string& name) {
  static const fs::path dir = [] {
    fs::path d = STABSIM_TMP_DIR;
    fs::create_directories(d);
    return d;
  }();
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << text;
}

}  // namespace

TEST_CASE("scenario grammar") {
  CHECK(parse_scenario("none").family == ScenarioSpec::Family::none);
  CHECK(parse_scenario("worst-case-broadcast").family ==
        ScenarioSpec::Family::worst_case_broadcast);
  CHECK(parse_scenario("memory-sweep").family == ScenarioSpec::Family::memory_sweep);

  const ScenarioSpec b = parse_scenario("broadcast node=3 color=2 final=true");
  CHECK(b.family == ScenarioSpec::Family::explicit_fault);
  CHECK(b.fault.kind == FaultScenario::Kind::broadcast);
  CHECK(b.fault.node == 3);
  CHECK(b.fault.payload == Message{2, true});
  CHECK(b.fault.injection_round == 0);

  const ScenarioSpec m = parse_scenario("memory node=1 color=none final=keep round=4");
  CHECK(m.fault.kind == FaultScenario::Kind::memory);
  CHECK(m.fault.new_color == kNoColor);
  CHECK_FALSE(m.fault.new_done.has_value());
  CHECK(m.fault.injection_round == 4);

  const ScenarioSpec keep = parse_scenario("memory node=0 color=keep final=false");
  CHECK_FALSE(keep.fault.new_color.has_value());
  CHECK(keep.fault.new_done == false);
}

TEST_CASE("scenario grammar round-trips through describe") {
  for (const FaultScenario& sc : {
           FaultScenario::memory(1, 4, false),
           FaultScenario::memory(2, std::nullopt, std::nullopt, 3),
           FaultScenario::memory(0, kNoColor, true),
           FaultScenario::broadcast(3, Message{2, true}, 5),
           FaultScenario::broadcast(0, Message{kNoColor, false}),
       }) {
    const ScenarioSpec parsed = parse_scenario(sc.describe());
    CHECK(parsed.family == ScenarioSpec::Family::explicit_fault);
    CHECK(parsed.fault.kind == sc.kind);
    CHECK(parsed.fault.node == sc.node);
    CHECK(parsed.fault.new_color == sc.new_color);
    CHECK(parsed.fault.new_done == sc.new_done);
    CHECK(parsed.fault.payload == sc.payload);
    CHECK(parsed.fault.injection_round == sc.injection_round);
  }
}

TEST_CASE("scenario grammar rejections") {
  CHECK_THROWS_AS(parse_scenario("explode node=1"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("broadcast node=1 color=2"), ConfigError);  // final missing
  CHECK_THROWS_AS(parse_scenario("memory node=x color=1 final=true"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("memory node=1 color=1 final=maybe"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("broadcast node=1 color=2 final=true round=-2x"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("broadcast node=1 color=2 final=true extra=1"), ConfigError);
  CHECK_THROWS_AS(parse_scenario(""), ConfigError);
}

TEST_CASE("config files parse into a full experiment description") {
  std::istringstream in(
      "format=1\n"
      "# comment line\n"
      "[experiment]\n"
      "protocol = a3\n"
      "trials = 10\n"
      "seed = 7\n"
      "scenario = memory-sweep\n"
      "node = 2\n"
      "threads = 1\n"
      "\n"
      "[graph]\n"
      "family = gnp\n"
      "n = 16\n"
      "p = 0.25\n"
      "seed = 9\n");
  const ExperimentConfig cfg = parse_config(in, "inline");
  CHECK(cfg.protocol == "a3");
  CHECK(cfg.trials == 10);
  CHECK(cfg.seed == 7);
  CHECK(cfg.scenario.family == ScenarioSpec::Family::memory_sweep);
  CHECK(cfg.node == 2);
  CHECK(cfg.threads == 1);
  CHECK(cfg.graph.describe() == "gnp(n=16,p=0.25,seed=9)");
  CHECK(cfg.max_rounds == 10000);
  CHECK_FALSE(cfg.radius_cap.has_value());
}

TEST_CASE("config file rejections carry the origin and line") {
  auto parse_text = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
  };
  const std::string head =
      "format=1\n[experiment]\nprotocol = acol\ntrials = 1\nseed = 0\nscenario = none\n";

  SUBCASE("missing format line") {
    try {
      parse_text("[experiment]\n");
      FAIL("expected rejection");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("format") != std::string::npos);
    }
  }
  SUBCASE("unknown protocol names the field") {
    try {
      parse_text(
          "format=1\n[experiment]\nprotocol = a9\ntrials = 1\nseed = 0\n"
          "scenario = none\n[graph]\nfamily = star\nd = 1\n");
      FAIL("expected rejection");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[experiment] protocol") != std::string::npos);
      CHECK(msg.find("a9") != std::string::npos);
    }
  }
  SUBCASE("duplicate keys cite the earlier line") {
    try {
      parse_text(head + "trials = 2\n[graph]\nfamily = star\nd = 1\n");
      FAIL("expected rejection");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("duplicate") != std::string::npos);
      CHECK(msg.find("test.cfg") != std::string::npos);
      CHECK(msg.find("4") != std::string::npos);  // first definition line
    }
  }
  SUBCASE("keys before any section are rejected") {
    CHECK_THROWS_AS(parse_text("format=1\nprotocol = acol\n"), ConfigError);
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(parse_text(head + "warp = 9\n[graph]\nfamily = star\nd = 1\n"),
                    ConfigError);
  }
  SUBCASE("missing graph parameters are rejected") {
    CHECK_THROWS_AS(parse_text(head + "[graph]\nfamily = gnp\nn = 16\n"), ConfigError);
  }
  SUBCASE("unknown graph family is rejected") {
    CHECK_THROWS_AS(parse_text(head + "[graph]\nfamily = torus\n"), ConfigError);
  }
}

TEST_CASE("cli: no subcommand or bad flags exit with usage errors") {
  CHECK(run_cmd(kCli).exit_code == 2);
  CHECK(run_cmd(kCli + " simulate --config /nonexistent.cfg").exit_code == 2);
  CHECK(run_cmd(kCli + " compare --scenario broadcast --d-range 5..2 --trials 10").exit_code == 2);
  CHECK(run_cmd(kCli + " analyze --out /tmp/x.csv").exit_code == 2);  // --d-max required
}

TEST_CASE("cli: analyze writes a deterministic chain table") {
  const std::string out1 = tmp_path("analyze1.csv");
  const std::string out2 = tmp_path("analyze2.csv");
  CHECK(run_cmd(kCli + " analyze --d-max 3 --out \"" + out1 + "\"").exit_code == 0);
  CHECK(run_cmd(kCli + " analyze --d-max 3 --out \"" + out2 + "\"").exit_code == 0);
  const std::string table = slurp(out1);
  CHECK(table == slurp(out2));

  std::istringstream rows(table);
  std::string header, row1;
  REQUIRE(std::getline(rows, header));
  REQUIRE(std::getline(rows, row1));
  CHECK(header ==
        "d,E_chain,E_closed_form,Var_chain,Var_bound,E_memory_chain,Var_memory_chain,"
        "bound_memory");
  std::istringstream fields(row1);
  std::string cell;
  std::vector<double> vals;
  while (std::getline(fields, cell, ',')) vals.push_back(std::stod(cell));
  REQUIRE(vals.size() == 8);
  CHECK(vals[0] == 1);
  CHECK(vals[1] == Approx(2.0));                  // chain expectation
  CHECK(vals[2] == Approx(1.942695040889));       // closed form
  CHECK(vals[3] == Approx(2.0));                  // chain variance
  CHECK(vals[5] == Approx(3.7));                  // memory chain expectation
  CHECK(vals[6] == Approx(2.85));                 // memory chain variance
  CHECK(vals[7] == Approx(6.942695040889));       // closed memory bound
  int data_rows = 1;
  std::string rest;
  while (std::getline(rows, rest)) data_rows += !rest.empty();
  CHECK(data_rows == 3);
}

TEST_CASE("cli: simulate produces a stable summary and clean exit") {
  const std::string cfg_path = tmp_path("star1.cfg");
  const std::string out_path = tmp_path("star1.json");
  spit(cfg_path,
       "format=1\n"
       "[experiment]\n"
       "protocol = acol\n"
       "trials = 2000\n"
       "seed = 42\n"
       "scenario = worst-case-broadcast\n"
       "threads = 2\n"
       "output = " + out_path + "\n"
       "[graph]\n"
       "family = star\n"
       "d = 1\n");

  const CmdResult r1 = run_cmd(kCli + " simulate --config \"" + cfg_path + "\"");
  CHECK(r1.exit_code == 0);
  const std::string json_text = slurp(out_path);
  const CmdResult r2 = run_cmd(kCli + " simulate --config \"" + cfg_path + "\"");
  CHECK(r2.exit_code == 0);
  CHECK(json_text == slurp(out_path));  // byte-identical rerun

  const nlohmann::json j = nlohmann::json::parse(json_text);
  CHECK(j.at("format") == 1);
  CHECK(j.at("protocol") == "acol");
  CHECK(j.at("graph") == "star(d=1)");
  CHECK(j.at("nodes") == 2);
  CHECK(j.at("trials") == 2000);
  CHECK(j.at("divergent") == 0);
  CHECK(j.at("violations").empty());
  const double mean = j.at("metrics").at("rounds_to_legal").at("mean").get<double>();
  CHECK(std::abs(mean - 2.0) < 0.2);
  CHECK(j.at("metrics").at("radius").at("max") == 1);
}

TEST_CASE("cli: simulate rejects bad configs with exit code 2") {
  const std::string cfg_path = tmp_path("bad.cfg");
  spit(cfg_path,
       "format=1\n"
       "[experiment]\n"
       "protocol = a9\n"
       "trials = 1\n"
       "seed = 0\n"
       "scenario = none\n"
       "[graph]\n"
       "family = star\n"
       "d = 1\n");
  const CmdResult r = run_cmd(kCli + " simulate --config \"" + cfg_path + "\"");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("[experiment] protocol") != std::string::npos);
}

TEST_CASE("cli: radius cap violations surface in the exit code") {
  const std::string cfg_path = tmp_path("cascade.cfg");
  spit(cfg_path,
       "format=1\n"
       "[experiment]\n"
       "protocol = a2\n"
       "trials = 64\n"
       "seed = 3\n"
       "scenario = memory node=0 color=4 final=keep\n"
       "radius_cap = 1\n"
       "[graph]\n"
       "family = cascade\n");
  const CmdResult r = run_cmd(kCli + " simulate --config \"" + cfg_path + "\"");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("violation") != std::string::npos);
}

TEST_CASE("cli: compare validates the broadcast chain end to end") {
  const std::string out = tmp_path("cmp.csv");
  const CmdResult r = run_cmd(kCli +
                              " compare --scenario broadcast --d-range 1..2 --trials 4000"
                              " --seed 1 --out \"" + out + "\"");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("compare: ok") != std::string::npos);
  const std::string csv = slurp(out);
  CHECK(csv.find("z_mean") != std::string::npos);
  CHECK(csv.find("rounds_to_legal") != std::string::npos);
}

TEST_CASE("cli: graphgen emits a readable edge list") {
  const std::string out = tmp_path("star4.edges");
  CHECK(run_cmd(kCli + " graphgen --family star --d 4 --out \"" + out + "\"").exit_code == 0);
  std::ifstream in(out);
  const Graph g = read_edge_list(in);
  CHECK(g.node_count() == 5);
  CHECK(g.edge_count() == 4);
  CHECK(g.degree(0) == 4);
}
