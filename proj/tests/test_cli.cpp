#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tandem/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
};

Outcome sh(const std::string& args) {
  const std::string cmd = std::string(TANDEMSIM_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WEXITSTATUS(status), out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tandem_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kDesk = std::string(TANDEM_SOURCE_DIR) + "/scenarios/desk.json";

}  // namespace

TEST(Cli, HelpAndUnknownFlags) {
  EXPECT_EQ(sh("--help").code, 0);
  EXPECT_NE(sh("run --frobnicate").code, 0);
  EXPECT_NE(sh("").code, 0);
}

TEST(Cli, GenDtLikeSummary) {
  const auto dir = scratch("gen");
  const auto r = sh("gen --preset dt-like --seed 7 --out " + (dir / "a.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("cells: 60 (coverage 15, capacity 45)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("773 MHz: 15 coverage"), std::string::npos);
  ASSERT_EQ(sh("gen --preset dt-like --seed 7 --out " + (dir / "b.json").string()).code, 0);
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
}

TEST(Cli, GenRejectsZeroSites) {
  const auto r = sh("gen --sites 0 --out -");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error"), std::string::npos);
}

TEST(Cli, RunWritesAllOutputsAndPlumbsTheGoal) {
  const auto dir = scratch("run");
  const auto r = sh("run --scenario " + kDesk + " --horizon-h 0.5 --target-outage 15 --tolerance 1 --out " +
                    dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"timeseries.csv", "events.csv", "msglog.ndjson"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream log(dir / "msglog.ndjson");
  std::string line;
  std::size_t policies = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["kind"] != "policy") continue;
    ++policies;
    EXPECT_EQ(j["payload"]["target_outage_lo"], 14.0);
    EXPECT_EQ(j["payload"]["target_outage_hi"], 16.0);
  }
  EXPECT_GT(policies, 0u);
  const auto ts = slurp(dir / "timeseries.csv");
  EXPECT_EQ(ts.substr(0, ts.find('\n')), "t_s,beta_sys_pct,alpha_off,alpha_on,n_off,power_w,n_ues,offered_bps");
}

TEST(Cli, DisabledControllersReportNoChanges) {
  const auto dir = scratch("quiet");
  const auto r = sh("run --scenario " + kDesk + " --horizon-h 0.25 --no-controllers --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("state_changes 0"), std::string::npos) << r.out;
}

TEST(Cli, MsgstatsMatchesRunCounters) {
  const auto dir = scratch("stats");
  const auto run = sh("run --scenario " + kDesk + " --horizon-h 0.5 --out " + dir.string());
  ASSERT_EQ(run.code, 0) << run.out;
  const auto stats = sh("msgstats --log " + (dir / "msglog.ndjson").string());
  ASSERT_EQ(stats.code, 0) << stats.out;
  EXPECT_NE(stats.out.find("identity ok"), std::string::npos);
  std::ifstream in(dir / "msglog.ndjson");
  const auto counters = tandem::tally_message_log(in);
  const std::string e2 = "messages E2 " + std::to_string(counters.interface_total(tandem::Interface::E2));
  EXPECT_NE(run.out.find(e2), std::string::npos) << run.out;
  EXPECT_NE(stats.out.find("total " + std::to_string(counters.grand_total())), std::string::npos);
}

TEST(Cli, MsgstatsReportsBadLine) {
  const auto dir = scratch("badlog");
  std::ofstream(dir / "log.ndjson") << "{\"interface\":\"E2\",\"kind\":\"setup\"}\nnope\n";
  const auto r = sh("msgstats --log " + (dir / "log.ndjson").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
}

TEST(Cli, ValidationErrorsExitOne) {
  const auto dir = scratch("invalid");
  std::ofstream(dir / "bad.json") << R"({"version": 1, "area": {"width_m": 100, "height_m": 100}, "sites": [],
    "cells": [], "pixels": []})";
  const auto r = sh("run --scenario " + (dir / "bad.json").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("coverage"), std::string::npos) << r.out;
  std::ofstream(dir / "cfg.json") << R"({"t_x_s": 900})";
  EXPECT_EQ(sh("run --scenario " + kDesk + " --config " + (dir / "cfg.json").string()).code, 1);
}

TEST(Cli, SweepSingleGoalGivesThreeRows) {
  const auto r = sh("sweep --scenario " + kDesk + " --horizon-h 0.25 --goals 15 --out -");
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u) << r.out;
  EXPECT_EQ(lines[0], "label,goal_pct,outage_pct,power_w");
  EXPECT_EQ(lines[1].rfind("goal,15,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("all_active,,", 0), 0u);
  EXPECT_EQ(lines[3].rfind("all_capacity_off,,", 0), 0u);
}
