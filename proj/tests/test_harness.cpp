#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dmrisk/harness/battery.hpp"
#include "dmrisk/harness/measures.hpp"
#include "dmrisk/harness/report.hpp"
#include "dmrisk/harness/scenario_csv.hpp"

using namespace dmrisk;
namespace h = dmrisk::harness;
namespace fs = std::filesystem;

namespace {

const std::string kFourAtoms = std::string(DMRISK_DATA_DIR) + "/four_atoms.csv";

h::ScenarioTable parse(const std::string& text) {
  std::istringstream in(text);
  return h::parse_csv(in);
}

std::size_t csv_error_row(const std::string& text) {
  try {
    parse(text);
  } catch (const csv_error& e) {
    return e.row();
  }
  ADD_FAILURE() << "no csv_error for:\n" << text;
  return 999;
}

struct Run {
  int code;
  std::string out;
};

Run run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = "env " + env + " " + std::string(DMRISK_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

h::BatteryConfig small_config() {
  h::BatteryConfig cfg;
  cfg.trials = 5;
  cfg.kusuoka_grid = 64;
  cfg.extend_budget = 4;
  cfg.lemma_n_max = 6;
  return cfg;
}

}  // namespace

TEST(ScenarioCsv, FourAtomFile) {
  const auto t = h::ingest_csv(kFourAtoms);
  EXPECT_EQ(t.space->size(), 4u);
  ASSERT_EQ(t.names.size(), 1u);
  EXPECT_EQ(t.names[0], "x");
  const auto& x = t.column("x");
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(x[i], static_cast<double>(i + 1));
  EXPECT_EQ(t.normalization_shift, 0.0);
  EXPECT_THROW(t.column("y"), precondition_error);
}

TEST(ScenarioCsv, MultipleColumnsWhitespaceAndBlankLines) {
  const auto t = parse("probability, a ,b\n\n0.5, 1, -2\n 0.5 ,3,4e-1\n\n");
  ASSERT_EQ(t.names.size(), 2u);
  EXPECT_EQ(t.column("a")[1], 3.0);
  EXPECT_EQ(t.column("b")[1], 0.4);
}

TEST(ScenarioCsv, ProbabilitySumTolerance) {
  EXPECT_THROW(parse("probability,x\n0.5,1\n0.499999,2\n"), csv_error);
  const auto ok = parse("probability,x\n0.5,1\n0.4999999999,2\n");
  EXPECT_NEAR(std::abs(ok.normalization_shift), 1e-10, 1e-15);
  EXPECT_NEAR(ok.space->prob(0) + ok.space->prob(1), 1.0, 1e-15);
}

TEST(ScenarioCsv, ErrorsNameTheRow) {
  EXPECT_EQ(csv_error_row("probability,x\n0.5,1\n-0.25,2\n0.75,3\n"), 3u);
  EXPECT_EQ(csv_error_row("probability,x\n0.5,1\n0,2\n"), 3u);
  EXPECT_EQ(csv_error_row("probability,x\n0.5,1\n0.5\n"), 3u);
  EXPECT_EQ(csv_error_row("probability,x\n0.5,abc\n0.5,1\n"), 2u);
  EXPECT_EQ(csv_error_row("probability,x\n0.5,inf\n0.5,1\n"), 2u);
  EXPECT_EQ(csv_error_row("prob,x\n1,1\n"), 1u);
  EXPECT_EQ(csv_error_row("probability,x,x\n1,1,1\n"), 1u);
  EXPECT_EQ(csv_error_row("probability\n1\n"), 1u);
  EXPECT_THROW(parse(""), csv_error);
  EXPECT_THROW(parse("probability,x\n"), csv_error);
  EXPECT_THROW(h::ingest_csv("/nonexistent/file.csv"), csv_error);
}

TEST(ScenarioCsv, RoundTripTwelveDigits) {
  const auto t = parse("probability,x,y\n0.3333333333,1.5,2\n0.3333333333,-7.25,0\n0.3333333334,1e-3,5\n");
  const auto back = parse(h::emit_csv(t));
  ASSERT_EQ(back.space->size(), t.space->size());
  EXPECT_EQ(back.names, t.names);
  for (std::size_t i = 0; i < t.space->size(); ++i) {
    EXPECT_NEAR(back.space->prob(i), t.space->prob(i), 1e-12 * t.space->prob(i));
    for (std::size_t c = 0; c < t.columns.size(); ++c) EXPECT_EQ(back.columns[c][i], t.columns[c][i]);
  }
}

TEST(Battery, DefaultConfigPassesOnFourAtoms) {
  const auto t = h::ingest_csv(kFourAtoms);
  const auto r = h::run_battery(t, small_config(), "battery", kFourAtoms);
  EXPECT_TRUE(r.all_passed());
  EXPECT_EQ(r.count(h::Status::fail), 0u);
  // each check appears exactly once per family and variable
  const auto& names = h::battery_check_names();
  const std::size_t fams = small_config().families.size();
  ASSERT_EQ(r.checks.size(), fams * names.size() + 1);
  for (std::size_t f = 0; f < fams; ++f) {
    for (std::size_t k = 0; k < names.size(); ++k) EXPECT_EQ(r.checks[f * names.size() + k].name, names[k]);
  }
}

TEST(Battery, DeterministicGivenSeed) {
  const auto t = h::ingest_csv(kFourAtoms);
  const auto a = h::emit_report(h::run_battery(t, small_config()), "json");
  const auto b = h::emit_report(h::run_battery(t, small_config()), "json");
  EXPECT_EQ(a, b);
  auto other = small_config();
  other.seed = 7;
  EXPECT_NE(a, h::emit_report(h::run_battery(t, other), "json"));
}

TEST(Battery, ZeroToleranceReportsFailures) {
  const auto t = parse("probability,x\n0.2,0.1\n0.3,-0.7\n0.5,0.3\n");
  auto cfg = small_config();
  cfg.tolerance = 0.0;
  const auto r = h::run_battery(t, cfg);
  EXPECT_FALSE(r.all_passed());
  for (const auto& c : r.checks) {
    if (c.status != h::Status::fail) continue;
    EXPECT_EQ(c.tolerance, 0.0);
    EXPECT_TRUE(std::isfinite(c.lhs) || std::isinf(c.lhs));
    EXPECT_NE(c.seed, 0u);
  }
  EXPECT_THROW(
      [&] {
        auto bad = small_config();
        bad.trials = 0;
        h::run_battery(t, bad);
      }(),
      precondition_error);
}

TEST(Report, TwoChecksAndCurves) {
  h::RunReport r;
  r.command = "battery";
  r.seed = 3;
  auto a = h::make_record("dilatation", "avar(0.25)", "x");
  a.status = h::Status::pass;
  auto b = h::make_record("cash", "avar(0.25)", "x");
  b.status = h::Status::fail;
  b.lhs = INFINITY;
  r.checks = {a, b};
  r.curves.push_back(h::Curve{"avar(0.25)", "x", {{0, -2.5, 1.0}, {1, -1.5, 0.0}}});
  const auto doc = nlohmann::json::parse(h::emit_report(r, "json"));
  ASSERT_EQ(doc["checks"].size(), 2u);
  EXPECT_EQ(doc["checks"][1]["lhs"], "inf");
  EXPECT_EQ(doc["summary"]["fail"], 1);
  EXPECT_EQ(doc["seed"], 3);
  const auto csv = h::emit_report(r, "csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,value,l1_gap,curve");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_THROW(h::emit_report(r, "xml"), precondition_error);
}

TEST(Report, EmptyBattery) {
  h::RunReport r;
  r.command = "battery";
  const auto doc = nlohmann::json::parse(h::emit_report(r, "json"));
  EXPECT_TRUE(doc["checks"].is_array());
  EXPECT_TRUE(doc["checks"].empty());
}

TEST(Measures, Families) {
  h::MeasureOptions o;
  EXPECT_EQ(h::make_family(o).label, "avar(0.25)");
  o.measure = "higher_order";
  const auto f = h::make_family(o);
  ASSERT_TRUE(f.higher_order.has_value());
  EXPECT_EQ(f.higher_order->first, 2.0);
  o.measure = "nope";
  EXPECT_THROW(h::make_family(o), precondition_error);
}

TEST(Cli, EvalAndExitCodes) {
  const auto ev = run_cli("eval " + kFourAtoms + " --measure avar --alpha 0.5");
  ASSERT_EQ(ev.code, 0);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(ev.out)["value"].get<double>(), -1.5);

  EXPECT_EQ(run_cli("eval /nonexistent.csv").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("eval " + kFourAtoms + " --measure bogus").code, 2);
  EXPECT_EQ(run_cli("lemma21 " + kFourAtoms).code, 2);
  EXPECT_EQ(run_cli("lemma21 " + kFourAtoms + " --split --n-max 6").code, 0);
}

TEST(Cli, DualAndKusuoka) {
  const auto d = run_cli("dual " + kFourAtoms + " --c 2 --p 2");
  ASSERT_EQ(d.code, 0);
  const auto dj = nlohmann::json::parse(d.out);
  EXPECT_NEAR(dj["dual"].get<double>(), dj["primal"].get<double>(), 1e-9);
  const auto k = run_cli("kusuoka " + kFourAtoms + " --c 2 --p 2 --grid 64");
  ASSERT_EQ(k.code, 0);
  EXPECT_LE(std::abs(nlohmann::json::parse(k.out)["gap"].get<double>()), 1e-6);
  const auto e = run_cli("extend " + kFourAtoms + " --measure higher_order --budget 4");
  ASSERT_EQ(e.code, 0);
  const auto ej = nlohmann::json::parse(e.out);
  EXPECT_EQ(ej["sup"], ej["direct"]);
}

TEST(Cli, BatteryExitCodeSeedAndFiles) {
  const fs::path dir = fs::temp_directory_path() / "dmrisk_cli_test";
  fs::create_directories(dir);
  const auto rep = (dir / "r.json").string();
  const auto cur = (dir / "c.csv").string();
  const std::string base = "battery " + kFourAtoms + " --trials 3 --grid 32 --budget 2 --n-max 4";
  ASSERT_EQ(run_cli(base + " --output " + rep + " --curves " + cur).code, 0);
  std::ifstream in(rep);
  const auto doc = nlohmann::json::parse(in);
  EXPECT_EQ(doc["seed"], h::kDefaultSeed);
  std::ifstream cin(cur);
  std::string first;
  std::getline(cin, first);
  EXPECT_EQ(first, "level,value,l1_gap,curve");

  const auto rough = (dir / "rough.csv").string();
  std::ofstream(rough) << "probability,x\n0.2,0.1\n0.3,-0.7\n0.5,0.3\n";
  EXPECT_EQ(run_cli("battery " + rough + " --trials 3 --grid 32 --budget 2 --n-max 2 --tolerance 0").code, 1);
  const auto env = run_cli(base + " --seed 42");
  EXPECT_EQ(nlohmann::json::parse(env.out)["seed"], 42);
  EXPECT_EQ(run_cli(base, "DMRISK_SEED=42").out, env.out);
  EXPECT_NE(run_cli(base).out, env.out);
  fs::remove_all(dir);
}
