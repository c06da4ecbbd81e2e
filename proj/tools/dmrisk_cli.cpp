// dmrisk_cli: evaluate risk measures on scenario files and run the property
// battery. Output is JSON on stdout unless stated otherwise.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmrisk/dmrisk.hpp"
#include "dmrisk/harness/battery.hpp"
#include "dmrisk/harness/measures.hpp"
#include "dmrisk/harness/report.hpp"
#include "dmrisk/harness/scenario_csv.hpp"

namespace h = dmrisk::harness;
using dmrisk::RandomVariable;
using h::Json;
using h::number;

namespace {

struct Common {
  std::string input;
  std::string column;
  h::MeasureOptions measure;
  std::uint64_t seed = h::kDefaultSeed;
  bool seed_given = false;
};

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed_given) return c.seed;
  if (const char* env = std::getenv("DMRISK_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw dmrisk::precondition_error("DMRISK_SEED is not an unsigned integer");
    return v;
  }
  return h::kDefaultSeed;
}

const RandomVariable& pick_column(const h::ScenarioTable& t, const std::string& name) {
  return name.empty() ? t.columns.front() : t.column(name);
}

void add_input_options(CLI::App* sub, Common& c) {
  sub->add_option("input", c.input, "scenario CSV (probability column first)")->required()->check(CLI::ExistingFile);
  sub->add_option("--column", c.column, "value column (default: first)");
}

void add_measure_options(CLI::App* sub, Common& c) {
  sub->add_option("--measure", c.measure.measure, "avar | higher_order | transformed | transformed_exp")
      ->capture_default_str();
  sub->add_option("--alpha", c.measure.alpha, "AVaR level in (0,1]")->capture_default_str();
  sub->add_option("--c", c.measure.c, "norm multiplier c")->capture_default_str();
  sub->add_option("--p", c.measure.p, "norm exponent p")->capture_default_str();
}

void add_seed_option(CLI::App* sub, Common& c) {
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t v) { c.seed = v; c.seed_given = true; },
      "random seed (default: $DMRISK_SEED, else " + std::to_string(h::kDefaultSeed) + ")");
}

Json header(const std::string& verb, const Common& c, const h::ScenarioTable& t, const RandomVariable& x) {
  Json j;
  j["command"] = verb;
  j["input"] = c.input;
  j["column"] = c.column.empty() ? t.names.front() : c.column;
  j["atoms"] = x.size();
  j["normalization_shift"] = number(t.normalization_shift);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dilatation-monotone risk measures on finite scenario sets"};
  app.require_subcommand(1);
  Common c;
  int depth = 0;
  int budget = 32;
  std::size_t grid = 256;
  int n_max = 20;
  int trials = 25;
  std::string format = "json";
  std::string output;
  std::string curves;
  double tolerance = -1.0;
  bool timings = false;

  auto* eval = app.add_subcommand("eval", "evaluate one measure on one variable");
  add_input_options(eval, c);
  add_measure_options(eval, c);

  auto* extend = app.add_subcommand("extend", "partition supremum and refinement curve");
  add_input_options(extend, c);
  add_measure_options(extend, c);
  add_seed_option(extend, c);
  extend->add_option("--depth", depth, "dyadic chain depth (default: value-separating)");
  extend->add_option("--budget", budget, "random partitions to sample")->capture_default_str();

  auto* dual = app.add_subcommand("dual", "dual density and Fenchel gap for T_{c,p} (or AVaR as T_{1/alpha,1})");
  add_input_options(dual, c);
  add_measure_options(dual, c);

  auto* kus = app.add_subcommand("kusuoka", "AVaR-mixture representation of T_{c,p}");
  add_input_options(kus, c);
  add_measure_options(kus, c);
  kus->add_option("--grid", grid, "geometric grid size")->capture_default_str();

  auto* lemma = app.add_subcommand("lemma21", "dominated approximating partitions");
  add_input_options(lemma, c);
  lemma->add_option("--n-max", n_max, "largest n (eps = 1/n)")->capture_default_str();
  bool split = false;
  lemma->add_flag("--split", split, "split atoms into equal copies until the space is fine enough");

  auto* battery = app.add_subcommand("battery", "randomized property checks; exit 1 if any fails");
  add_input_options(battery, c);
  add_measure_options(battery, c);
  add_seed_option(battery, c);
  battery->add_option("--trials", trials, "trials per randomized check")->capture_default_str();
  battery->add_option("--budget", budget, "random partitions for the extension check")->capture_default_str();
  battery->add_option("--grid", grid, "Kusuoka grid size")->capture_default_str();
  battery->add_option("--tolerance", tolerance, "override every check tolerance");
  battery->add_option("--format", format, "json | csv (curves)")->capture_default_str();
  battery->add_option("--output", output, "write the report here instead of stdout");
  battery->add_option("--curves", curves, "also write the curves CSV here");
  battery->add_flag("--timings", timings, "include per-check runtimes (reports stop being byte-stable)");
  battery->add_option("--n-max", n_max, "largest n for the partition-sequence bounds")->capture_default_str();
  bool measure_given = false;
  battery->callback([&] { measure_given = battery->count("--measure") > 0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const h::ScenarioTable table = h::ingest_csv(c.input);
    const RandomVariable& x = pick_column(table, c.column);

    if (*eval) {
      const h::Family fam = h::make_family(c.measure);
      Json j = header("eval", c, table, x);
      j["measure"] = fam.label;
      j["value"] = number(h::detail::finite_or_inf(fam.rho(x)));
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*extend) {
      const h::Family fam = h::make_family(c.measure);
      const std::uint64_t seed = resolve_seed(c);
      const int d = depth > 0 ? depth : dmrisk::separating_depth(x);
      const auto ext = dmrisk::extend_sup(fam.rho, x, budget, seed);
      const auto pts = dmrisk::refinement_convergence(fam.rho, x, d);
      Json j = header("extend", c, table, x);
      j["measure"] = fam.label;
      j["seed"] = seed;
      j["direct"] = number(h::detail::finite_or_inf(fam.rho(x)));
      j["sup"] = number(h::detail::finite_or_inf(ext.value));
      j["best"] = ext.best_source;
      j["samples"] = ext.samples.size();
      Json curve = Json::array();
      for (const auto& p : pts) curve.push_back({p.level, number(h::detail::finite_or_inf(p.value)), p.l1_gap});
      j["curve"] = std::move(curve);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*dual) {
      // --c or --p without --measure selects the higher-order family
      double cc = c.measure.c;
      double pp = c.measure.p;
      const bool implied_ho = dual->count("--measure") == 0 && (dual->count("--c") > 0 || dual->count("--p") > 0);
      const std::string kind = implied_ho ? "higher_order" : c.measure.measure;
      if (kind == "avar") {
        cc = 1.0 / c.measure.alpha;
        pp = 1.0;
      } else if (kind != "higher_order") {
        throw dmrisk::precondition_error("dual: only avar and higher_order have a density dual here");
      }
      const auto rho = dmrisk::RiskFunctional::higher_order(cc, pp);
      const double q = dmrisk::conjugate_exponent(pp);
      const auto sol = dmrisk::dual_higher_order(x, cc, q);
      const double primal = dmrisk::higher_order_T(x, cc, pp);
      const auto gap = dmrisk::fenchel_gap(rho, x, -sol.z_star.values());
      Json j = header("dual", c, table, x);
      j["c"] = cc;
      j["p"] = pp;
      j["q"] = number(q);
      j["primal"] = primal;
      j["dual"] = sol.value;
      j["method"] = sol.method;
      j["z_star"] = std::vector<double>(sol.z_star.values().values().begin(), sol.z_star.values().values().end());
      j["z_norm_q"] = number(dmrisk::lq_norm(sol.z_star.values(), q));
      j["fenchel_gap"] = number(h::detail::finite_or_inf(gap));
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*kus) {
      const auto res = dmrisk::kusuoka_value(x, c.measure.c, c.measure.p, grid);
      const double primal = dmrisk::higher_order_T(x, c.measure.c, c.measure.p);
      Json j = header("kusuoka", c, table, x);
      j["c"] = c.measure.c;
      j["p"] = c.measure.p;
      j["grid"] = res.mu_star.grid().size();
      j["value"] = res.value;
      j["primal"] = primal;
      j["gap"] = primal - res.value;
      j["constraint"] = dmrisk::kusuoka_constraint(res.mu_star, dmrisk::conjugate_exponent(c.measure.p));
      Json atoms = Json::array();
      for (std::size_t i = 0; i < res.mu_star.grid().size(); ++i) {
        if (res.mu_star.weights()[i] > 1e-12) atoms.push_back({res.mu_star.grid()[i], res.mu_star.weights()[i]});
      }
      j["mu_star"] = std::move(atoms);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*lemma) {
      RandomVariable xs = x;
      if (split && n_max >= 2) {
        const double need = 0.25 / n_max;
        const auto copies = static_cast<std::size_t>(std::ceil(x.space()->max_prob() / need * (1.0 + 1e-12)));
        if (copies > 1) xs = dmrisk::split_atoms(x, copies);
      }
      const auto steps = dmrisk::lemma21_sequence(xs, n_max);
      Json j = header("lemma21", c, table, xs);
      Json rows = Json::array();
      bool ok = true;
      for (const auto& s : steps) {
        const auto chk = dmrisk::check_domination(xs, s);
        ok = ok && chk.holds();
        rows.push_back({{"n", s.n},
                        {"k1", s.k1},
                        {"k2", s.k2},
                        {"cells", s.partition.cell_count()},
                        {"mass_a", s.mass_a},
                        {"delta", s.delta},
                        {"domination_excess", chk.domination_excess},
                        {"l1_gap", chk.l1_gap},
                        {"l1_bound", chk.l1_bound},
                        {"holds", chk.holds()}});
      }
      j["steps"] = std::move(rows);
      std::cout << j.dump(2) << "\n";
      return ok ? 0 : 1;
    }

    // battery
    h::BatteryConfig cfg;
    if (measure_given) cfg.families = {h::make_family(c.measure)};
    cfg.trials = trials;
    cfg.seed = resolve_seed(c);
    if (tolerance >= 0.0) cfg.tolerance = tolerance;
    cfg.kusuoka_grid = grid;
    cfg.extend_budget = budget;
    cfg.lemma_n_max = n_max;
    cfg.timings = timings;
    const h::RunReport rep = h::run_battery(table, cfg, "battery", c.input);
    const std::string doc = h::emit_report(rep, format);
    if (output.empty()) {
      std::cout << doc;
    } else {
      std::ofstream(output) << doc;
    }
    if (!curves.empty()) std::ofstream(curves) << h::curves_csv(rep);
    std::cerr << "battery: " << rep.count(h::Status::pass) << " pass, " << rep.count(h::Status::fail) << " fail, "
              << rep.count(h::Status::skip) << " skip (seed " << rep.seed << ")\n";
    return rep.all_passed() ? 0 : 1;
  } catch (const dmrisk::csv_error& e) {
    std::cerr << "error: " << c.input << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
