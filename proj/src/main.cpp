#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "hingepo/checks.hpp"
#include "hingepo/harness.hpp"

using nlohmann::json;

namespace {

struct GlobalFlags {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int jobs = 1;
  CLI::Option* seed_opt = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hingepo: clipped-surrogate policy optimization via hinge "
               "losses, with a numerical verification suite"};
  app.set_version_flag("--version", hingepo::git_describe());
  app.fallthrough();
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")
      ->capture_default_str();
  g.seed_opt = app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--jobs", g.jobs, "Max concurrent runs (sweep)")
      ->capture_default_str();

  // ---- gen-mdp ----
  auto* gen = app.add_subcommand("gen-mdp", "Generate an MDP JSON file");
  std::string gen_config, gen_kind, gen_out;
  int gen_n = 5, gen_w = 3, gen_h = 3, gen_states = 5, gen_actions = 3;
  double gen_gamma = 0.9;
  gen->add_option("--config", gen_config, "Config JSON (or manifest) file");
  auto* o_kind =
      gen->add_option("--kind", gen_kind, "chain | gridworld | random");
  auto* o_n = gen->add_option("--n", gen_n, "Chain length");
  auto* o_w = gen->add_option("--width", gen_w, "Grid width");
  auto* o_h = gen->add_option("--height", gen_h, "Grid height");
  auto* o_states = gen->add_option("--states", gen_states, "Random MDP states");
  auto* o_actions =
      gen->add_option("--actions", gen_actions, "Random MDP actions");
  auto* o_gamma = gen->add_option("--gamma", gen_gamma, "Discount factor");
  auto* o_gen_out = gen->add_option("--out", gen_out, "Output file name");

  // ---- run-tabular ----
  auto* tab = app.add_subcommand("run-tabular",
                                 "Exact-advantage tabular training run");
  std::string tab_config, tab_mdp, tab_classifier, tab_weights, tab_schedule,
      tab_trace, tab_out;
  double tab_margin = 0.3, tab_wmax = 1e6, tab_step = 0.01, tab_tol = 0.0;
  int tab_inner = 5, tab_iters = 1000, tab_batch = 1;
  tab->add_option("--config", tab_config, "Config JSON (or manifest) file");
  auto* t_mdp = tab->add_option("--mdp", tab_mdp, "MDP JSON file");
  auto* t_cls = tab->add_option("--classifier", tab_classifier,
                                "ratio | sub | root | log");
  auto* t_wts = tab->add_option("--weights", tab_weights,
                                "unit | abs-adv | policy-weighted");
  auto* t_margin = tab->add_option("--margin", tab_margin, "Hinge margin");
  auto* t_wmax = tab->add_option("--w-max", tab_wmax, "Weight cap");
  auto* t_step = tab->add_option("--emda-step", tab_step, "EMDA step size");
  auto* t_inner =
      tab->add_option("--emda-iters", tab_inner, "EMDA inner iterations");
  auto* t_iters = tab->add_option("--iters", tab_iters, "Outer iterations");
  auto* t_sched =
      tab->add_option("--schedule", tab_schedule, "cyclic | random");
  auto* t_batch = tab->add_option("--batch-size", tab_batch, "States per batch");
  auto* t_tol = tab->add_option("--early-stop-tol", tab_tol,
                                "Stop once the gap stays below this");
  auto* t_trace =
      tab->add_option("--trace-emda", tab_trace, "EMDA gradient JSONL file");
  auto* t_out = tab->add_option("--out", tab_out, "Metrics CSV name");

  // ---- run-neural ----
  auto* neu = app.add_subcommand(
      "run-neural", "Two-layer-net training run (TD critic + energy policy)");
  std::string neu_config, neu_mdp, neu_classifier, neu_weights, neu_out;
  double neu_margin = 0.3, neu_wmax = 1e6, neu_step = 0.01, neu_rf = 10.0,
         neu_rq = 10.0;
  int neu_inner = 5, neu_T = 16, neu_tupd = 2048, neu_wf = 256, neu_wq = 256;
  bool neu_sqrt_step = false;
  neu->add_option("--config", neu_config, "Config JSON (or manifest) file");
  auto* n_mdp = neu->add_option("--mdp", neu_mdp, "MDP JSON file");
  auto* n_cls = neu->add_option("--classifier", neu_classifier,
                                "ratio | sub | root | log");
  auto* n_wts = neu->add_option("--weights", neu_weights,
                                "unit | abs-adv | policy-weighted");
  auto* n_margin = neu->add_option("--margin", neu_margin, "Hinge margin");
  auto* n_wmax = neu->add_option("--w-max", neu_wmax, "Weight cap");
  auto* n_step = neu->add_option("--emda-step", neu_step, "EMDA step size");
  auto* n_inner =
      neu->add_option("--emda-iters", neu_inner, "EMDA inner iterations");
  auto* n_T = neu->add_option("--T", neu_T, "Outer iterations");
  auto* n_tupd =
      neu->add_option("--t-upd", neu_tupd, "Tuples (= SGD steps) per fit");
  auto* n_wf = neu->add_option("--width-f", neu_wf, "Energy net width");
  auto* n_wq = neu->add_option("--width-q", neu_wq, "Critic net width");
  auto* n_rf = neu->add_option("--radius-f", neu_rf, "Energy net ball radius");
  auto* n_rq = neu->add_option("--radius-q", neu_rq, "Critic net ball radius");
  auto* n_sqrt_step = neu->add_flag("--sqrt-t-step", neu_sqrt_step,
                                "EMDA step 1/sqrt(T)");
  auto* n_out = neu->add_option("--out", neu_out, "Metrics CSV name");

  // ---- sweep ----
  auto* swp = app.add_subcommand(
      "sweep", "One run per (classifier, seed); aggregates into summary.json");
  std::string swp_config, swp_algo, swp_mdp;
  std::vector<std::string> swp_classifiers;
  std::vector<std::uint64_t> swp_seeds;
  swp->add_option("--config", swp_config, "Config JSON (or manifest) file");
  auto* s_algo = swp->add_option("--algo", swp_algo, "tabular | neural");
  auto* s_cls = swp->add_option("--classifiers", swp_classifiers,
                                "Comma-separated classifier list")
                    ->delimiter(',');
  auto* s_seeds =
      swp->add_option("--seeds", swp_seeds, "Comma-separated seed list")
          ->delimiter(',');
  auto* s_mdp = swp->add_option("--mdp", swp_mdp, "MDP JSON file (base config)");

  // ---- check ----
  auto* chk = app.add_subcommand(
      "check", "Numerical identity checks; prints a JSON report array");
  std::string chk_suite = "all";
  chk->add_option("--suite", chk_suite,
                  "grad-equiv | closed-form | perf-diff | kl | "
                  "concentrability | all")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad flags are config errors
  }

  try {
    if (app.got_subcommand(gen)) {
      json cfg = gen_config.empty()
                     ? json::object()
                     : hingepo::config_from_file(gen_config, "gen-mdp");
      if (o_kind->count()) cfg["kind"] = gen_kind;
      if (o_n->count()) cfg["n"] = gen_n;
      if (o_w->count()) cfg["w"] = gen_w;
      if (o_h->count()) cfg["h"] = gen_h;
      if (o_states->count()) cfg["states"] = gen_states;
      if (o_actions->count()) cfg["actions"] = gen_actions;
      if (o_gamma->count()) cfg["gamma"] = gen_gamma;
      if (g.seed_opt->count()) cfg["seed"] = g.seed;
      if (o_gen_out->count()) cfg["out"] = gen_out;
      hingepo::RunOutcome out = hingepo::execute_gen_mdp(cfg, g.out_dir);
      for (const std::string& o : out.outputs)
        std::cout << g.out_dir << "/" << o << "\n";
      return 0;
    }

    if (app.got_subcommand(tab)) {
      json cfg = tab_config.empty()
                     ? json::object()
                     : hingepo::config_from_file(tab_config, "run-tabular");
      if (t_mdp->count()) cfg["mdp"] = tab_mdp;
      if (t_cls->count()) cfg["classifier"] = tab_classifier;
      if (t_wts->count()) cfg["weights"] = tab_weights;
      if (t_margin->count()) cfg["margin"] = tab_margin;
      if (t_wmax->count()) cfg["w-max"] = tab_wmax;
      if (t_step->count()) cfg["emda-step"] = tab_step;
      if (t_inner->count()) cfg["emda-iters"] = tab_inner;
      if (t_iters->count()) cfg["iters"] = tab_iters;
      if (t_sched->count()) cfg["schedule"] = tab_schedule;
      if (t_batch->count()) cfg["batch-size"] = tab_batch;
      if (t_tol->count()) cfg["early-stop-tol"] = tab_tol;
      if (t_trace->count()) cfg["trace-emda"] = tab_trace;
      if (g.seed_opt->count()) cfg["seed"] = g.seed;
      if (t_out->count()) cfg["out"] = tab_out;
      hingepo::RunOutcome out = hingepo::execute_tabular(cfg, g.out_dir);
      std::cout << "final_gap " << out.final_gap << "\nmin_gap " << out.min_gap
                << "\n";
      for (const std::string& o : out.outputs)
        std::cout << g.out_dir << "/" << o << "\n";
      return 0;
    }

    if (app.got_subcommand(neu)) {
      json cfg = neu_config.empty()
                     ? json::object()
                     : hingepo::config_from_file(neu_config, "run-neural");
      if (n_mdp->count()) cfg["mdp"] = neu_mdp;
      if (n_cls->count()) cfg["classifier"] = neu_classifier;
      if (n_wts->count()) cfg["weights"] = neu_weights;
      if (n_margin->count()) cfg["margin"] = neu_margin;
      if (n_wmax->count()) cfg["w-max"] = neu_wmax;
      if (n_step->count()) cfg["emda-step"] = neu_step;
      if (n_inner->count()) cfg["emda-iters"] = neu_inner;
      if (n_T->count()) cfg["T"] = neu_T;
      if (n_tupd->count()) cfg["t-upd"] = neu_tupd;
      if (n_wf->count()) cfg["width-f"] = neu_wf;
      if (n_wq->count()) cfg["width-q"] = neu_wq;
      if (n_rf->count()) cfg["radius-f"] = neu_rf;
      if (n_rq->count()) cfg["radius-q"] = neu_rq;
      if (n_sqrt_step->count()) cfg["sqrt-t-step"] = neu_sqrt_step;
      if (g.seed_opt->count()) cfg["seed"] = g.seed;
      if (n_out->count()) cfg["out"] = neu_out;
      hingepo::RunOutcome out = hingepo::execute_neural(cfg, g.out_dir);
      std::cout << "final_gap " << out.final_gap << "\nmin_gap " << out.min_gap
                << "\n";
      for (const std::string& o : out.outputs)
        std::cout << g.out_dir << "/" << o << "\n";
      return 0;
    }

    if (app.got_subcommand(swp)) {
      json cfg = swp_config.empty()
                     ? json::object()
                     : hingepo::config_from_file(swp_config, "sweep");
      if (s_algo->count()) cfg["algo"] = swp_algo;
      if (s_cls->count()) cfg["classifiers"] = swp_classifiers;
      if (s_seeds->count()) cfg["seeds"] = swp_seeds;
      if (s_mdp->count()) {
        if (!cfg.contains("base")) cfg["base"] = json::object();
        cfg["base"]["mdp"] = swp_mdp;
      }
      hingepo::SweepOutcome out = hingepo::execute_sweep(cfg, g.out_dir, g.jobs);
      std::cout << out.n_runs - static_cast<int>(out.failures.size()) << "/"
                << out.n_runs << " runs succeeded; summary at " << g.out_dir
                << "/summary.json\n";
      for (const hingepo::SweepFailure& f : out.failures)
        std::cerr << "failed: " << f.classifier << " seed " << f.seed << ": "
                  << f.error << "\n";
      return out.failures.empty() ? 0 : 1;
    }

    if (app.got_subcommand(chk)) {
      std::vector<hingepo::CheckReport> reports =
          hingepo::run_check_suite(chk_suite, g.seed);
      std::cout << hingepo::reports_to_json(reports);
      return hingepo::all_passed(reports) ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}
