// vsearch: world generation, dataset/training pipeline, single searches and the bench sweep.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "vsearch/experiment.hpp"
#include "vsearch/world_io.hpp"

using namespace vsearch;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out = ".";

  void attach(CLI::App* c) {
    c->add_option("--seed", seed, "master seed");
    c->add_option("--config", config, "planner config file (key = value)");
    c->add_option("--out", out, "output directory");
  }
  PlannerConfig planner_config() const { return config.empty() ? PlannerConfig{} : load_planner_config(config); }
  fs::path dir() const {
    fs::create_directories(out);
    return fs::path(out);
  }
};

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream o(p);
  if (!o) throw std::runtime_error("cannot write " + p.string());
  o << s;
}

void print_eval(const std::string& what, const ClassifierEval& e) {
  std::cout << std::fixed << std::setprecision(4) << what << ": accuracy " << e.accuracy << " +- " << e.stderr_
            << "  majority(" << int(e.majority_label) << ") " << e.majority_accuracy << " +- " << e.majority_stderr
            << "  non-map fraction " << e.nonmap_fraction << "  non-map recall " << e.nonmap_recall << "  scans "
            << e.scans << '\n';
}

std::string epoch_csv(const std::vector<EpochStats>& curve) {
  std::ostringstream o;
  o << std::setprecision(10) << "epoch,train_loss,train_accuracy,test_accuracy\n";
  for (const auto& s : curve) o << s.epoch << ',' << s.train_loss << ',' << s.train_accuracy << ',' << s.test_accuracy << '\n';
  return o.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visual object search in line-segment worlds"};
  app.require_subcommand(1);

  // gen-world
  Common gw_c;
  std::string gw_arch = "apartment", gw_diff = "hard";
  double gw_w = 20, gw_h = 30, gw_density = 0.04;
  int gw_targets = 1;
  auto* gw = app.add_subcommand("gen-world", "generate a world with targets");
  gw_c.attach(gw);
  gw->add_option("--archetype", gw_arch, "apartment | office | hallway");
  gw->add_option("--difficulty", gw_diff, "easy | hard");
  gw->add_option("--width", gw_w);
  gw->add_option("--height", gw_h);
  gw->add_option("--density", gw_density, "objects per square meter of room floor");
  gw->add_option("--targets", gw_targets);

  // gen-dataset
  Common gd_c;
  SyntheticDataSpec gd_spec;
  auto* gd = app.add_subcommand("gen-dataset", "random tours labelled by the ground-truth classifier");
  gd_c.attach(gd);
  gd->add_option("--train-worlds", gd_spec.n_train_worlds);
  gd->add_option("--held-out-worlds", gd_spec.n_held_out_worlds);
  gd->add_option("--tour-s", gd_spec.train_tour_s, "tour length per training world");
  gd->add_option("--held-out-tour-s", gd_spec.held_out_tour_s);
  gd->add_option("--density", gd_spec.object_density);

  // train
  Common tr_c;
  TrainConfig tr_cfg;
  std::string tr_train, tr_held;
  bool tr_no_label = false;
  auto* tr = app.add_subcommand("train", "train the scan classifier");
  tr_c.attach(tr);
  tr->add_option("--train", tr_train, "training dataset")->required();
  tr->add_option("--held-out", tr_held, "held-out dataset");
  tr->add_option("--epochs", tr_cfg.epochs);
  tr->add_option("--corruption", tr_cfg.corruption_rate);
  tr->add_option("--lr", tr_cfg.learning_rate);
  tr->add_option("--k", tr_cfg.k);
  tr->add_option("--channels", tr_cfg.channels);
  tr->add_flag("--no-label-branch", tr_no_label);

  // eval-classifier
  Common ev_c;
  std::string ev_model, ev_data;
  auto* ev = app.add_subcommand("eval-classifier", "per-scan accuracy of a trained model");
  ev_c.attach(ev);
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--data", ev_data)->required();

  // ablate
  Common ab_c;
  TrainConfig ab_cfg;
  std::string ab_kind = "label_encoder", ab_train, ab_held;
  std::vector<double> ab_rates = default_noise_rates();
  auto* ab = app.add_subcommand("ablate", "label-encoder or noise-sweep ablation");
  ab_c.attach(ab);
  ab->add_option("--kind", ab_kind, "label_encoder | noise_sweep");
  ab->add_option("--train", ab_train)->required();
  ab->add_option("--held-out", ab_held)->required();
  ab->add_option("--epochs", ab_cfg.epochs);
  ab->add_option("--rates", ab_rates, "corruption rates for noise_sweep");

  // search
  Common se_c;
  std::string se_world, se_mode = "ground_truth", se_model;
  auto* se = app.add_subcommand("search", "run a single search episode");
  se_c.attach(se);
  se->add_option("--world", se_world, "world file")->required();
  se->add_option("--mode", se_mode, "none | ground_truth | learned");
  se->add_option("--model", se_model, "model for learned mode");

  // bench
  Common be_c;
  BenchWorldSpec be_worlds;
  int be_trials = 10;
  std::string be_model, be_arch = "apartment";
  std::vector<std::string> be_diffs{"hard"};
  auto* be = app.add_subcommand("bench", "full sweep: planners x worlds x difficulties x seeds");
  be_c.attach(be);
  be->add_option("--worlds", be_worlds.n_worlds);
  be->add_option("--archetype", be_arch);
  be->add_option("--width", be_worlds.width);
  be->add_option("--height", be_worlds.height);
  be->add_option("--density", be_worlds.object_density);
  be->add_option("--trials", be_trials);
  be->add_option("--difficulty", be_diffs, "easy and/or hard");
  be->add_option("--model", be_model, "adds the learned-label arm");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gw) {
      WorldGenParams p;
      p.archetype = parse_archetype(gw_arch);
      p.width = gw_w;
      p.height = gw_h;
      p.object_density = gw_density;
      p.seed = gw_c.seed;
      const LineWorld w = generate_world(p, parse_difficulty(gw_diff), gw_targets);
      const auto dir = gw_c.dir();
      save_world(w, (dir / "world.json").string());
      export_map_snapshot(rasterize_world(w, gw_c.planner_config().resolution), (dir / "world.pgm").string(),
                          (dir / "world.yaml").string());
      std::cout << "wrote " << (dir / "world.json").string() << ": " << w.segments.size() << " walls, "
                << w.objects.size() << " objects, " << w.targets.size() << " targets\n";
    } else if (*gd) {
      gd_spec.seed = gd_c.seed;
      const PlannerConfig c = gd_c.planner_config();
      const SyntheticData d = make_synthetic_data(gd_spec, c.sensor, c.motion, c.gt);
      const auto dir = gd_c.dir();
      save_dataset(d.train, (dir / "train.bin").string());
      save_dataset(d.held_out, (dir / "held_out.bin").string());
      std::cout << d.train.size() << " training tuples, " << d.held_out.size() << " held-out tuples\n";
    } else if (*tr) {
      tr_cfg.seed = tr_c.seed;
      tr_cfg.label_branch = !tr_no_label;
      const Dataset train_set = load_dataset(tr_train);
      const Dataset held = tr_held.empty() ? Dataset{} : load_dataset(tr_held);
      const auto r = train(train_set, held, tr_cfg, [](const EpochStats& s) {
        std::cout << std::fixed << std::setprecision(4) << "epoch " << s.epoch << " loss " << s.train_loss << " train "
                  << s.train_accuracy << " held-out " << s.test_accuracy << std::endl;
      });
      const auto dir = tr_c.dir();
      save_model(r.model, (dir / "model.bin").string());
      write_file(dir / "curve.csv", epoch_csv(r.curve));
      std::cout << "trained in " << r.seconds << " s\n";
    } else if (*ev) {
      const TcnModel<float> m = load_model(ev_model);
      const Dataset d = load_dataset(ev_data);
      TrainConfig cfg;
      cfg.corruption_rate = 0.0;
      std::cout << std::fixed << std::setprecision(4)
                << "teacher-forced accuracy (clean history): " << teacher_forced_accuracy(m, d, cfg) << '\n';
      print_eval("autoregressive", evaluate_classifier(m, d, ev_c.planner_config().ewa_decay));
    } else if (*ab) {
      ab_cfg.seed = ab_c.seed;
      const auto r = run_ablation(parse_ablation_kind(ab_kind), load_dataset(ab_train), load_dataset(ab_held), ab_cfg,
                                  ab_rates, [](const std::string& arm, const EpochStats& s) {
                                    std::cout << std::fixed << std::setprecision(4) << arm << " epoch " << s.epoch
                                              << " held-out " << s.test_accuracy << std::endl;
                                  });
      const auto dir = ab_c.dir();
      write_file(dir / "curves.csv", r.curves_csv());
      write_file(dir / "summary.csv", r.summary_csv());
      std::cout << r.summary_csv();
    } else if (*se) {
      const LineWorld w = load_world(se_world);
      const PlannerConfig c = se_c.planner_config();
      std::optional<TcnModel<float>> model;
      if (!se_model.empty()) model = load_model(se_model);
      const auto r = search_episode(w, c, parse_label_mode(se_mode), se_c.seed, model ? &*model : nullptr);
      const auto dir = se_c.dir();
      std::ofstream log(dir / "steps.jsonl");
      write_step_log(r, log);
      std::cout << "termination " << r.termination << ", time " << r.detection_time << " s, steps " << r.steps.size()
                << ", registry " << r.registry_size << '\n';
    } else if (*be) {
      be_worlds.archetype = parse_archetype(be_arch);
      be_worlds.seed = be_c.seed + 1000;
      ExperimentSpec spec;
      spec.worlds = bench_worlds(be_worlds, &spec.world_names);
      spec.difficulties.clear();
      for (const auto& d : be_diffs) spec.difficulties.push_back(parse_difficulty(d));
      spec.trials = be_trials;
      spec.config = be_c.planner_config();
      std::optional<TcnModel<float>> model;
      if (!be_model.empty()) model = load_model(be_model);
      spec.model = model ? &*model : nullptr;
      spec.planners = standard_arms(spec.config.weights, model.has_value());
      std::size_t n = 0;
      const ResultTable t = run_experiment(spec, [&](const TrialRecord& r) {
        ++n;
        if (r.termination == "error") std::cerr << "trial error: " << r.error << '\n';
        if (n % 20 == 0) std::cerr << n << " trials\n";
      });
      const auto dir = be_c.dir();
      write_file(dir / "trials.csv", t.trials_csv());
      write_file(dir / "cells.csv", t.cells_csv());
      write_file(dir / "table.txt", t.text());
      std::cout << t.text();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
