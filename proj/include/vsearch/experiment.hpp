#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "vsearch/dataset.hpp"
#include "vsearch/episode.hpp"
#include "vsearch/training.hpp"
#include "vsearch/world_gen.hpp"

namespace vsearch {

// --- search comparisons ---

struct PlannerArm {
  std::string name;
  LabelMode mode = LabelMode::ground_truth;
  UtilityWeights weights;
};

/// Worlds are target-free layouts unless `worlds_have_targets`; targets are then placed per
/// (seed, world, difficulty) so every planner faces the same target in a trial.
struct ExperimentSpec {
  std::vector<LineWorld> worlds;
  std::vector<std::string> world_names;
  bool worlds_have_targets = false;
  std::vector<Difficulty> difficulties{Difficulty::hard};
  std::vector<PlannerArm> planners;
  int trials = 10;
  std::vector<std::uint64_t> seeds;  // one per trial; empty means 0..trials-1
  PlannerConfig config;              // sensor, motion, classifier and map settings; budget_s is the trial budget
  const TcnModel<float>* model = nullptr;

  std::vector<std::uint64_t> trial_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> s(static_cast<std::size_t>(trials));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
    return s;
  }

  void validate() const {
    if (worlds.empty()) throw std::invalid_argument("experiment needs at least one world");
    if (!world_names.empty() && world_names.size() != worlds.size())
      throw std::invalid_argument("one name per world required");
    if (planners.empty()) throw std::invalid_argument("experiment needs at least one planner");
    if (difficulties.empty()) throw std::invalid_argument("experiment needs at least one difficulty");
    if (seeds.empty() && trials < 1) throw std::invalid_argument("trials must be positive");
    for (const auto& p : planners) {
      p.weights.validate();
      if (p.mode == LabelMode::learned && model == nullptr)
        throw std::invalid_argument("planner '" + p.name + "' needs a learned model");
    }
    config.validate();
  }
};

struct TrialRecord {
  std::string planner;
  std::size_t world = 0;
  Difficulty difficulty = Difficulty::hard;
  std::uint64_t seed = 0;
  bool found = false;
  double time = 0.0;  // detection time, or the budget on failure
  std::string termination;
  std::size_t steps = 0;
  std::size_t registry_size = 0;
  double label_accuracy = 0.0;
  std::string error;
};

struct CellSummary {
  std::string planner;
  std::optional<std::size_t> world;  // nullopt: pooled over worlds
  Difficulty difficulty = Difficulty::hard;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double mean_time = 0.0;
  double median_time = 0.0;
  double success_rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::domain_error("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct ResultTable {
  double budget_s = 0.0;
  std::vector<std::string> world_names;
  std::vector<TrialRecord> records;

  CellSummary summarize(const std::string& planner, Difficulty d, std::optional<std::size_t> world = std::nullopt) const {
    CellSummary c;
    c.planner = planner;
    c.world = world;
    c.difficulty = d;
    std::vector<double> times;
    for (const auto& r : records) {
      if (r.planner != planner || r.difficulty != d || (world && r.world != *world)) continue;
      times.push_back(r.time);
      c.successes += r.found ? 1 : 0;
    }
    c.trials = times.size();
    if (!times.empty()) {
      double s = 0.0;
      for (double t : times) s += t;
      c.mean_time = s / static_cast<double>(times.size());
      c.median_time = median(times);
    }
    return c;
  }

  std::vector<std::string> planners() const {
    std::vector<std::string> out;
    for (const auto& r : records)
      if (std::find(out.begin(), out.end(), r.planner) == out.end()) out.push_back(r.planner);
    return out;
  }
  std::vector<Difficulty> difficulties() const {
    std::vector<Difficulty> out;
    for (const auto& r : records)
      if (std::find(out.begin(), out.end(), r.difficulty) == out.end()) out.push_back(r.difficulty);
    return out;
  }

  std::string world_name(std::size_t w) const {
    return w < world_names.size() ? world_names[w] : "world" + std::to_string(w);
  }

  /// One row per trial.
  std::string trials_csv() const {
    std::ostringstream o;
    o << std::setprecision(10);
    o << "planner,world,difficulty,seed,found,time_s,termination,steps,registry_size,label_accuracy,error\n";
    for (const auto& r : records)
      o << r.planner << ',' << world_name(r.world) << ',' << to_string(r.difficulty) << ',' << r.seed << ','
        << (r.found ? 1 : 0) << ',' << r.time << ',' << r.termination << ',' << r.steps << ',' << r.registry_size << ','
        << r.label_accuracy << ',' << r.error << '\n';
    return o.str();
  }

  /// One row per (planner, world, difficulty) cell plus pooled rows with world "all".
  std::string cells_csv() const {
    std::ostringstream o;
    o << std::setprecision(10);
    o << "planner,world,difficulty,trials,success_rate,mean_time_s,median_time_s\n";
    const auto row = [&](const CellSummary& c) {
      o << c.planner << ',' << (c.world ? world_name(*c.world) : std::string("all")) << ',' << to_string(c.difficulty)
        << ',' << c.trials << ',' << c.success_rate() << ',' << c.mean_time << ',' << c.median_time << '\n';
    };
    std::size_t n_worlds = 0;
    for (const auto& r : records) n_worlds = std::max(n_worlds, r.world + 1);
    for (const auto& p : planners())
      for (auto d : difficulties()) {
        for (std::size_t w = 0; w < n_worlds; ++w) {
          const auto c = summarize(p, d, w);
          if (c.trials) row(c);
        }
        row(summarize(p, d));
      }
    return o.str();
  }

  /// Mean time with success rate in parentheses, pooled over worlds.
  std::string text() const {
    std::ostringstream o;
    o << std::fixed << std::setprecision(1);
    const auto ds = difficulties();
    o << std::left << std::setw(24) << "planner";
    for (auto d : ds) o << std::setw(26) << (std::string(to_string(d)) + " mean (success) median");
    o << '\n';
    for (const auto& p : planners()) {
      o << std::setw(24) << p;
      for (auto d : ds) {
        const auto c = summarize(p, d);
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(1) << c.mean_time << " (" << std::setprecision(0)
             << 100.0 * c.success_rate() << "%) " << std::setprecision(1) << c.median_time;
        o << std::setw(26) << cell.str();
      }
      o << '\n';
    }
    o << "failed trials count as the full budget of " << budget_s << " s\n";
    return o.str();
  }
};

/// Target placement for one trial; identical across planners.
inline LineWorld trial_world(const ExperimentSpec& spec, std::size_t world, Difficulty d, std::uint64_t seed) {
  const LineWorld& base = spec.worlds.at(world);
  if (spec.worlds_have_targets) return base;
  return place_targets(base, d, derive_seed(seed, {0x7a, world, static_cast<std::uint64_t>(d)}));
}

inline TrialRecord run_trial(const ExperimentSpec& spec, const PlannerArm& arm, std::size_t world, Difficulty d,
                             std::uint64_t seed) {
  TrialRecord r;
  r.planner = arm.name;
  r.world = world;
  r.difficulty = d;
  r.seed = seed;
  r.time = spec.config.budget_s;
  try {
    const LineWorld w = trial_world(spec, world, d, seed);
    PlannerConfig cfg = spec.config;
    cfg.weights = arm.weights;
    const EpisodeResult e = search_episode(w, cfg, arm.mode, seed, spec.model);
    r.found = e.found;
    if (e.found) r.time = e.detection_time;
    r.termination = e.termination;
    r.steps = e.steps.size();
    r.registry_size = e.registry_size;
    r.label_accuracy = e.label_accuracy;
  } catch (const std::exception& ex) {
    r.termination = "error";
    r.error = ex.what();
    std::replace(r.error.begin(), r.error.end(), ',', ';');
  }
  return r;
}

/// Runs every (planner, world, difficulty, seed) trial. `on_trial` sees each record as it lands.
inline ResultTable run_experiment(const ExperimentSpec& spec,
                                  const std::function<void(const TrialRecord&)>& on_trial = {}) {
  spec.validate();
  ResultTable t;
  t.budget_s = spec.config.budget_s;
  t.world_names = spec.world_names;
  const auto seeds = spec.trial_seeds();
  for (auto d : spec.difficulties)
    for (std::size_t w = 0; w < spec.worlds.size(); ++w)
      for (auto s : seeds)
        for (const auto& arm : spec.planners) {
          t.records.push_back(run_trial(spec, arm, w, d, s));
          if (on_trial) on_trial(t.records.back());
        }
  return t;
}

// --- desk-scale benchmark ---

/// Simulated-time budgets per archetype and difficulty.
inline double bench_budget(Archetype a, Difficulty d) {
  if (a == Archetype::apartment) return d == Difficulty::easy ? 120.0 : 180.0;
  return d == Difficulty::easy ? 180.0 : 300.0;
}

struct BenchWorldSpec {
  Archetype archetype = Archetype::apartment;
  int n_worlds = 20;
  double width = 12.0;
  double height = 16.0;
  double object_density = 0.01;
  std::uint64_t seed = 1000;
};

/// Target-free layouts for a sweep; world i uses seed derive_seed(seed, {i}).
inline std::vector<LineWorld> bench_worlds(const BenchWorldSpec& b, std::vector<std::string>* names = nullptr) {
  std::vector<LineWorld> out;
  for (int i = 0; i < b.n_worlds; ++i) {
    WorldGenParams p;
    p.archetype = b.archetype;
    p.width = b.width;
    p.height = b.height;
    p.object_density = b.object_density;
    p.seed = derive_seed(b.seed, {static_cast<std::uint64_t>(i)});
    out.push_back(generate_layout(p).world);
    if (names) names->push_back(std::string(to_string(b.archetype)) + std::to_string(i));
  }
  return out;
}

/// Label-informed planner with ground-truth or learned labels next to the label-free baseline.
inline std::vector<PlannerArm> standard_arms(const UtilityWeights& w, bool learned) {
  std::vector<PlannerArm> arms{{"ground_truth", LabelMode::ground_truth, w}};
  if (learned) arms.push_back({"learned", LabelMode::learned, w});
  UtilityWeights mfe = w;
  mfe.w_nonmap = 0.0;
  arms.push_back({"mfe", LabelMode::none, mfe});
  return arms;
}

// --- synthetic training data ---

struct SyntheticDataSpec {
  int n_train_worlds = 8;
  int n_held_out_worlds = 2;
  double width = 20.0;
  double height = 30.0;
  double object_density = 0.1;
  double train_tour_s = 600.0;
  double held_out_tour_s = 300.0;
  std::uint64_t seed = 100;
};

struct SyntheticData {
  std::vector<LineWorld> worlds;  // training worlds first
  Dataset train;
  Dataset held_out;
};

/// Archetypes cycle apartment, office, hallway; each world gets one random tour.
inline SyntheticData make_synthetic_data(const SyntheticDataSpec& s, const SensorSpec& spec, const MotionSpec& motion,
                                         const ClassifierParams& gt) {
  SyntheticData out;
  const int n = s.n_train_worlds + s.n_held_out_worlds;
  std::vector<std::vector<std::vector<Pose>>> paths;
  for (int i = 0; i < n; ++i) {
    WorldGenParams p;
    p.archetype = static_cast<Archetype>(i % 3);
    p.width = s.width;
    p.height = s.height;
    p.object_density = s.object_density;
    p.seed = s.seed + static_cast<std::uint64_t>(i);
    out.worlds.push_back(generate_world(p, Difficulty::easy));
    const double dur = i < s.n_train_worlds ? s.train_tour_s : s.held_out_tour_s;
    paths.push_back({random_tour(out.worlds.back(), dur, motion, derive_seed(s.seed, {0x70, static_cast<std::uint64_t>(i)}))});
  }
  const Dataset all = generate_dataset(out.worlds, paths, spec, motion, gt, s.seed);
  std::vector<int> held;
  for (int i = s.n_train_worlds; i < n; ++i) held.push_back(i);
  out.train = all.filter_worlds(held, false);
  out.held_out = all.filter_worlds(held, true);
  return out;
}

// --- classifier evaluation ---

struct ClassifierEval {
  double accuracy = 0.0;
  double stderr_ = 0.0;
  double majority_accuracy = 0.0;
  double majority_stderr = 0.0;
  std::int8_t majority_label = 1;
  std::size_t scans = 0;
  double nonmap_fraction = 0.0;  // of all beams
  double nonmap_recall = 0.0;    // non-map beams predicted non-map
};

/// Per-run labeler: called once per scan in temporal order with fresh state for every run.
using ScanLabeler = std::function<std::vector<std::int8_t>(const DatasetTuple&)>;
using LabelerFactory = std::function<ScanLabeler()>;

namespace detail {
inline std::pair<double, double> mean_stderr(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()))};
}
}  // namespace detail

/// Per-scan accuracy of `make` against the dataset's ground-truth labels, with the constant
/// majority-label baseline computed on the same scans.
inline ClassifierEval evaluate_labeler(const LabelerFactory& make, const Dataset& d) {
  ClassifierEval e;
  std::size_t nonmap = 0, total = 0, recalled = 0;
  for (const auto& t : d.tuples)
    for (auto l : t.labels) {
      nonmap += l == kNonMapLabel;
      ++total;
    }
  e.majority_label = 2 * nonmap > total ? kNonMapLabel : std::int8_t{1};
  std::vector<double> acc, base;
  for (const auto& [b, end] : d.runs()) {
    ScanLabeler label = make();
    for (std::size_t i = b; i < end; ++i) {
      const auto& t = d.tuples[i];
      const auto pred = label(t);
      acc.push_back(accuracy(pred, t.labels));
      std::size_t agree = 0;
      for (std::size_t j = 0; j < t.labels.size(); ++j) {
        agree += t.labels[j] == e.majority_label;
        recalled += t.labels[j] == kNonMapLabel && pred[j] == kNonMapLabel;
      }
      base.push_back(static_cast<double>(agree) / static_cast<double>(t.labels.size()));
    }
  }
  std::tie(e.accuracy, e.stderr_) = detail::mean_stderr(acc);
  std::tie(e.majority_accuracy, e.majority_stderr) = detail::mean_stderr(base);
  e.scans = acc.size();
  e.nonmap_fraction = total ? static_cast<double>(nonmap) / static_cast<double>(total) : 0.0;
  e.nonmap_recall = nonmap ? static_cast<double>(recalled) / static_cast<double>(nonmap) : 0.0;
  return e;
}

/// Auto-regressive inference from a zero-bootstrapped history along every run.
inline ClassifierEval evaluate_classifier(const TcnModel<float>& model, const Dataset& d, double ewa_decay = 0.5) {
  return evaluate_labeler(
      [&] {
        auto buf = std::make_shared<HistoryBuffer>(model.k(), model.n_beams());
        return ScanLabeler([&model, buf, &d, ewa_decay](const DatasetTuple& t) {
          return infer_step(model, *buf, t.pose, t.ranges, d.max_range, ewa_decay);
        });
      },
      d);
}

/// Simulates and labels the trajectories first, then evaluates as above.
inline ClassifierEval evaluate_classifier(const TcnModel<float>& model, const std::vector<LineWorld>& worlds,
                                          const std::vector<std::vector<std::vector<Pose>>>& paths,
                                          const SensorSpec& spec, const MotionSpec& motion, const ClassifierParams& gt,
                                          std::uint64_t seed, double ewa_decay = 0.5) {
  return evaluate_classifier(model, generate_dataset(worlds, paths, spec, motion, gt, seed), ewa_decay);
}

inline LabelerFactory oracle_labeler() {
  return [] { return ScanLabeler([](const DatasetTuple& t) { return t.labels; }); };
}
inline LabelerFactory constant_labeler(std::int8_t label) {
  return [label] {
    return ScanLabeler([label](const DatasetTuple& t) { return std::vector<std::int8_t>(t.labels.size(), label); });
  };
}

// --- ablations ---

enum class AblationKind { label_encoder, noise_sweep };

inline const char* to_string(AblationKind k) { return k == AblationKind::label_encoder ? "label_encoder" : "noise_sweep"; }
inline AblationKind parse_ablation_kind(const std::string& s) {
  if (s == "label_encoder") return AblationKind::label_encoder;
  if (s == "noise_sweep") return AblationKind::noise_sweep;
  throw std::invalid_argument("unknown ablation '" + s + "'");
}

/// Trailing mean over up to `window` values ending at each index.
inline std::vector<double> moving_average(const std::vector<double>& v, int window = 5) {
  if (window < 1) throw std::invalid_argument("moving-average window must be positive");
  std::vector<double> out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v[i];
    if (i >= static_cast<std::size_t>(window)) s -= v[i - static_cast<std::size_t>(window)];
    out[i] = s / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

struct AblationArm {
  std::string name;
  TrainConfig config;
  std::vector<EpochStats> curve;
  double final_test_accuracy = 0.0;
  double seconds = 0.0;
};

struct AblationResult {
  AblationKind kind = AblationKind::label_encoder;
  std::vector<AblationArm> arms;

  const AblationArm& arm(const std::string& name) const {
    for (const auto& a : arms)
      if (a.name == name) return a;
    throw std::out_of_range("no ablation arm '" + name + "'");
  }

  /// Plot-ready rows: arm, epoch, split, accuracy and its 5-step moving average.
  std::string curves_csv() const {
    std::ostringstream o;
    o << std::setprecision(10) << "arm,epoch,split,accuracy,moving_average\n";
    for (const auto& a : arms) {
      std::vector<double> tr, te;
      for (const auto& s : a.curve) {
        tr.push_back(s.train_accuracy);
        te.push_back(s.test_accuracy);
      }
      const auto mtr = moving_average(tr), mte = moving_average(te);
      for (std::size_t i = 0; i < a.curve.size(); ++i) {
        o << a.name << ',' << a.curve[i].epoch << ",train," << tr[i] << ',' << mtr[i] << '\n';
        o << a.name << ',' << a.curve[i].epoch << ",test," << te[i] << ',' << mte[i] << '\n';
      }
    }
    return o.str();
  }

  std::string summary_csv() const {
    std::ostringstream o;
    o << std::setprecision(10) << "arm,label_branch,corruption_rate,final_test_accuracy,seconds\n";
    for (const auto& a : arms)
      o << a.name << ',' << (a.config.label_branch ? 1 : 0) << ',' << a.config.corruption_rate << ','
        << a.final_test_accuracy << ',' << a.seconds << '\n';
    return o.str();
  }
};

inline std::vector<double> default_noise_rates() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}; }

/// label_encoder trains with and without the label branch; noise_sweep trains at each rate.
/// Every arm shares the base seed and therefore the same initial weights for shared tensors.
inline AblationResult run_ablation(AblationKind kind, const Dataset& train_set, const Dataset& held_out,
                                   const TrainConfig& base, const std::vector<double>& rates = default_noise_rates(),
                                   const std::function<void(const std::string&, const EpochStats&)>& on_epoch = {}) {
  AblationResult r;
  r.kind = kind;
  std::vector<std::pair<std::string, TrainConfig>> arms;
  if (kind == AblationKind::label_encoder) {
    TrainConfig with = base, without = base;
    with.label_branch = true;
    without.label_branch = false;
    arms = {{"with_label_encoder", with}, {"without_label_encoder", without}};
  } else {
    if (rates.empty()) throw std::invalid_argument("noise sweep needs at least one rate");
    for (double rate : rates) {
      TrainConfig c = base;
      c.corruption_rate = rate;
      std::ostringstream name;
      name << "noise_" << std::lround(rate * 100.0);
      arms.emplace_back(name.str(), c);
    }
  }
  for (const auto& [name, cfg] : arms) {
    const std::string arm_name = name;
    auto t = train(train_set, held_out, cfg, [&](const EpochStats& s) {
      if (on_epoch) on_epoch(arm_name, s);
    });
    AblationArm a;
    a.name = name;
    a.config = cfg;
    a.curve = t.curve;
    a.final_test_accuracy = t.curve.empty() ? 0.0 : t.curve.back().test_accuracy;
    a.seconds = t.seconds;
    r.arms.push_back(std::move(a));
  }
  return r;
}

}  // namespace vsearch
