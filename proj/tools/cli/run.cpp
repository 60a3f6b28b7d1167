#include "cli/cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "lesioneval/error.hpp"

#ifndef LESIONEVAL_VERSION
#define LESIONEVAL_VERSION "dev"
#endif

namespace lesioneval::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string output;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

struct EvalOverrides {
  std::string manifest;
  std::optional<double> threshold;
};

EvalConfig eval_config(const Globals& g, const EvalOverrides& o) {
  EvalConfig c;
  c.detection.threads = 0;
  if (!g.config.empty()) c = load_config(g.config);
  if (!o.manifest.empty()) c.manifest = o.manifest;
  if (o.threshold) {
    if (!(*o.threshold >= 0.0 && *o.threshold <= 1.0)) throw InputError("--threshold: must lie in [0, 1]");
    c.threshold = o.threshold;
  }
  if (!g.output.empty()) c.output = g.output;
  if (g.threads) c.detection.threads = *g.threads;
  if (g.seed) c.seed = *g.seed;
  return c;
}

void add_eval_overrides(CLI::App* sub, EvalOverrides& o) {
  sub->add_option("--manifest", o.manifest, "Cohort manifest (overrides the config)");
  sub->add_option("--threshold", o.threshold, "Decision threshold (overrides the config)");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Lesion-level detection and segmentation evaluation", "lesioneval"};
  app.set_version_flag("--version", LESIONEVAL_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Evaluation config (JSON)");
  app.add_option("--output", g.output, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--seed", g.seed, "Random seed");

  EvalOverrides eval_o, froc_o, thr_o, vol_o;
  auto* eval = app.add_subcommand("eval", "Per-patient and per-lesion metrics with a median (IQR) summary");
  add_eval_overrides(eval, eval_o);
  auto* froc_cmd = app.add_subcommand("froc", "FROC curves for all and large lesions");
  add_eval_overrides(froc_cmd, froc_o);
  auto* thr = app.add_subcommand("threshold", "Pick the F2-optimal threshold on a split");
  add_eval_overrides(thr, thr_o);
  auto* vol = app.add_subcommand("volume-curve", "Sensitivity and FPPI against minimum lesion volume");
  add_eval_overrides(vol, vol_o);

  StatsOptions stats_o;
  std::vector<std::string> method_args;
  std::optional<std::size_t> stats_m;
  auto* stats = app.add_subcommand("stats", "Normality screen, rank tests and Bonferroni correction");
  stats->add_option("--method", method_args, "NAME=PATH (eval output directory or metric CSV), repeatable")
      ->required();
  stats->add_option("--m", stats_m, "Bonferroni family size (default: number of comparisons)");
  stats->add_option("--alpha", stats_o.alpha, "Normality screen significance level");

  PhantomOptions ph_o;
  std::string ph_spec;
  std::optional<int> ph_random;
  bool ph_uncompressed = false;
  auto* phantom = app.add_subcommand("phantom", "Synthetic cohort with designed TP/FP/FN counts");
  phantom->add_option("--spec", ph_spec, "Phantom spec (JSON)");
  phantom->add_option("--random", ph_random, "Number of random phantoms");
  phantom->add_option("--noise-level", ph_o.noise_level, "Background noise ceiling for random phantoms");
  phantom->add_option("--jitter", ph_o.boundary_jitter_voxels, "Boundary jitter (voxels) for random phantoms");
  phantom->add_flag("--uncompressed", ph_uncompressed, "Write .nii instead of .nii.gz");

  StandardizeCommand st_o;
  std::string st_in, st_ref, st_out, st_landmarks;
  auto* standardize_cmd = app.add_subcommand("standardize", "Piecewise-linear landmark intensity standardization");
  standardize_cmd->add_option("input", st_in, "Input volume")->required();
  standardize_cmd->add_option("reference", st_ref, "Reference volume or landmark profile (JSON)")->required();
  standardize_cmd->add_option("result", st_out, "Standardized output volume")->required();
  standardize_cmd->add_option("--percentiles", st_o.percentiles, "Landmark percentiles");
  standardize_cmd->add_flag("--preserve-background", st_o.preserve_background, "Leave voxels <= 0 unchanged");
  standardize_cmd->add_option("--landmarks-out", st_landmarks, "Write source and reference profiles (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (eval->parsed()) cmd_eval(eval_config(g, eval_o));
  if (froc_cmd->parsed()) cmd_froc(eval_config(g, froc_o));
  if (thr->parsed()) cmd_threshold(eval_config(g, thr_o));
  if (vol->parsed()) cmd_volume_curve(eval_config(g, vol_o));

  if (stats->parsed()) {
    EvalConfig c;
    if (!g.config.empty()) c = load_config(g.config);
    for (const auto& arg : method_args) {
      const auto eq = arg.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
        throw InputError(fmt::format("--method '{}': expected NAME=PATH", arg));
      }
      stats_o.methods.emplace_back(arg.substr(0, eq), arg.substr(eq + 1));
    }
    stats_o.bonferroni_m = stats_m ? stats_m : c.bonferroni_m;
    stats_o.output = g.output.empty() ? c.output : fs::path(g.output);
    cmd_stats(stats_o);
  }

  if (phantom->parsed()) {
    if (!ph_spec.empty()) ph_o.spec = ph_spec;
    ph_o.random_count = ph_random;
    ph_o.seed = g.seed.value_or(0);
    ph_o.compress = !ph_uncompressed;
    ph_o.threads = g.threads.value_or(0);
    ph_o.output = g.output.empty() ? fs::path("lesioneval-phantom") : fs::path(g.output);
    cmd_phantom(ph_o);
  }

  if (standardize_cmd->parsed()) {
    st_o.input = st_in;
    st_o.reference = st_ref;
    st_o.output = st_out;
    if (!st_landmarks.empty()) st_o.landmarks_out = st_landmarks;
    cmd_standardize(st_o);
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "lesioneval");
  std::vector<char*> argv;
  argv.reserve(args.size() + 1);
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(args.size()), argv.data());
}

}  // namespace lesioneval::cli
