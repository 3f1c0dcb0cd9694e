// inverse-forge: command-line driver for the whole pipeline.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "forge/common/errors.hpp"
#include "forge/common/hash.hpp"
#include "forge/common/io.hpp"
#include "forge/datagen/dataset.hpp"
#include "forge/evaluation/closed_loop.hpp"
#include "forge/evaluation/metrics.hpp"
#include "forge/evaluation/pca.hpp"
#include "forge/evaluation/report.hpp"
#include "forge/evaluation/search.hpp"
#include "forge/inference/predict.hpp"
#include "forge/training/checkpoint.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

constexpr const char* kSeedEnv = "INVERSE_FORGE_SEED";

// Explicit flag, else the environment, else `fallback`.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t value, std::uint64_t fallback) {
  if (flag->count() > 0) return value;
  if (const char* env = std::getenv(kSeedEnv)) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string(kSeedEnv) + " must be a non-negative integer, got '" + env + "'");
  }
  return fallback;
}

sim::SimulatorSpec spec_or_default(const std::string& path) {
  return path.empty() ? sim::default_spec() : sim::load_spec(path);
}

std::string hash_of(const std::string& text) { return sha256_hex(text).substr(0, 16); }

std::string ratio_key(double r) {
  std::ostringstream o;
  o << r;
  return o.str();
}

void write_results(const evaluation::ReportInputs& r, const fs::path& out_dir) {
  write_file(out_dir / "results.json", evaluation::results_to_json(r));
  std::cerr << "wrote " << (out_dir / "results.json").string() << "\n";
}

// ---- gen-sim ------------------------------------------------------------------------

struct GenSimArgs {
  std::uint64_t seed = sim::kDefaultSpecSeed;
  std::size_t phases = 8;
  std::string out;
  CLI::Option* seed_flag = nullptr;
};

int gen_sim(const GenSimArgs& a) {
  const auto seed = resolve_seed(a.seed_flag, a.seed, sim::kDefaultSpecSeed);
  const auto spec = sim::generate_spec(seed, a.phases);
  sim::save_spec(spec, a.out);
  std::cerr << "simulator spec (seed " << seed << ", " << spec.phases() << " phases) -> " << a.out << "\n";
  return 0;
}

// ---- gen-data -----------------------------------------------------------------------

struct GenDataArgs {
  std::string kind = "neighborhood";
  std::size_t size = 1500;
  std::string sim;
  std::uint64_t seed = 0;
  double rel = 0.20;
  std::size_t folds = 5;
  bool swap_augment = false;
  std::string out;
  CLI::Option* seed_flag = nullptr;
};

int gen_data(const GenDataArgs& a) {
  datagen::DatasetOptions o;
  o.kind = datagen::dataset_kind_from_string(a.kind);
  o.size = a.size;
  o.seed = resolve_seed(a.seed_flag, a.seed, 0);
  o.rel = a.rel;
  o.folds = a.folds;
  o.swap_augment = a.swap_augment;
  const auto spec = spec_or_default(a.sim);
  const auto ds = datagen::build_dataset(o, spec);
  datagen::save_dataset(ds, a.out);
  std::cerr << ds.size() << " rows (" << a.kind << ", seed " << o.seed << ") -> " << a.out << "\n";
  return 0;
}

// ---- train --------------------------------------------------------------------------

struct TrainArgs {
  std::string config, data, out;
  int fold = 0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  CLI::Option* seed_flag = nullptr;
  CLI::Option* epochs_flag = nullptr;
  bool quiet = false;
};

int train_cmd(const TrainArgs& a) {
  auto cfg = a.config.empty() ? training::TrainConfig{} : training::config_from_json(read_file(a.config));
  cfg.seed = resolve_seed(a.seed_flag, a.seed, cfg.seed);
  if (a.epochs_flag->count() > 0) cfg.epochs = a.epochs;
  cfg.validate();
  const auto ds = datagen::load_dataset(a.data);
  std::vector<std::size_t> rows;
  if (a.fold < 0) {
    rows.resize(ds.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  } else {
    if (static_cast<std::size_t>(a.fold) >= ds.options.folds) {
      throw ConfigError("--fold " + std::to_string(a.fold) + " is outside the dataset's " +
                        std::to_string(ds.options.folds) + " folds");
    }
    rows = ds.rows_outside_fold(a.fold);
  }
  training::EpochCallback progress;
  if (!a.quiet) {
    progress = [](const training::EpochRecord& r) {
      if (r.epoch % 10 == 0 || r.epoch == 1) std::cerr << "epoch " << r.epoch << " objective " << r.objective << "\n";
    };
  }
  const auto ck = training::train(cfg, ds, rows, progress);
  training::save_checkpoint(ck, a.out);
  std::cerr << models::to_string(cfg.kind) << " trained on " << rows.size() << " rows, " << ck.log.epochs.size()
            << " epochs (" << ck.log.stop_reason << ") -> " << a.out << "\n";
  return 0;
}

// ---- predict ------------------------------------------------------------------------

struct PredictArgs {
  std::string ckpt, query, out;
  std::size_t n = 20;
  std::size_t modes = 1;
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
};

int predict_cmd(const PredictArgs& a) {
  const auto ck = training::load_checkpoint(a.ckpt);
  const auto q = inference::query_from_json(read_file(a.query), ck.schema);
  inference::InferenceConfig cfg;
  cfg.n = a.n;
  cfg.modes_per_mixture = a.modes;
  cfg.seed = resolve_seed(a.seed_flag, a.seed, 0);
  const auto json = inference::candidates_to_json(inference::predict_designs(ck, q, cfg));
  if (a.out.empty()) {
    std::cout << json;
  } else {
    write_file(a.out, json);
    std::cerr << "candidates -> " << a.out << "\n";
  }
  return 0;
}

// ---- eval ---------------------------------------------------------------------------

struct EvalArgs {
  std::string ckpt, data, out, sim;
  double mask_ratio = 0.0;
  int fold = -1;
  std::size_t max_rows = 0;
  std::size_t n = 20;
  std::string mask_mode;
  bool sweep = false;
  bool pca = false;
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
  CLI::Option* sim_flag = nullptr;
};

int eval_cmd(const EvalArgs& a) {
  const auto ck = training::load_checkpoint(a.ckpt);
  const auto ds = datagen::load_dataset(a.data);
  evaluation::EvalConfig ec;
  ec.inference.n = a.n;
  ec.inference.seed = resolve_seed(a.seed_flag, a.seed, 0);
  ec.mask_seed = ec.inference.seed;
  ec.max_rows = a.max_rows;
  ec.mask_mode = a.mask_mode.empty() ? ck.config.mask_mode : datagen::mask_mode_from_string(a.mask_mode);
  if (!(a.mask_ratio >= 0.0 && a.mask_ratio <= 1.0)) throw ConfigError("--mask-ratio must lie in [0, 1]");

  // Default test fold: the single fold the checkpoint did not train on (fold 0 otherwise).
  int fold = a.fold;
  if (fold < 0) fold = ck.training_rows == ds.size() ? 0 : [&] {
    for (int f = 0; f < static_cast<int>(ds.options.folds); ++f)
      if (ds.rows_outside_fold(f).size() == ck.training_rows) return f;
    return 0;
  }();

  const std::string method = models::to_string(ck.config.kind);
  evaluation::ReportInputs r;
  auto report = evaluation::evaluate_model(ck, ds, fold, a.mask_ratio, ec);
  std::cerr << method << " fold " << fold << " mask " << a.mask_ratio << ": min relative error "
            << report.relative_min().mean << "\n";
  (a.mask_ratio > 0.0 ? r.partial : r.full).push_back(std::move(report));
  if (a.sweep) {
    r.sweep = evaluation::missing_ratio_sweep(ck, ds, fold, evaluation::default_sweep_ratios(), ec);
  }
  if (a.sim_flag->count() > 0) {
    r.closed_loop = evaluation::closed_loop_fold(sim::load_spec(a.sim), ck, ds, fold, a.mask_ratio, ec);
    std::cerr << "closed-loop average min relative phase error " << r.closed_loop->average_relative() << "\n";
  }
  if (a.pca) {
    RowMatrix xs(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(sim::kElements));
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (std::size_t e = 0; e < sim::kElements; ++e) xs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)) = ds.compositions[i][e];
    const auto pca = evaluation::pca_fit(xs, 2);
    evaluation::PcaResult pr;
    pr.explained = pca.explained;
    const auto pd = pca.project(xs);
    for (Eigen::Index i = 0; i < pd.rows(); ++i) pr.points.push_back({"dataset", pd(i, 0), pd(i, 1)});
    auto rows = ds.rows_in_folds({fold});
    rows.resize(std::min<std::size_t>(rows.size(), 5));
    for (std::size_t row : rows) {
      const auto mask = evaluation::evaluation_mask(ec, row, a.mask_ratio, ds.phases(), ds.temps());
      const auto cands = inference::predict_designs(ck, inference::make_query(ds.diagrams[row], mask, ds.phases(), ds.temps()), ec.inference);
      RowMatrix c(static_cast<Eigen::Index>(cands.size()), static_cast<Eigen::Index>(sim::kElements));
      for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t e = 0; e < sim::kElements; ++e) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)) = cands[i].composition[e];
      const auto pc = pca.project(c);
      for (Eigen::Index i = 0; i < pc.rows(); ++i) pr.points.push_back({"candidates", pc(i, 0), pc(i, 1)});
    }
    r.pca = pr;
  }
  const std::string key = method + "@" + ratio_key(a.mask_ratio);
  r.seeds["data"] = ds.options.seed;
  r.seeds["train." + method] = ck.config.seed;
  r.seeds["eval." + key] = ec.inference.seed;
  r.config_hashes["train." + method] = hash_of(training::config_to_json(ck.config));
  r.config_hashes["data"] = hash_of(datagen::dataset_csv(ds));
  write_results(r, a.out);
  return 0;
}

// ---- search -------------------------------------------------------------------------

struct SearchArgs {
  std::string method, target, out, sim, data, ckpt;
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
};

int search_cmd(const SearchArgs& a) {
  const auto spec = spec_or_default(a.sim);
  const auto method = evaluation::search_method_from_string(a.method);
  training::Schema schema;
  for (auto name : sim::kElementNames) schema.elements.emplace_back(name);
  schema.labels = spec.labels;
  schema.temperatures = sim::temperature_grid();
  const auto q = inference::query_from_json(read_file(a.target), schema);

  evaluation::SearchTarget target;
  target.diagram = q.diagram;
  target.hidden = q.hidden;
  target.scale = a.data.empty() ? evaluation::PhaseScale::unit(spec.phases())
                                : evaluation::PhaseScale::of(datagen::load_dataset(a.data));
  const auto seed = resolve_seed(a.seed_flag, a.seed, 0);
  evaluation::ReportInputs r;
  r.traces.push_back(evaluation::search_baseline(method, spec, target, a.budget, seed));
  std::cerr << a.method << ": best error " << r.traces.back().final_error() << " after " << a.budget << " calls\n";
  if (!a.ckpt.empty()) {
    // The predicted design is scored once against the target; that check is not part of
    // the prediction itself, which makes no simulator call.
    const auto ck = training::load_checkpoint(a.ckpt);
    inference::InferenceConfig ic;
    ic.seed = seed;
    const auto cands = inference::predict_designs(ck, q, ic);
    if (cands.empty()) throw ContractError("the model produced no candidate for the target");
    r.predict_error = evaluation::search_objective(spec, target, cands.front().composition);
    std::cerr << "predict: error " << *r.predict_error << " with 0 search calls\n";
  }
  r.seeds["search." + a.method] = seed;
  r.config_hashes["search.target"] = hash_of(read_file(a.target));
  write_results(r, a.out);
  return 0;
}

// ---- make-query ---------------------------------------------------------------------

struct QueryArgs {
  std::string data, sim, composition, out;
  std::size_t row = 0;
  double mask_ratio = 0.0;
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
  CLI::Option* row_flag = nullptr;
};

sim::Composition parse_composition(const std::string& text) {
  sim::Composition x{};
  std::stringstream in(text);
  std::string item;
  double aux = 0;
  bool al_given = false;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--composition entry '" + item + "' is not Element=value");
    const auto e = sim::element_index(item.substr(0, eq));
    double v = 0;
    try {
      v = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--composition entry '" + item + "' has no numeric value");
    }
    x[e] = v;
    if (e == sim::kAluminium) al_given = true;
    else aux += v;
  }
  if (!al_given) x[sim::kAluminium] = 100.0 - aux;
  sim::validate_composition(x);
  return x;
}

int make_query_cmd(const QueryArgs& a) {
  std::vector<std::string> labels;
  std::vector<double> temps, diagram;
  if (!a.composition.empty()) {
    const auto d = sim::simulate(spec_or_default(a.sim), parse_composition(a.composition));
    labels = d.labels, temps = d.temperatures, diagram = d.values;
  } else if (!a.data.empty()) {
    const auto ds = datagen::load_dataset(a.data);
    if (a.row >= ds.size()) throw ConfigError("--row " + std::to_string(a.row) + " is outside the dataset");
    labels = ds.labels, temps = ds.temperatures, diagram = ds.diagrams[a.row];
  } else {
    throw ConfigError("make-query needs --composition or --data");
  }
  Rng rng(resolve_seed(a.seed_flag, a.seed, 0));
  const auto mask = datagen::sample_row_mask(labels.size(), a.mask_ratio, rng);
  const auto hidden = mask.hidden_flags(labels.size(), temps.size());
  nlohmann::ordered_json obs = nlohmann::ordered_json::object();
  for (std::size_t p = 0; p < labels.size(); ++p) {
    for (std::size_t t = 0; t < temps.size(); ++t) {
      if (hidden[p * temps.size() + t]) continue;
      std::ostringstream cell;
      cell << labels[p] << '@' << temps[t];
      obs[cell.str()] = diagram[p * temps.size() + t];
    }
  }
  nlohmann::ordered_json j;
  j["observed"] = obs;
  write_file(a.out, j.dump(2) + "\n");
  std::cerr << "query with " << obs.size() << " observed cells -> " << a.out << "\n";
  return 0;
}

// ---- report -------------------------------------------------------------------------

int report_cmd(const std::vector<std::string>& inputs, const std::string& out) {
  evaluation::ReportInputs all;
  for (const auto& in : inputs) {
    const fs::path p = fs::is_directory(in) ? fs::path(in) / "results.json" : fs::path(in);
    all.merge(evaluation::results_from_json(read_file(p)));
  }
  for (const auto& f : evaluation::emit_report(all, out)) std::cerr << "wrote " << f.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse alloy design: simulate, generate data, train, predict, evaluate, search, report"};
  app.require_subcommand(1);
  app.set_version_flag("--version", evaluation::version_string());

  GenSimArgs gs;
  auto* c_gs = app.add_subcommand("gen-sim", "Draw a synthetic simulator spec");
  gs.seed_flag = c_gs->add_option("--seed", gs.seed, "Spec seed");
  c_gs->add_option("--phases", gs.phases, "Phase count (LIQUID, FCC and compounds)")->check(CLI::Range(3, 64));
  c_gs->add_option("--out", gs.out, "Output spec JSON")->required();

  GenDataArgs gd;
  auto* c_gd = app.add_subcommand("gen-data", "Simulate a dataset");
  c_gd->add_option("--kind", gd.kind, "neighborhood or bo_driven")->check(CLI::IsMember({"neighborhood", "bo_driven"}));
  c_gd->add_option("--size", gd.size, "Row count")->check(CLI::PositiveNumber);
  c_gd->add_option("--sim", gd.sim, "Simulator spec JSON (default: built-in spec)")->check(CLI::ExistingFile);
  gd.seed_flag = c_gd->add_option("--seed", gd.seed, "Dataset seed");
  c_gd->add_option("--rel", gd.rel, "Neighborhood perturbation range");
  c_gd->add_option("--folds", gd.folds, "Cross-validation folds")->check(CLI::PositiveNumber);
  c_gd->add_flag("--swap-augment", gd.swap_augment, "Exchange the symmetric element pair with probability 1/2");
  c_gd->add_option("--out", gd.out, "Output directory")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model on all folds but one");
  c_tr->add_option("--config", tr.config, "Training config JSON")->check(CLI::ExistingFile);
  c_tr->add_option("--data", tr.data, "Dataset directory")->required();
  c_tr->add_option("--fold", tr.fold, "Held-out fold (-1 trains on every row)");
  tr.seed_flag = c_tr->add_option("--seed", tr.seed, "Overrides the config seed");
  tr.epochs_flag = c_tr->add_option("--epochs", tr.epochs, "Overrides the config epoch cap");
  c_tr->add_flag("--quiet", tr.quiet, "No per-epoch progress");
  c_tr->add_option("--out", tr.out, "Checkpoint directory")->required();

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Predict candidate designs for a target");
  c_pr->add_option("--ckpt", pr.ckpt, "Checkpoint directory")->required();
  c_pr->add_option("--query", pr.query, "Query JSON")->required()->check(CLI::ExistingFile);
  c_pr->add_option("--n", pr.n, "Latent draws")->check(CLI::PositiveNumber);
  c_pr->add_option("--modes", pr.modes, "Gumbel draws per mixture")->check(CLI::PositiveNumber);
  pr.seed_flag = c_pr->add_option("--seed", pr.seed, "Inference seed");
  c_pr->add_option("--out", pr.out, "Output JSON (default: standard output)");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Score a checkpoint on a held-out fold");
  c_ev->add_option("--ckpt", ev.ckpt, "Checkpoint directory")->required();
  c_ev->add_option("--data", ev.data, "Dataset directory")->required();
  c_ev->add_option("--mask-ratio", ev.mask_ratio, "Fraction of phases hidden");
  c_ev->add_option("--mask-mode", ev.mask_mode, "rows or cells (default: as trained)")->check(CLI::IsMember({"rows", "cells"}));
  c_ev->add_option("--fold", ev.fold, "Test fold (default: the one left out of training)");
  c_ev->add_option("--max-rows", ev.max_rows, "Evaluate at most this many rows (0 = all)");
  c_ev->add_option("--n", ev.n, "Candidates per target")->check(CLI::PositiveNumber);
  c_ev->add_flag("--sweep", ev.sweep, "Also sweep mask ratios 0.1 to 0.9 (hybrid models)");
  c_ev->add_flag("--pca", ev.pca, "Also project dataset and candidates onto two principal components");
  ev.sim_flag = c_ev->add_option("--sim", ev.sim, "Simulator spec JSON; enables closed-loop re-simulation")->check(CLI::ExistingFile);
  ev.seed_flag = c_ev->add_option("--seed", ev.seed, "Mask and inference seed");
  c_ev->add_option("--out", ev.out, "Output directory for results.json")->required();

  SearchArgs se;
  auto* c_se = app.add_subcommand("search", "Black-box search for a target with a simulator budget");
  c_se->add_option("--method", se.method, "random, ga or bo")->required()->check(CLI::IsMember({"random", "ga", "bo"}));
  c_se->add_option("--target", se.target, "Target query JSON")->required()->check(CLI::ExistingFile);
  c_se->add_option("--budget", se.budget, "Simulator calls");
  c_se->add_option("--sim", se.sim, "Simulator spec JSON (default: built-in spec)")->check(CLI::ExistingFile);
  c_se->add_option("--data", se.data, "Dataset whose phase ranges scale the error");
  c_se->add_option("--ckpt", se.ckpt, "Also score the model's top prediction for the same target");
  se.seed_flag = c_se->add_option("--seed", se.seed, "Search seed");
  c_se->add_option("--out", se.out, "Output directory for results.json")->required();

  QueryArgs qa;
  auto* c_q = app.add_subcommand("make-query", "Write a query JSON from a composition or a dataset row");
  c_q->add_option("--composition", qa.composition, "e.g. Cr=0.24,Mg=2.96,Zn=4.29 (Al takes the balance)");
  c_q->add_option("--sim", qa.sim, "Simulator spec JSON (default: built-in spec)")->check(CLI::ExistingFile);
  c_q->add_option("--data", qa.data, "Dataset directory");
  c_q->add_option("--row", qa.row, "Dataset row");
  c_q->add_option("--mask-ratio", qa.mask_ratio, "Fraction of phases left unspecified");
  qa.seed_flag = c_q->add_option("--seed", qa.seed, "Mask seed");
  c_q->add_option("--out", qa.out, "Output query JSON")->required();

  std::vector<std::string> rep_in;
  std::string rep_out;
  auto* c_rep = app.add_subcommand("report", "Merge results and write tables, plots and a manifest");
  c_rep->add_option("--in", rep_in, "results.json files or directories holding one")->required()->expected(1, -1);
  c_rep->add_option("--out", rep_out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (c_gs->parsed()) return gen_sim(gs);
    if (c_gd->parsed()) return gen_data(gd);
    if (c_tr->parsed()) return train_cmd(tr);
    if (c_pr->parsed()) return predict_cmd(pr);
    if (c_ev->parsed()) return eval_cmd(ev);
    if (c_se->parsed()) return search_cmd(se);
    if (c_q->parsed()) return make_query_cmd(qa);
    if (c_rep->parsed()) return report_cmd(rep_in, rep_out);
  } catch (const forge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
