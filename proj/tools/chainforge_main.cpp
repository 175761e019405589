// chainforge command line: synthetic data generation, source-model training,
// and the experiment runners, all emitting the shared record CSV schema.

#include "chainforge/artifact.hpp"
#include "chainforge/errors.hpp"
#include "chainforge/forest.hpp"
#include "chainforge/harness.hpp"
#include "chainforge/synth.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace chainforge;

std::uint64_t resolve_seed(std::int64_t flag_value, bool flag_given) {
  if (flag_given) return static_cast<std::uint64_t>(flag_value);
  if (const char* env = std::getenv("CHAINFORGE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("CHAINFORGE_SEED is not an integer: " + std::string(env));
    }
  }
  return 1;
}

std::string path_stem(const std::string& p) { return std::filesystem::path(p).stem().string(); }

int run_gen(const std::string& concept_name, long n, double noise, long d, long m,
            std::uint64_t seed, const std::string& out) {
  LabeledDataset data = [&] {
    if (concept_name == "xor" || concept_name == "and") {
      ToyConfig cfg;
      cfg.concept_ = concept_name == "xor" ? ToyConcept::XOR : ToyConcept::AND;
      cfg.n = n;
      cfg.input_noise_sd = noise;
      cfg.rng = RandomSource(seed, "gen-" + concept_name);
      return gen_toy(cfg);
    }
    if (concept_name == "independent") {
      IndependentConceptConfig cfg;
      cfg.n = n;
      cfg.d = d;
      cfg.m = m;
      cfg.noise_sd = noise;
      cfg.task_kind = TaskKind::regression;
      cfg.rng = RandomSource(seed, "gen-independent");
      return gen_independent_concepts(cfg);
    }
    throw std::invalid_argument("unknown concept '" + concept_name + "'");
  }();
  if (out.empty())
    write_csv(data, std::cout);
  else
    write_csv(data, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainforge: multi-task composition and transfer-chain experiments"};
  app.require_subcommand(1);

  std::int64_t seed_flag = 1;
  bool seed_given = false;
  app.add_flag_callback("--version", [] {
    std::cout << "chainforge 1.0\n";
    std::exit(0);
  });

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset as CSV");
  std::string gen_concept = "xor";
  long gen_n = 200;
  double gen_noise = 0.05;
  long gen_d = 5;
  long gen_m = 3;
  std::string gen_out;
  gen->add_option("--concept", gen_concept, "xor | and | independent")
      ->check(CLI::IsMember({"xor", "and", "independent"}));
  gen->add_option("--n", gen_n, "instance count");
  gen->add_option("--noise", gen_noise, "input jitter sd (toys) or target noise sd");
  gen->add_option("--d", gen_d, "input dimension (independent only)");
  gen->add_option("--m", gen_m, "target count (independent only)");
  gen->add_option("--out", gen_out, "output CSV path (stdout when omitted)");
  auto* gen_seed = gen->add_option("--seed", seed_flag, "random seed");

  // train-source
  auto* ts = app.add_subcommand("train-source", "train a black-box forest source model");
  std::string ts_data;
  long ts_labels = 0;
  std::string ts_out;
  int ts_trees = 100;
  int ts_depth = 25;
  ts->add_option("--data", ts_data, "training CSV")->required();
  ts->add_option("--labels-last", ts_labels, "number of trailing label columns")->required();
  ts->add_option("--out", ts_out, "output .model path")->required();
  ts->add_option("--trees", ts_trees, "trees per label");
  ts->add_option("--max-depth", ts_depth, "maximum tree depth");
  auto* ts_seed = ts->add_option("--seed", seed_flag, "random seed");

  // interaction
  auto* ia = app.add_subcommand("interaction", "BR vs ECC interaction study");
  std::string ia_data;
  long ia_labels = 0;
  int ia_folds = 5;
  std::string ia_out = "interaction.csv";
  std::string ia_name;
  ia->add_option("--data", ia_data, "dataset CSV")->required();
  ia->add_option("--labels-last", ia_labels, "number of trailing label columns")->required();
  ia->add_option("--folds", ia_folds, "cross-validation folds");
  ia->add_option("--out", ia_out, "output record CSV");
  ia->add_option("--name", ia_name, "dataset name for record ids (default: file stem)");
  auto* ia_seed = ia->add_option("--seed", seed_flag, "random seed");

  // js
  auto* js = app.add_subcommand("js", "James-Stein and ensemble-effect studies");
  std::string js_mode;
  int js_runs = 100;
  std::string js_out = "js.csv";
  std::vector<int> js_grid;
  js->add_option("--mode", js_mode, "vs_n | vs_m | ensemble")
      ->required()
      ->check(CLI::IsMember({"vs_n", "vs_m", "ensemble"}));
  js->add_option("--runs", js_runs, "simulations per grid point");
  js->add_option("--grid", js_grid, "swept values (defaults per mode)")->delimiter(',');
  js->add_option("--out", js_out, "output record CSV");
  auto* js_seed = js->add_option("--seed", seed_flag, "random seed");

  // benchmark
  auto* bm = app.add_subcommand("benchmark", "run the stepped method roster on a target");
  std::string bm_target;
  long bm_labels = 0;
  std::vector<std::string> bm_sources;
  int bm_steps = 50;
  double bm_fraction = 0.6;
  std::string bm_out = "benchmark.csv";
  std::vector<std::string> bm_methods;
  bm->add_option("--target", bm_target, "target dataset CSV")->required();
  bm->add_option("--labels-last", bm_labels, "number of trailing label columns")->required();
  bm->add_option("--source", bm_sources, "source .model files (comma separated)")
      ->required()
      ->delimiter(',');
  bm->add_option("--steps", bm_steps, "steps per method");
  bm->add_option("--train-fraction", bm_fraction, "train split fraction");
  bm->add_option("--methods", bm_methods, "subset of the method roster")->delimiter(',');
  bm->add_option("--out", bm_out, "output record CSV");
  auto* bm_seed = bm->add_option("--seed", seed_flag, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      seed_given = gen_seed->count() > 0;
      return run_gen(gen_concept, gen_n, gen_noise, gen_d, gen_m,
                     resolve_seed(seed_flag, seed_given), gen_out);
    }
    if (ts->parsed()) {
      seed_given = ts_seed->count() > 0;
      const std::uint64_t seed = resolve_seed(seed_flag, seed_given);
      const LabeledDataset data = read_csv(ts_data, ts_labels, TaskKind::classification);
      const ForestModel forest = fit_forest(data, ts_trees, ts_depth,
                                            RandomSource(seed, "train-source"));
      write_artifact(save_model(forest), ts_out);
      std::cout << "saved " << ts_out << " (inputs " << forest.input_dim() << ", outputs "
                << forest.output_dim() << ")\n";
      return 0;
    }
    if (ia->parsed()) {
      seed_given = ia_seed->count() > 0;
      const std::uint64_t seed = resolve_seed(seed_flag, seed_given);
      const LabeledDataset data = read_csv(ia_data, ia_labels, TaskKind::classification);
      const std::string name = ia_name.empty() ? path_stem(ia_data) : ia_name;
      write_records_csv(run_interaction_study(data, name, ia_folds, seed), ia_out);
      std::cout << "wrote " << ia_out << '\n';
      return 0;
    }
    if (js->parsed()) {
      seed_given = js_seed->count() > 0;
      const std::uint64_t seed = resolve_seed(seed_flag, seed_given);
      JsStudyMode mode = JsStudyMode::vs_n;
      std::vector<int> grid = js_grid;
      if (js_mode == "vs_n") {
        mode = JsStudyMode::vs_n;
        if (grid.empty()) grid = {2, 3, 5, 10, 20, 50};
      } else if (js_mode == "vs_m") {
        mode = JsStudyMode::vs_m;
        if (grid.empty()) grid = {2, 5, 10, 15};
      } else {
        mode = JsStudyMode::ensemble_effect;
        if (grid.empty()) grid = {20, 40, 80};
      }
      write_records_csv(run_js_study(mode, grid, js_runs, seed), js_out);
      std::cout << "wrote " << js_out << '\n';
      return 0;
    }
    if (bm->parsed()) {
      seed_given = bm_seed->count() > 0;
      BenchmarkConfig cfg;
      cfg.seed = resolve_seed(seed_flag, seed_given);
      cfg.target_name = path_stem(bm_target);
      cfg.target = read_csv(bm_target, bm_labels, TaskKind::classification);
      cfg.steps = bm_steps;
      cfg.train_fraction = bm_fraction;
      cfg.methods = bm_methods;
      std::vector<std::shared_ptr<const Predictor>> members;
      for (const std::string& path : bm_sources) {
        cfg.source_names.push_back(path_stem(path));
        members.push_back(load_model(read_artifact(path)));
      }
      cfg.source = pool_sources(std::move(members));
      write_records_csv(run_benchmark(cfg), bm_out);
      std::cout << "wrote " << bm_out << '\n';
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
