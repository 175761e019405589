#include "chainforge/harness.hpp"

#include "chainforge/artifact.hpp"
#include "chainforge/errors.hpp"
#include "chainforge/forest.hpp"
#include "chainforge/metrics.hpp"
#include "chainforge/multilabel.hpp"
#include "chainforge/shrinkage.hpp"
#include "chainforge/transfer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace chainforge {

namespace {

double cpu_now() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

void write_records_csv(const std::vector<ExperimentRecord>& records,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "experiment_id,method,step,metric_name,value,cpu_seconds,seed\n";
  char buf[64];
  for (const ExperimentRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.experiment_id << ',' << r.method << ',' << r.step << ',' << r.metric_name << ','
        << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6f", r.cpu_seconds);
    out << buf << ',' << r.seed << '\n';
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ":1: missing header");
  if (line != "experiment_id,method,step,metric_name,value,cpu_seconds,seed")
    throw IoError(path.string() + ":1: unexpected header '" + line + "'");
  std::vector<ExperimentRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 7 fields");
    ExperimentRecord r;
    r.experiment_id = fields[0];
    r.method = fields[1];
    try {
      r.step = std::stoi(fields[2]);
      r.metric_name = fields[3];
      r.value = std::stod(fields[4]);
      r.cpu_seconds = std::stod(fields[5]);
      r.seed = std::stoull(fields[6]);
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad field");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::shared_ptr<const Predictor> pool_sources(
    std::vector<std::shared_ptr<const Predictor>> members) {
  return std::make_shared<PooledPredictor>(std::move(members));
}

std::shared_ptr<const Predictor> prepare_sources(
    const std::vector<LabeledDataset>& source_data, const ForestParams& params,
    RandomSource rng, const std::filesystem::path& artifact_dir,
    std::vector<std::filesystem::path>* saved_paths) {
  if (source_data.empty()) throw std::invalid_argument("prepare_sources: no source datasets");
  std::filesystem::create_directories(artifact_dir);
  std::vector<std::shared_ptr<const Predictor>> members;
  for (std::size_t i = 0; i < source_data.size(); ++i) {
    auto forest = std::make_shared<ForestModel>(
        fit_forest(source_data[i], params.trees_per_label, params.max_depth,
                   rng.derive("source-" + std::to_string(i))));
    const std::filesystem::path out =
        artifact_dir / ("source-" + std::to_string(i) + ".model");
    write_artifact(save_model(*forest), out);
    if (saved_paths) saved_paths->push_back(out);
    members.push_back(std::move(forest));
  }
  return pool_sources(std::move(members));
}

// ---------------------------------------------------------------------------
// Interaction study
// ---------------------------------------------------------------------------

namespace {

struct FoldLosses {
  double zero_one = 0.0;
  double hamming = 0.0;
};

FoldLosses eval_losses(const Predictor& model, const LabeledDataset& test) {
  const Matrix pred = model.predict_rows(test.features);
  return {1.0 - exact_match_accuracy(test.labels, pred),
          1.0 - hamming_score(test.labels, pred)};
}

}  // namespace

std::vector<ExperimentRecord> run_interaction_study(const LabeledDataset& data,
                                                    const std::string& dataset_name, int folds,
                                                    std::uint64_t seed) {
  if (data.task_kind != TaskKind::classification)
    throw std::invalid_argument("run_interaction_study: needs classification data");
  RandomSource rng(seed, "interaction");
  const std::vector<IndexList> fold_sets = kfold_indices(data.rows(), folds, rng.derive("folds"));

  constexpr int kEnsembleSize = 10;
  std::vector<ExperimentRecord> records;

  for (int exp = 1; exp <= 4; ++exp) {
    BaseSpec base;
    if (exp <= 2) {
      base.kind = LearnerKind::linear;
      base.sgd_rounds = 50;
    } else {
      base.kind = LearnerKind::mlp;
      base.mlp_arch = 2;
      base.sgd_rounds = 20;
    }
    base.link = Link::logistic;
    TrainConfig cfg;
    cfg.l2_penalty = exp == 4 ? 0.05 : 0.0;

    FoldLosses br_sum;
    FoldLosses ecc_sum;
    for (std::size_t k = 0; k < fold_sets.size(); ++k) {
      IndexList train_rows;
      for (std::size_t other = 0; other < fold_sets.size(); ++other)
        if (other != k)
          train_rows.insert(train_rows.end(), fold_sets[other].begin(), fold_sets[other].end());
      const LabeledDataset train = data.subset(train_rows);
      const LabeledDataset test = data.subset(fold_sets[k]);

      RandomSource fold_rng =
          rng.derive("exp-" + std::to_string(exp) + "/fold-" + std::to_string(k));
      TrainConfig br_cfg = cfg;
      br_cfg.rng = fold_rng.derive("br");
      const auto br = fit_br(train, base, br_cfg);
      const FoldLosses br_l = eval_losses(*br, test);

      TrainConfig ecc_cfg = cfg;
      ecc_cfg.rng = fold_rng.derive("ecc");
      const EnsembleModel ecc =
          fit_ensemble_of_chains(train, kEnsembleSize, base, ecc_cfg, fold_rng.derive("orders"));
      const FoldLosses ecc_l = eval_losses(ecc, test);

      br_sum.zero_one += br_l.zero_one;
      br_sum.hamming += br_l.hamming;
      ecc_sum.zero_one += ecc_l.zero_one;
      ecc_sum.hamming += ecc_l.hamming;
    }
    const double nf = static_cast<double>(fold_sets.size());
    // Exp 1 is judged on 0/1 loss; experiments 2-4 on per-bit Hamming loss.
    const bool use_zero_one = exp == 1;
    const double br_loss = (use_zero_one ? br_sum.zero_one : br_sum.hamming) / nf;
    const double ecc_loss = (use_zero_one ? ecc_sum.zero_one : ecc_sum.hamming) / nf;
    const std::string metric = use_zero_one ? "zero_one_loss" : "hamming_loss";
    const std::string id = "interaction/" + dataset_name + "/exp" + std::to_string(exp);
    records.push_back({id, "BR", exp, metric, br_loss, 0.0, seed});
    records.push_back({id, "ECC", exp, metric, ecc_loss, 0.0, seed});
    records.push_back({id, "ECC", exp, "gain", gain(ecc_loss, br_loss), 0.0, seed});
  }
  return records;
}

// ---------------------------------------------------------------------------
// James-Stein and ensemble-effect studies
// ---------------------------------------------------------------------------

namespace {

std::vector<ExperimentRecord> js_vs_n_study(const std::vector<int>& grid, int runs,
                                            std::uint64_t seed) {
  constexpr Index kDim = 5;
  std::vector<ExperimentRecord> records;
  for (int n : grid) {
    if (n < 1) throw std::invalid_argument("js vs_n: grid entries must be >= 1");
    RandomSource rng(seed, "js-vs-n/n-" + std::to_string(n));
    double sum_ls = 0.0;
    double sum_js = 0.0;
    const Vector truth = Vector::Zero(kDim);
    for (int r = 0; r < runs; ++r) {
      SampleBundle bundle{Matrix(n, kDim)};
      for (Index i = 0; i < bundle.samples.rows(); ++i)
        for (Index j = 0; j < kDim; ++j) bundle.samples(i, j) = rng.normal();
      const auto [e_ls, e_js] = js_vs_ls_error(truth, bundle);
      sum_ls += e_ls;
      sum_js += e_js;
    }
    const double mean_ls = sum_ls / runs;
    const double mean_js = sum_js / runs;
    const std::string id = "js/vs_n";
    records.push_back({id, "LS", n, "mse", mean_ls, 0.0, seed});
    records.push_back({id, "JS", n, "mse", mean_js, 0.0, seed});
    records.push_back({id, "JS", n, "improvement", mean_ls - mean_js, 0.0, seed});
  }
  return records;
}

std::vector<ExperimentRecord> js_vs_m_study(const std::vector<int>& grid, int runs,
                                            std::uint64_t seed) {
  constexpr int kMembers = 30;  // bundle size n
  std::vector<ExperimentRecord> records;
  for (int m : grid) {
    if (m < 1) throw std::invalid_argument("js vs_m: grid entries must be >= 1");
    RandomSource rng(seed, "js-vs-m/m-" + std::to_string(m));
    double sum_ls = 0.0;
    double sum_js = 0.0;
    long count = 0;
    for (int r = 0; r < runs; ++r) {
      RandomSource run_rng = rng.derive("run-" + std::to_string(r));
      IndependentConceptConfig gen;
      gen.n = 150;
      gen.d = 10;
      gen.m = m;
      gen.noise_sd = 1.0;
      gen.task_kind = TaskKind::classification;
      gen.rng = run_rng.derive("data");
      const LabeledDataset data = gen_independent_concepts(gen);
      const auto [train, test] = split_train_test(data, 2.0 / 3.0, run_rng.derive("split"));

      BaseSpec base;  // logistic base learners
      base.sgd_rounds = 20;
      TrainConfig cfg;
      cfg.rng = run_rng.derive("train");
      const EnsembleModel bag =
          fit_bagging(train, kMembers, base, cfg, run_rng.derive("bag"));

      for (Index i = 0; i < test.rows(); ++i) {
        const Vector x = test.features.row(i).transpose();
        SampleBundle bundle{Matrix(kMembers, m)};
        for (int t = 0; t < kMembers; ++t)
          bundle.samples.row(t) =
              bag.members()[static_cast<std::size_t>(t)]->predict_scores(x).transpose();
        const Vector y = test.labels.row(i).transpose();
        const auto [e_ls, e_js] = js_vs_ls_error(y, bundle);
        sum_ls += e_ls;
        sum_js += e_js;
        ++count;
      }
    }
    const double mean_ls = sum_ls / static_cast<double>(count);
    const double mean_js = sum_js / static_cast<double>(count);
    const std::string id = "js/vs_m";
    records.push_back({id, "LS", m, "mse", mean_ls, 0.0, seed});
    records.push_back({id, "JS", m, "mse", mean_js, 0.0, seed});
    records.push_back({id, "JS", m, "improvement", mean_ls - mean_js, 0.0, seed});
  }
  return records;
}

double test_mse(const Predictor& model, const LabeledDataset& test) {
  const Matrix pred = model.predict_rows(test.features);
  return (pred - test.labels).squaredNorm() /
         static_cast<double>(test.rows() * test.output_dim());
}

std::vector<ExperimentRecord> ensemble_effect_study(const std::vector<int>& grid, int runs,
                                                    std::uint64_t seed) {
  constexpr Index kTargets = 10;
  constexpr int kMembers = 10;
  constexpr Index kTestRows = 100;
  std::vector<ExperimentRecord> records;
  for (int n_train : grid) {
    if (n_train < 5) throw std::invalid_argument("js ensemble: grid entries must be >= 5");
    RandomSource rng(seed, "js-ensemble/n-" + std::to_string(n_train));
    double sums[4] = {0.0, 0.0, 0.0, 0.0};
    for (int r = 0; r < runs; ++r) {
      RandomSource run_rng = rng.derive("run-" + std::to_string(r));
      IndependentConceptConfig gen;
      gen.n = n_train + kTestRows;
      gen.d = 10;
      gen.m = kTargets;
      gen.noise_sd = 1.0;
      gen.task_kind = TaskKind::regression;
      gen.rng = run_rng.derive("data");
      const LabeledDataset data = gen_independent_concepts(gen);
      const double fraction = static_cast<double>(n_train) / static_cast<double>(gen.n);
      const auto [train, test] = split_train_test(data, fraction, run_rng.derive("split"));

      BaseSpec base;
      base.link = Link::identity;
      base.sgd_rounds = 10;
      TrainConfig cfg;
      cfg.rng = run_rng.derive("train");

      TrainConfig ir_cfg = cfg;
      ir_cfg.rng = run_rng.derive("ir");
      const auto ir = fit_br(train, base, ir_cfg);

      TrainConfig rc_cfg = cfg;
      rc_cfg.rng = run_rng.derive("rc");
      RandomSource order_rng = run_rng.derive("rc-order");
      const ChainModel rc =
          fit_chain(train, order_rng.permutation(train.output_dim()), base, rc_cfg);

      TrainConfig erc_cfg = cfg;
      erc_cfg.rng = run_rng.derive("erc");
      const EnsembleModel erc =
          fit_ensemble_of_chains(train, kMembers, base, erc_cfg, run_rng.derive("erc-orders"));

      TrainConfig eir_cfg = cfg;
      eir_cfg.rng = run_rng.derive("eir");
      const EnsembleModel eir =
          fit_bagging(train, kMembers, base, eir_cfg, run_rng.derive("eir-bags"));

      sums[0] += test_mse(*ir, test);
      sums[1] += test_mse(rc, test);
      sums[2] += test_mse(erc, test);
      sums[3] += test_mse(eir, test);
    }
    const char* names[4] = {"IR", "RC", "ERC", "EIR"};
    for (int i = 0; i < 4; ++i)
      records.push_back(
          {"js/ensemble_effect", names[i], n_train, "mse", sums[i] / runs, 0.0, seed});
  }
  return records;
}

}  // namespace

std::vector<ExperimentRecord> run_js_study(JsStudyMode mode, const std::vector<int>& grid,
                                           int runs, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("run_js_study: empty grid");
  if (runs < 1) throw std::invalid_argument("run_js_study: runs must be >= 1");
  switch (mode) {
    case JsStudyMode::vs_n: return js_vs_n_study(grid, runs, seed);
    case JsStudyMode::vs_m: return js_vs_m_study(grid, runs, seed);
    case JsStudyMode::ensemble_effect: return ensemble_effect_study(grid, runs, seed);
  }
  throw std::invalid_argument("run_js_study: unknown mode");
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

const std::vector<std::string>& benchmark_method_roster() {
  static const std::vector<std::string> roster = {"SLP",  "ECC",  "MLP0", "MLP1", "MLP2",
                                                  "RLP1", "RLP2", "TC0",  "TC1",  "TC2",
                                                  "ETC"};
  return roster;
}

void validate_benchmark_pairing(const std::string& target,
                                const std::vector<std::string>& sources) {
  const std::string t = lower(target);
  for (const std::string& s : sources) {
    const std::string sl = lower(s);
    if (sl == t)
      throw std::invalid_argument("benchmark: target '" + target + "' is in its own sources");
    const bool audio_pair = (t == "birds" && sl == "music") || (t == "music" && sl == "birds");
    if (audio_pair)
      throw std::invalid_argument("benchmark: Birds and Music are both audio and may not be "
                                  "each other's source or target");
  }
}

namespace {

// A method advances by one step at a time and exposes its current predictor.
struct SteppedMethod {
  std::function<void(int)> step;  // 1-based step index
  std::function<const Predictor&()> current;
};

void step_gradient_model(Model& m, const LabeledDataset& data, TrainConfig& cfg) {
  if (auto* linear = dynamic_cast<LinearModel*>(&m)) {
    sgd_step(*linear, data, cfg);
    return;
  }
  if (auto* mlp = dynamic_cast<MlpModel*>(&m)) {
    sgd_step(*mlp, data, cfg);
    return;
  }
  throw std::logic_error("benchmark: model cannot take SGD steps");
}

}  // namespace

std::vector<ExperimentRecord> run_benchmark(const BenchmarkConfig& cfg) {
  validate_benchmark_pairing(cfg.target_name, cfg.source_names);
  if (cfg.steps < 1) throw std::invalid_argument("run_benchmark: steps must be >= 1");
  if (!cfg.source) throw std::invalid_argument("run_benchmark: missing source predictor");

  RandomSource rng(cfg.seed, "benchmark/" + cfg.target_name);
  const auto [train, test] = split_train_test(cfg.target, cfg.train_fraction,
                                              rng.derive("split"));
  const std::vector<std::string> methods =
      cfg.methods.empty() ? benchmark_method_roster() : cfg.methods;
  const std::string experiment_id = "benchmark/" + cfg.target_name;

  std::vector<ExperimentRecord> records;
  for (const std::string& method : methods) {
    RandomSource method_rng = rng.derive("method-" + method);
    try {
      SteppedMethod runner;

      if (method == "SLP" || method.rfind("MLP", 0) == 0) {
        BaseSpec spec;
        spec.kind = method == "SLP" ? LearnerKind::linear : LearnerKind::mlp;
        if (spec.kind == LearnerKind::mlp) spec.mlp_arch = method.back() - '0';
        spec.link = Link::logistic;
        spec.sgd_rounds = 0;  // the harness steps the model itself
        auto model = train_multi_output(train.features, train.labels, train.task_kind, spec,
                                        TrainConfig{}, method_rng.derive("init"));
        auto step_cfg = std::make_shared<TrainConfig>();
        step_cfg->rng = method_rng.derive("sgd");
        runner.step = [model, step_cfg, &train](int) {
          step_gradient_model(*model, train, *step_cfg);
        };
        runner.current = [model]() -> const Predictor& { return *model; };
      } else if (method == "ECC") {
        BaseSpec spec;
        spec.sgd_rounds = 1;  // 100 iterations per link for a fresh member
        auto ensemble = std::make_shared<std::shared_ptr<EnsembleModel>>();
        runner.step = [ensemble, spec, &train, method_rng](int step) {
          RandomSource member_rng = method_rng.derive("member-" + std::to_string(step));
          const IndexList order = member_rng.permutation(train.output_dim());
          TrainConfig member_cfg;
          member_cfg.rng = member_rng.derive("train");
          auto member =
              std::make_shared<ChainModel>(fit_chain(train, order, spec, member_cfg));
          if (!*ensemble) {
            std::vector<std::shared_ptr<Predictor>> members{member};
            *ensemble = std::make_shared<EnsembleModel>(std::move(members), train.task_kind);
          } else {
            (*ensemble)->add_member(member);
          }
        };
        runner.current = [ensemble]() -> const Predictor& { return **ensemble; };
      } else if (method.rfind("RLP", 0) == 0) {
        const int arch = method.back() - '0';
        auto state = std::make_shared<RlpSearchState>();
        auto search_cfg = std::make_shared<SearchConfig>();
        search_cfg->rng = method_rng.derive("search");
        auto train_cfg = std::make_shared<TrainConfig>();
        train_cfg->rng = method_rng.derive("train");
        runner.step = [state, search_cfg, train_cfg, arch, &train](int step) {
          if (step == 1)
            *state = rlp_init(train, arch, *train_cfg, *search_cfg);
          else
            rlp_step(*state, train, *train_cfg, *search_cfg);
        };
        runner.current = [state]() -> const Predictor& { return *state->model; };
      } else if (method.rfind("TC", 0) == 0) {
        const int arch = method.back() - '0';
        BaseSpec spec;
        spec.kind = arch == 0 ? LearnerKind::linear : LearnerKind::mlp;
        spec.mlp_arch = arch;
        spec.link = Link::logistic;
        spec.sgd_rounds = 1;  // 100 iterations at step 1, right after the search
        auto model = std::make_shared<std::shared_ptr<TransferChainModel>>();
        auto augmented = std::make_shared<LabeledDataset>();
        auto step_cfg = std::make_shared<TrainConfig>();
        step_cfg->rng = method_rng.derive("sgd");
        auto source = cfg.source;
        runner.step = [model, augmented, step_cfg, spec, source, &train, method_rng](int step) {
          if (step == 1) {
            SearchConfig search;
            search.budget = 100;
            search.objective = SearchObjective::cv_loss;
            search.cv_loss_metric = CvLossMetric::zero_one;
            search.rng = method_rng.derive("search");
            TrainConfig fit_cfg;
            fit_cfg.rng = method_rng.derive("fit");
            BaseSpec search_spec = spec;
            search_spec.sgd_rounds = 5;  // internal CV fits get a fuller budget
            *model = fit_transfer_chain(source, train, search, spec, fit_cfg, &search_spec).model;
            *augmented = (*model)->augment(train);
          } else {
            step_gradient_model((*model)->target(), *augmented, *step_cfg);
          }
        };
        runner.current = [model]() -> const Predictor& { return **model; };
      } else if (method == "ETC") {
        BaseSpec spec;  // linear targets for ensemble members
        spec.link = Link::logistic;
        spec.sgd_rounds = 1;  // 100 iterations of SGD for a fresh member
        auto ensemble = std::make_shared<std::shared_ptr<EnsembleModel>>();
        auto source = cfg.source;
        runner.step = [ensemble, spec, source, &train, method_rng](int step) {
          TrainConfig member_cfg;
          RandomSource step_rng = method_rng.derive("member-" + std::to_string(step));
          member_cfg.rng = step_rng.derive("train");
          EnsembleModel one = fit_etc(source, train, 1, spec, member_cfg, step_rng);
          auto member = one.members().front();
          if (!*ensemble) {
            std::vector<std::shared_ptr<Predictor>> members{member};
            *ensemble = std::make_shared<EnsembleModel>(std::move(members), train.task_kind);
          } else {
            (*ensemble)->add_member(member);
          }
        };
        runner.current = [ensemble]() -> const Predictor& { return **ensemble; };
      } else {
        throw std::invalid_argument("unknown benchmark method '" + method + "'");
      }

      double cpu_total = 0.0;
      std::vector<ExperimentRecord> series;
      for (int step = 1; step <= cfg.steps; ++step) {
        const double t0 = cpu_now();
        runner.step(step);
        cpu_total += cpu_now() - t0;  // training/search time only
        const double accuracy =
            exact_match_accuracy(test.labels, runner.current().predict_rows(test.features));
        series.push_back(
            {experiment_id, method, step, "exact_match", accuracy, cpu_total, cfg.seed});
      }
      records.insert(records.end(), series.begin(), series.end());
    } catch (const std::exception& e) {
      std::cerr << "benchmark: method " << method << " aborted: " << e.what() << '\n';
    }
  }
  return records;
}

}  // namespace chainforge
