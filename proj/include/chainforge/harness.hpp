#pragma once

#include "chainforge/dataset.hpp"
#include "chainforge/predictor.hpp"
#include "chainforge/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace chainforge {

/// One measurement row of an experiment run.
struct ExperimentRecord {
  std::string experiment_id;
  std::string method;
  int step = 0;
  std::string metric_name;
  double value = 0.0;
  double cpu_seconds = 0.0;
  std::uint64_t seed = 0;
};

void write_records_csv(const std::vector<ExperimentRecord>& records,
                       const std::filesystem::path& path);
std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path);

struct ForestParams {
  int trees_per_label = 100;
  int max_depth = 25;
};

/// Trains one forest per source dataset (on all of it), saves each as a
/// .model artifact under artifact_dir, and returns the pooled black-box
/// predictor. The source data is not needed afterwards.
std::shared_ptr<const Predictor> prepare_sources(
    const std::vector<LabeledDataset>& source_data, const ForestParams& params,
    RandomSource rng, const std::filesystem::path& artifact_dir,
    std::vector<std::filesystem::path>* saved_paths = nullptr);

/// Pools already-trained source models into one predictor (identity wrapper
/// for a single member).
std::shared_ptr<const Predictor> pool_sources(
    std::vector<std::shared_ptr<const Predictor>> members);

/// The four-experiment interaction study (BR vs ECC under 0/1 and Hamming
/// loss, logistic then MLP bases, then added weight decay), k-fold averaged.
std::vector<ExperimentRecord> run_interaction_study(const LabeledDataset& data,
                                                    const std::string& dataset_name, int folds,
                                                    std::uint64_t seed);

enum class JsStudyMode { vs_n, vs_m, ensemble_effect };

/// Shrinkage and ensemble-effect simulations. The grid is the swept quantity:
/// bundle size n (vs_n), label count m (vs_m) or training-set size
/// (ensemble_effect).
std::vector<ExperimentRecord> run_js_study(JsStudyMode mode, const std::vector<int>& grid,
                                           int runs, std::uint64_t seed);

struct BenchmarkConfig {
  std::string target_name;
  std::vector<std::string> source_names;
  LabeledDataset target;
  std::shared_ptr<const Predictor> source;
  int steps = 50;
  double train_fraction = 0.6;
  std::vector<std::string> methods;  // empty = full roster
  std::uint64_t seed = 1;
};

/// {SLP, ECC, MLP0, MLP1, MLP2, RLP1, RLP2, TC0, TC1, TC2, ETC}.
const std::vector<std::string>& benchmark_method_roster();

/// Throws if the target appears among its sources or if Birds and Music are
/// paired with each other (both audio).
void validate_benchmark_pairing(const std::string& target,
                                const std::vector<std::string>& sources);

/// Runs every requested method for cfg.steps steps on a shuffled 60:40 split,
/// recording test exact match and cumulative training cpu time per step.
/// A failing method aborts only its own series.
std::vector<ExperimentRecord> run_benchmark(const BenchmarkConfig& cfg);

}  // namespace chainforge
