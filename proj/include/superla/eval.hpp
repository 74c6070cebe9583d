#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "superla/baselines.hpp"
#include "superla/dataset.hpp"
#include "superla/model.hpp"

namespace superla {

// Exact-match rate over tasks that have both a prediction and a truth.
double accuracy(const Predictions& preds,
                const std::unordered_map<int, int>& truths);

// Unweighted mean of per-class F1 over all `num_choices` classes; classes
// absent from both predictions and truths contribute 0 and are counted.
double macro_f1(const Predictions& preds,
                const std::unordered_map<int, int>& truths, int num_choices);

// How unsupervised baselines consume the data, mirroring the three published
// comparison setups: run on test annotations only, run on the whole dataset
// and score on test, or run on test with parameters warm-started from the
// train+validation truths.
enum class BaselineMode { test_only, whole_dataset, train_initialized };

BaselineMode parse_baseline_mode(const std::string& name);
std::string to_string(BaselineMode mode);

struct FoldMetrics {
    int fold = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double infer_seconds = 0.0;
};

struct BenchCell {
    std::string dataset;
    std::string method;
    std::vector<FoldMetrics> folds;
    std::string error;  // non-empty when the cell failed

    double mean_accuracy() const;
    double accuracy_spread() const;  // population standard deviation
    double mean_f1() const;
    double f1_spread() const;
};

struct NamedDataset {
    std::string name;
    Dataset data;
};

struct BenchOptions {
    int folds = 4;
    uint64_t seed = 1;
    BaselineMode mode = BaselineMode::test_only;
    TrainConfig model;   // per-cell seeds are derived from `seed`
    int timing_runs = 1;  // median over this many inference repetitions
    std::string dump_dir;  // when set, per-task prediction dumps land here
    bool quiet = true;
};

std::vector<std::string> registered_methods();

// dataset x method grid over seeded k-fold splits. The supervised model
// trains on train+validation tasks with statistics from train only and early
// stops on validation; baselines follow `mode`. Throws only on harness-level
// misuse; per-cell failures land in BenchCell::error.
std::vector<BenchCell> run_benchmark(const std::vector<NamedDataset>& datasets,
                                     const std::vector<std::string>& methods,
                                     const BenchOptions& opts);

struct RedundancyRow {
    int level = 0;
    std::string method;
    std::vector<FoldMetrics> folds;
    std::string error;
};

// Test-fold tasks keep only their first `level` annotations in canonical
// order; the supervised model keeps its full-annotation training while
// baselines re-run on the reduced annotations.
std::vector<RedundancyRow> redundancy_sweep(const NamedDataset& dataset,
                                            const std::vector<std::string>& methods,
                                            const std::vector<int>& levels,
                                            const BenchOptions& opts);

// Median wall-clock seconds of the inference call alone over `runs`
// repetitions. Supervised training happens beforehand and is excluded;
// baseline EM iterations are included since their inference is optimization.
double time_inference(const std::string& method, const NamedDataset& dataset,
                      const FoldSplit& fold, const BenchOptions& opts,
                      int runs = 3);

// `dataset,method,fold,accuracy,macro_f1,infer_seconds` rows; error cells are
// skipped (they are reported separately).
void write_results_csv(const std::vector<BenchCell>& cells, std::ostream& out);
void write_redundancy_csv(const std::string& dataset,
                          const std::vector<RedundancyRow>& rows,
                          std::ostream& out);

// Aligned per-dataset summary table, accuracy and F1 as `mean±spread` percent.
std::string format_results_table(const std::vector<BenchCell>& cells);

}  // namespace superla
