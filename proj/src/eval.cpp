#include "superla/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "superla/util.hpp"

namespace superla {

double accuracy(const Predictions& preds,
                const std::unordered_map<int, int>& truths) {
    int total = 0, correct = 0;
    for (const auto& [task, pred] : preds) {
        auto it = truths.find(task);
        if (it == truths.end()) continue;
        ++total;
        if (it->second == pred) ++correct;
    }
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

double macro_f1(const Predictions& preds,
                const std::unordered_map<int, int>& truths, int num_choices) {
    std::vector<int> tp(num_choices, 0), fp(num_choices, 0), fn(num_choices, 0);
    for (const auto& [task, pred] : preds) {
        auto it = truths.find(task);
        if (it == truths.end()) continue;
        if (it->second == pred) {
            ++tp[pred];
        } else {
            ++fp[pred];
            ++fn[it->second];
        }
    }
    double sum = 0.0;
    for (int k = 0; k < num_choices; ++k) {
        const double precision =
            tp[k] + fp[k] > 0 ? static_cast<double>(tp[k]) / (tp[k] + fp[k]) : 0.0;
        const double recall =
            tp[k] + fn[k] > 0 ? static_cast<double>(tp[k]) / (tp[k] + fn[k]) : 0.0;
        sum += precision + recall > 0.0
                   ? 2.0 * precision * recall / (precision + recall)
                   : 0.0;
    }
    return sum / num_choices;
}

BaselineMode parse_baseline_mode(const std::string& name) {
    if (name == "test") return BaselineMode::test_only;
    if (name == "whole") return BaselineMode::whole_dataset;
    if (name == "init") return BaselineMode::train_initialized;
    throw std::runtime_error("unknown baseline mode '" + name +
                             "' (expected test, whole, or init)");
}

std::string to_string(BaselineMode mode) {
    switch (mode) {
        case BaselineMode::test_only: return "test";
        case BaselineMode::whole_dataset: return "whole";
        case BaselineMode::train_initialized: return "init";
    }
    return "?";
}

namespace {

double mean_of(const std::vector<FoldMetrics>& folds, double FoldMetrics::*field) {
    if (folds.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& f : folds) sum += f.*field;
    return sum / static_cast<double>(folds.size());
}

double spread_of(const std::vector<FoldMetrics>& folds,
                 double FoldMetrics::*field) {
    if (folds.empty()) return 0.0;
    const double mu = mean_of(folds, field);
    double ss = 0.0;
    for (const auto& f : folds) ss += (f.*field - mu) * (f.*field - mu);
    return std::sqrt(ss / static_cast<double>(folds.size()));
}

}  // namespace

double BenchCell::mean_accuracy() const {
    return mean_of(folds, &FoldMetrics::accuracy);
}
double BenchCell::accuracy_spread() const {
    return spread_of(folds, &FoldMetrics::accuracy);
}
double BenchCell::mean_f1() const { return mean_of(folds, &FoldMetrics::macro_f1); }
double BenchCell::f1_spread() const {
    return spread_of(folds, &FoldMetrics::macro_f1);
}

namespace {

// A method execution split into an untimed preparation phase (supervised
// training, warm-start estimation) and the timed inference call.
struct MethodRun {
    std::function<void()> prepare;
    std::function<Predictions()> infer;
};

std::vector<int> merge_sorted(const std::vector<int>& a,
                              const std::vector<int>& b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> baseline_scope(const Dataset& ds, const FoldSplit& fold,
                                BaselineMode mode) {
    if (mode == BaselineMode::whole_dataset) return annotated_tasks(ds);
    return fold.test_tasks;
}

MethodRun make_method_run(const std::string& method, const Dataset& ds,
                          const FoldSplit& fold, const BenchOptions& opts,
                          uint64_t cell_seed) {
    if (method == "superla") {
        struct State {
            AnnotatorStats stats;
            ModelParams params;
        };
        auto state = std::make_shared<State>();
        TrainConfig cfg = opts.model;
        cfg.seed = cell_seed;
        return {
            [state, &ds, &fold, cfg]() {
                // statistics and gradient supervision from the train split
                // only; validation truths are used solely for early stopping
                state->stats = compute_stats(ds, fold.train_tasks);
                auto result = train(fold.train_tasks, fold.val_tasks, ds,
                                    state->stats, cfg);
                state->params = std::move(result.params);
            },
            [state, &ds, &fold]() {
                return infer(fold.test_tasks, ds, state->stats, state->params)
                    .predictions;
            }};
    }

    const auto scope = baseline_scope(ds, fold, opts.mode);
    const bool warm_start = opts.mode == BaselineMode::train_initialized;
    if (method == "mv") {
        return {{}, [&ds, scope]() { return majority_vote(ds, scope); }};
    }
    if (method == "wawa") {
        return {{}, [&ds, scope]() { return wawa(ds, scope).predictions; }};
    }
    if (method == "zbs") {
        return {{},
                [&ds, scope]() { return zero_based_skill(ds, scope).predictions; }};
    }
    if (method == "ds") {
        auto init = std::make_shared<ConfusionMatrix>();
        return {
            [init, &ds, &fold, warm_start]() {
                if (warm_start) {
                    *init = confusion_from_truths(
                        ds, merge_sorted(fold.train_tasks, fold.val_tasks));
                }
            },
            [init, &ds, scope, warm_start]() {
                DawidSkeneOptions o;
                if (warm_start) o.init = init.get();
                return dawid_skene(ds, scope, o).predictions;
            }};
    }
    if (method == "zc") {
        auto init = std::make_shared<std::vector<double>>();
        return {
            [init, &ds, &fold, warm_start]() {
                if (warm_start) {
                    *init = reliability_from_truths(
                        ds, merge_sorted(fold.train_tasks, fold.val_tasks));
                }
            },
            [init, &ds, scope, warm_start]() {
                ZenCrowdOptions o;
                if (warm_start) o.init_reliability = init.get();
                return zencrowd(ds, scope, o).predictions;
            }};
    }
    std::string names;
    for (const auto& n : registered_methods()) {
        if (!names.empty()) names += ", ";
        names += n;
    }
    throw std::runtime_error("unknown method '" + method +
                             "'; available methods: " + names);
}

double run_timed(const std::function<Predictions()>& fn, int runs,
                 Predictions& out) {
    std::vector<double> times;
    times.reserve(runs);
    for (int r = 0; r < runs; ++r) {
        const auto start = std::chrono::steady_clock::now();
        out = fn();
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

Predictions restrict_to(const Predictions& preds, const std::vector<int>& tasks) {
    Predictions out;
    for (int t : tasks) {
        auto it = preds.find(t);
        if (it != preds.end()) out.emplace(t, it->second);
    }
    return out;
}

void dump_predictions(const Dataset& ds, const Predictions& preds,
                      const std::vector<int>& tasks, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write prediction dump: " + path);
    for (int t : tasks) {
        auto it = preds.find(t);
        if (it == preds.end()) continue;
        out << ds.task_names[t] << '\t' << ds.label_names[it->second] << '\n';
    }
}

}  // namespace

std::vector<std::string> registered_methods() {
    return {"ds", "mv", "superla", "wawa", "zbs", "zc"};
}

std::vector<BenchCell> run_benchmark(const std::vector<NamedDataset>& datasets,
                                     const std::vector<std::string>& methods,
                                     const BenchOptions& opts) {
    std::vector<BenchCell> cells;
    for (size_t d = 0; d < datasets.size(); ++d) {
        const auto& nd = datasets[d];
        std::vector<FoldSplit> splits;
        std::string split_error;
        try {
            splits = kfold_split(nd.data, opts.folds, mix_seed(opts.seed, d));
        } catch (const std::exception& e) {
            split_error = e.what();
        }
        for (size_t m = 0; m < methods.size(); ++m) {
            BenchCell cell;
            cell.dataset = nd.name;
            cell.method = methods[m];
            if (!split_error.empty()) {
                cell.error = split_error;
                cells.push_back(std::move(cell));
                continue;
            }
            try {
                for (const auto& fold : splits) {
                    const uint64_t cell_seed = mix_seed(
                        opts.seed, (d * 1024 + m) * 64 + fold.fold_index);
                    MethodRun run =
                        make_method_run(methods[m], nd.data, fold, opts, cell_seed);
                    if (run.prepare) run.prepare();
                    Predictions preds;
                    const double seconds =
                        run_timed(run.infer, std::max(1, opts.timing_runs), preds);
                    preds = restrict_to(preds, fold.test_tasks);
                    FoldMetrics metrics;
                    metrics.fold = fold.fold_index;
                    metrics.accuracy = accuracy(preds, nd.data.truths);
                    metrics.macro_f1 =
                        macro_f1(preds, nd.data.truths, nd.data.num_choices);
                    metrics.infer_seconds = seconds;
                    cell.folds.push_back(metrics);
                    if (!opts.dump_dir.empty()) {
                        std::filesystem::create_directories(opts.dump_dir);
                        dump_predictions(
                            nd.data, preds, fold.test_tasks,
                            opts.dump_dir + "/" + nd.name + "_" + methods[m] +
                                "_fold" + std::to_string(fold.fold_index) +
                                ".preds");
                    }
                    if (!opts.quiet) {
                        std::cout << nd.name << " " << methods[m] << " fold "
                                  << fold.fold_index << ": acc "
                                  << metrics.accuracy << ", f1 "
                                  << metrics.macro_f1 << "\n";
                    }
                }
            } catch (const std::exception& e) {
                cell.folds.clear();
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::vector<RedundancyRow> redundancy_sweep(const NamedDataset& dataset,
                                            const std::vector<std::string>& methods,
                                            const std::vector<int>& levels,
                                            const BenchOptions& opts) {
    const Dataset& ds = dataset.data;
    const auto splits = kfold_split(ds, opts.folds, mix_seed(opts.seed, 0));

    // the supervised model trains once per fold on full annotations
    const bool wants_superla =
        std::find(methods.begin(), methods.end(), "superla") != methods.end();
    struct FoldModel {
        AnnotatorStats stats;
        ModelParams params;
    };
    std::vector<FoldModel> models;
    if (wants_superla) {
        for (const auto& fold : splits) {
            TrainConfig cfg = opts.model;
            cfg.seed = mix_seed(opts.seed, 0xF00 + fold.fold_index);
            FoldModel fm;
            fm.stats = compute_stats(ds, fold.train_tasks);
            fm.params =
                train(fold.train_tasks, fold.val_tasks, ds, fm.stats, cfg).params;
            models.push_back(std::move(fm));
        }
    }

    std::vector<RedundancyRow> rows;
    for (int level : levels) {
        for (const auto& method : methods) {
            RedundancyRow row;
            row.level = level;
            row.method = method;
            try {
                for (const auto& fold : splits) {
                    const Dataset reduced =
                        truncate_annotations(ds, fold.test_tasks, level);
                    Predictions preds;
                    FoldMetrics metrics;
                    metrics.fold = fold.fold_index;
                    const auto start = std::chrono::steady_clock::now();
                    if (method == "superla") {
                        const auto& fm = models[fold.fold_index];
                        preds = infer(fold.test_tasks, reduced, fm.stats, fm.params)
                                    .predictions;
                    } else {
                        MethodRun run = make_method_run(method, reduced, fold, opts,
                                                        mix_seed(opts.seed, level));
                        if (run.prepare) run.prepare();
                        preds = restrict_to(run.infer(), fold.test_tasks);
                    }
                    const auto stop = std::chrono::steady_clock::now();
                    metrics.infer_seconds =
                        std::chrono::duration<double>(stop - start).count();
                    metrics.accuracy = accuracy(preds, ds.truths);
                    metrics.macro_f1 = macro_f1(preds, ds.truths, ds.num_choices);
                    row.folds.push_back(metrics);
                }
            } catch (const std::exception& e) {
                row.folds.clear();
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double time_inference(const std::string& method, const NamedDataset& dataset,
                      const FoldSplit& fold, const BenchOptions& opts, int runs) {
    MethodRun run = make_method_run(method, dataset.data, fold, opts,
                                    mix_seed(opts.seed, 0x71));
    if (run.prepare) run.prepare();
    Predictions preds;
    return run_timed(run.infer, std::max(1, runs), preds);
}

void write_results_csv(const std::vector<BenchCell>& cells, std::ostream& out) {
    out << "dataset,method,fold,accuracy,macro_f1,infer_seconds\n";
    char buf[128];
    for (const auto& cell : cells) {
        if (!cell.error.empty()) continue;
        for (const auto& f : cell.folds) {
            out << cell.dataset << ',' << cell.method << ',' << f.fold;
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g", f.accuracy,
                          f.macro_f1, f.infer_seconds);
            out << buf << '\n';
        }
    }
}

void write_redundancy_csv(const std::string& dataset,
                          const std::vector<RedundancyRow>& rows,
                          std::ostream& out) {
    out << "dataset,method,redundancy,fold,accuracy,macro_f1,infer_seconds\n";
    char buf[128];
    for (const auto& row : rows) {
        if (!row.error.empty()) continue;
        for (const auto& f : row.folds) {
            out << dataset << ',' << row.method << ',' << row.level << ','
                << f.fold;
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g", f.accuracy,
                          f.macro_f1, f.infer_seconds);
            out << buf << '\n';
        }
    }
}

std::string format_results_table(const std::vector<BenchCell>& cells) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-16s %-10s %-18s %-18s %12s\n", "dataset",
                  "method", "acc%", "f1%", "infer_s");
    out << line;
    for (const auto& cell : cells) {
        if (!cell.error.empty()) {
            std::snprintf(line, sizeof(line), "%-16s %-10s ERROR: %s\n",
                          cell.dataset.c_str(), cell.method.c_str(),
                          cell.error.c_str());
            out << line;
            continue;
        }
        char acc[32], f1[32];
        std::snprintf(acc, sizeof(acc), "%.2f±%.2f", 100.0 * cell.mean_accuracy(),
                      100.0 * cell.accuracy_spread());
        std::snprintf(f1, sizeof(f1), "%.2f±%.2f", 100.0 * cell.mean_f1(),
                      100.0 * cell.f1_spread());
        std::snprintf(line, sizeof(line), "%-16s %-10s %-18s %-18s %12.5f\n",
                      cell.dataset.c_str(), cell.method.c_str(), acc, f1,
                      mean_of(cell.folds, &FoldMetrics::infer_seconds));
        out << line;
    }
    return out.str();
}

}  // namespace superla
