#include "superla/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "superla/util.hpp"

namespace superla {

AnnotatorStats compute_stats(const Dataset& ds,
                             const std::vector<int>& historical_tasks) {
    AnnotatorStats stats;
    stats.acc.assign(ds.num_annotators, 0.0);
    stats.stddev.assign(ds.num_annotators, 0.0);
    stats.count.assign(ds.num_annotators, 0);
    std::vector<int> correct(ds.num_annotators, 0);

    for (int task : historical_tasks) {
        auto truth_it = ds.truths.find(task);
        if (truth_it == ds.truths.end()) {
            throw std::runtime_error("historical task " + std::to_string(task) +
                                     " has no ground truth");
        }
        for (int id : ds.by_task[task]) {
            const Annotation& a = ds.annotations[id];
            ++stats.count[a.annotator];
            if (a.label == truth_it->second) ++correct[a.annotator];
        }
    }

    double acc_sum = 0.0;
    int with_history = 0;
    for (int i = 0; i < ds.num_annotators; ++i) {
        if (stats.count[i] == 0) continue;
        stats.acc[i] = static_cast<double>(correct[i]) / stats.count[i];
        acc_sum += stats.acc[i];
        ++with_history;
    }
    stats.global_mean_acc = with_history > 0
                                ? acc_sum / with_history
                                : 1.0 / std::max(ds.num_choices, 2);
    for (int i = 0; i < ds.num_annotators; ++i) {
        if (stats.count[i] == 0) stats.acc[i] = stats.global_mean_acc;
        stats.stddev[i] = std::sqrt(stats.acc[i] * (1.0 - stats.acc[i]));
    }
    return stats;
}

std::vector<double> build_accuracy_feature(int task, const Dataset& ds,
                                           const AnnotatorStats& stats,
                                           const FeatureSpace& space) {
    const auto& ids = ds.by_task[task];
    if (ids.empty()) {
        throw std::runtime_error("task '" + ds.task_names[task] +
                                 "' has no annotations");
    }
    const int slot = space.slot_len();
    std::vector<double> block(space.acc_len(), 0.0);
    // more annotations than the trained width: keep the first L_max
    const int used = std::min<int>(static_cast<int>(ids.size()),
                                   space.max_annotations);
    for (int s = 0; s < used; ++s) {
        const Annotation& a = ds.annotations[ids[s]];
        const double acc = stats.accuracy_of(a.annotator);
        const double off = (1.0 - acc) / (space.num_choices - 1);
        double* out = block.data() + static_cast<size_t>(s) * slot;
        for (int k = 0; k < space.num_choices; ++k) out[k] = off;
        out[a.label] = acc;
        out[space.num_choices] = stats.stddev_of(a.annotator);
    }
    return block;
}

std::vector<std::vector<int>> build_choice_sets(int task, const Dataset& ds,
                                                const FeatureSpace& space) {
    std::vector<std::vector<int>> sets(space.num_choices);
    for (int id : ds.by_task[task]) {
        const Annotation& a = ds.annotations[id];
        if (a.annotator > space.oov_row()) {
            throw std::runtime_error("annotator index out of embedding range");
        }
        sets[a.label].push_back(a.annotator);
    }
    return sets;
}

std::vector<int> build_multihot(const std::vector<std::vector<int>>& choice_sets,
                                int num_annotators) {
    std::vector<int> ones;
    for (int k = 0; k < static_cast<int>(choice_sets.size()); ++k) {
        for (int row : choice_sets[k]) {
            if (row < num_annotators) ones.push_back(k * num_annotators + row);
        }
    }
    return ones;
}

TaskFeatures build_task_features(int task, const Dataset& ds,
                                 const AnnotatorStats& stats,
                                 const FeatureSpace& space) {
    TaskFeatures f;
    f.acc_block = build_accuracy_feature(task, ds, stats, space);
    f.choice_sets = build_choice_sets(task, ds, space);
    f.multihot_ones = build_multihot(f.choice_sets, space.num_annotators);
    f.slots = std::min(ds.annotation_count(task), space.max_annotations);
    return f;
}

std::vector<TaskFeatures> augment(const TaskFeatures& features, int replication,
                                  uint64_t seed) {
    if (replication < 1) throw std::runtime_error("replication must be >= 1");
    std::vector<TaskFeatures> copies;
    copies.reserve(replication);
    copies.push_back(features);

    const int slots = features.slots;
    const int slot_len = static_cast<int>(features.choice_sets.size()) + 1;
    std::mt19937_64 rng(seed);
    std::vector<int> perm(slots);
    for (int c = 1; c < replication; ++c) {
        for (int s = 0; s < slots; ++s) perm[s] = s;
        deterministic_shuffle(perm, rng);
        TaskFeatures copy = features;
        for (int s = 0; s < slots; ++s) {
            const double* src =
                features.acc_block.data() + static_cast<size_t>(perm[s]) * slot_len;
            double* dst = copy.acc_block.data() + static_cast<size_t>(s) * slot_len;
            std::copy(src, src + slot_len, dst);
        }
        copies.push_back(std::move(copy));
    }
    return copies;
}

}  // namespace superla
