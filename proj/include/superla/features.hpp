#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "superla/dataset.hpp"

namespace superla {

// Historical accuracy statistics per annotator. Correctness indicators are
// Bernoulli, so the deviation reduces to sqrt(acc * (1 - acc)).
struct AnnotatorStats {
    std::vector<double> acc;
    std::vector<double> stddev;
    std::vector<int> count;  // answered historical tasks
    double global_mean_acc = 0.0;

    // Rows at or beyond size() are annotators without history (including the
    // OOV row); they fall back to the global mean.
    double accuracy_of(int row) const {
        if (row >= 0 && row < static_cast<int>(acc.size()) && count[row] > 0) {
            return acc[row];
        }
        return global_mean_acc;
    }
    double stddev_of(int row) const {
        if (row >= 0 && row < static_cast<int>(acc.size()) && count[row] > 0) {
            return stddev[row];
        }
        const double a = global_mean_acc;
        return std::sqrt(a * (1.0 - a));
    }
};

// Fixed input geometry shared by feature construction and the model. The
// training fold pins max_annotations; inference truncates beyond it.
struct FeatureSpace {
    int num_choices = 0;      // K
    int num_annotators = 0;   // N; embedding rows 0..N-1, row N = unseen IDs
    int max_annotations = 0;  // L_max

    int slot_len() const { return num_choices + 1; }
    int acc_len() const { return slot_len() * max_annotations; }
    int oov_row() const { return num_annotators; }

    bool operator==(const FeatureSpace&) const = default;
};

// The three per-task input blocks.
struct TaskFeatures {
    // (K+1)-entry slot per annotation in canonical order, zero padded to
    // (K+1) * L_max. Slot layout: accuracy at the chosen label position,
    // (1-acc)/(K-1) at the other label positions, deviation last.
    std::vector<double> acc_block;
    // embedding rows grouped by chosen label, ascending within each group
    std::vector<std::vector<int>> choice_sets;
    // sorted set-bit positions of the K*N multi-hot vector (bit k*N + i set
    // iff trained annotator i chose label k); unseen annotators contribute
    // no bit
    std::vector<int> multihot_ones;
    int slots = 0;  // occupied acc_block slots
};

// Accuracy/deviation over the given ground-truthed tasks. Annotators without
// history get the mean accuracy of those with history (1/K if nobody has any).
AnnotatorStats compute_stats(const Dataset& ds,
                             const std::vector<int>& historical_tasks);

std::vector<double> build_accuracy_feature(int task, const Dataset& ds,
                                           const AnnotatorStats& stats,
                                           const FeatureSpace& space);

std::vector<std::vector<int>> build_choice_sets(int task, const Dataset& ds,
                                                const FeatureSpace& space);

// positions k*N + i for every trained annotator i in choice set k
std::vector<int> build_multihot(const std::vector<std::vector<int>>& choice_sets,
                                int num_annotators);

TaskFeatures build_task_features(int task, const Dataset& ds,
                                 const AnnotatorStats& stats,
                                 const FeatureSpace& space);

// `replication` copies of the instance; copy 0 is the original, the rest have
// their occupied acc_block slots permuted uniformly at random. choice_sets and
// multihot are order-free and stay untouched.
std::vector<TaskFeatures> augment(const TaskFeatures& features, int replication,
                                  uint64_t seed);

}  // namespace superla
