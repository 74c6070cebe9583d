#pragma once

#include <unordered_map>
#include <vector>

#include "superla/dataset.hpp"

namespace superla {

using Predictions = std::unordered_map<int, int>;

// Per-annotator K x K row-stochastic error model plus the class prior.
// Entry [g * K + l] is P(annotator answers l | truth g).
struct ConfusionMatrix {
    int num_choices = 0;
    std::vector<std::vector<double>> annotator;  // row-major K*K per annotator
    std::vector<double> prior;                   // length K
};

// Plurality vote; ties toward the smallest label index. Tasks without
// annotations get no prediction.
Predictions majority_vote(const Dataset& ds, const std::vector<int>& tasks);

struct WawaResult {
    Predictions predictions;
    std::vector<double> weights;  // agreement rate with the aggregate
};

// Worker agreement with aggregate: weight annotators by their agreement with
// the majority vote, then take the weighted vote. `rounds` > 1 repeats the
// weighting against the previous round's aggregate.
WawaResult wawa(const Dataset& ds, const std::vector<int>& tasks, int rounds = 1);

struct ZbsResult {
    Predictions predictions;
    std::vector<double> skills;  // in [0, 1]
};

// Iterative skill estimation: alternate a skill-weighted vote with smoothed
// skill re-estimation (skill += lr * (agreement - skill)) until predictions
// stabilize or `iters` rounds pass.
ZbsResult zero_based_skill(const Dataset& ds, const std::vector<int>& tasks,
                           double lr = 0.1, int iters = 100);

struct DawidSkeneOptions {
    int max_iter = 100;
    double tol = 1e-6;
    // optional warm start (e.g. confusion rows estimated from historical
    // truths); when absent, posteriors start from majority-vote soft counts
    const ConfusionMatrix* init = nullptr;
};

struct DawidSkeneResult {
    Predictions predictions;
    ConfusionMatrix model;
    std::vector<int> tasks;  // scoped annotated tasks, row order of posteriors
    std::vector<std::vector<double>> posteriors;
    std::vector<double> log_likelihood;  // marginal, one entry per EM iteration
};

DawidSkeneResult dawid_skene(const Dataset& ds, const std::vector<int>& tasks,
                             const DawidSkeneOptions& opts = {});

struct ZenCrowdOptions {
    int max_iter = 100;
    double tol = 1e-6;
    const std::vector<double>* init_reliability = nullptr;  // default 0.6
};

struct ZenCrowdResult {
    Predictions predictions;
    std::vector<double> reliability;  // clipped to [1e-6, 1 - 1e-6]
    std::vector<int> tasks;
    std::vector<std::vector<double>> posteriors;
    std::vector<double> log_likelihood;
};

// EM with a single reliability scalar per annotator: P(correct) = r, errors
// uniform over the K-1 wrong labels.
ZenCrowdResult zencrowd(const Dataset& ds, const std::vector<int>& tasks,
                        const ZenCrowdOptions& opts = {});

// Warm-start parameters estimated against known truths of the given tasks
// (benchmark mode that initializes baselines from historical information).
ConfusionMatrix confusion_from_truths(const Dataset& ds,
                                      const std::vector<int>& tasks);
std::vector<double> reliability_from_truths(const Dataset& ds,
                                            const std::vector<int>& tasks);

}  // namespace superla
