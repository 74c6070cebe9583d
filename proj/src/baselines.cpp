#include "superla/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "superla/util.hpp"

namespace superla {

namespace {

constexpr double kSmoothing = 1e-9;
constexpr double kReliabilityFloor = 1e-6;
constexpr double kDefaultReliability = 0.6;

std::vector<int> scoped_annotated(const Dataset& ds,
                                  const std::vector<int>& tasks) {
    std::vector<int> scoped;
    scoped.reserve(tasks.size());
    for (int t : tasks) {
        if (ds.annotation_count(t) > 0) scoped.push_back(t);
    }
    return scoped;
}

Predictions argmax_predictions(const std::vector<int>& tasks,
                               const std::vector<std::vector<double>>& scores) {
    Predictions preds;
    preds.reserve(tasks.size());
    for (size_t i = 0; i < tasks.size(); ++i) {
        preds[tasks[i]] = argmax_smallest(scores[i]);
    }
    return preds;
}

// majority-vote soft counts, one row per scoped task
std::vector<std::vector<double>> vote_fractions(const Dataset& ds,
                                                const std::vector<int>& tasks) {
    std::vector<std::vector<double>> rows(tasks.size());
    for (size_t i = 0; i < tasks.size(); ++i) {
        std::vector<double> votes(ds.num_choices, 0.0);
        for (int id : ds.by_task[tasks[i]]) {
            votes[ds.annotations[id].label] += 1.0;
        }
        const double total = static_cast<double>(ds.by_task[tasks[i]].size());
        for (double& v : votes) v /= total;
        rows[i] = std::move(votes);
    }
    return rows;
}

std::vector<double> weighted_scores(const Dataset& ds, int task,
                                    const std::vector<double>& weights) {
    std::vector<double> scores(ds.num_choices, 0.0);
    for (int id : ds.by_task[task]) {
        const Annotation& a = ds.annotations[id];
        scores[a.label] += weights[a.annotator];
    }
    return scores;
}

// agreement rate of each annotator with the given aggregate over the scope;
// annotators without scoped annotations keep `fallback`
std::vector<double> agreement_rates(const Dataset& ds,
                                    const std::vector<int>& tasks,
                                    const Predictions& preds,
                                    const std::vector<double>& fallback) {
    std::vector<double> agree(ds.num_annotators, 0.0);
    std::vector<int> seen(ds.num_annotators, 0);
    for (int t : tasks) {
        const int pred = preds.at(t);
        for (int id : ds.by_task[t]) {
            const Annotation& a = ds.annotations[id];
            ++seen[a.annotator];
            if (a.label == pred) agree[a.annotator] += 1.0;
        }
    }
    std::vector<double> rates(ds.num_annotators);
    for (int i = 0; i < ds.num_annotators; ++i) {
        rates[i] = seen[i] > 0 ? agree[i] / seen[i] : fallback[i];
    }
    return rates;
}

}  // namespace

Predictions majority_vote(const Dataset& ds, const std::vector<int>& tasks) {
    Predictions preds;
    std::vector<double> votes;
    for (int t : tasks) {
        if (ds.annotation_count(t) == 0) continue;
        votes.assign(ds.num_choices, 0.0);
        for (int id : ds.by_task[t]) votes[ds.annotations[id].label] += 1.0;
        preds[t] = argmax_smallest(votes);
    }
    return preds;
}

WawaResult wawa(const Dataset& ds, const std::vector<int>& tasks, int rounds) {
    if (rounds < 1) throw std::runtime_error("wawa needs at least one round");
    const auto scoped = scoped_annotated(ds, tasks);
    WawaResult result;
    result.predictions = majority_vote(ds, scoped);
    result.weights.assign(ds.num_annotators, 0.0);
    for (int r = 0; r < rounds; ++r) {
        result.weights =
            agreement_rates(ds, scoped, result.predictions, result.weights);
        for (int t : scoped) {
            result.predictions[t] =
                argmax_smallest(weighted_scores(ds, t, result.weights));
        }
    }
    return result;
}

ZbsResult zero_based_skill(const Dataset& ds, const std::vector<int>& tasks,
                           double lr, int iters) {
    if (!(lr > 0.0 && lr <= 1.0)) {
        throw std::runtime_error("zbs learning rate must be in (0, 1]");
    }
    const auto scoped = scoped_annotated(ds, tasks);
    ZbsResult result;
    result.skills.assign(ds.num_annotators, 0.5);
    Predictions prev;
    for (int it = 0; it < iters; ++it) {
        Predictions preds;
        for (int t : scoped) {
            preds[t] = argmax_smallest(weighted_scores(ds, t, result.skills));
        }
        const bool stable = it > 0 && preds == prev;
        result.predictions = preds;
        if (stable) break;
        const auto agree = agreement_rates(ds, scoped, preds, result.skills);
        for (int i = 0; i < ds.num_annotators; ++i) {
            // convex update keeps skills inside [0, 1]
            result.skills[i] += lr * (agree[i] - result.skills[i]);
        }
        prev = std::move(preds);
    }
    return result;
}

namespace {

// E-step shared by DS and ZC; log_conf(annotator, truth, label) must return a
// finite log probability. Returns the marginal log-likelihood.
template <typename LogConf>
double expectation_step(const Dataset& ds, const std::vector<int>& tasks,
                        const std::vector<double>& prior, LogConf&& log_conf,
                        std::vector<std::vector<double>>& posteriors) {
    const int K = ds.num_choices;
    std::vector<double> log_prior(K);
    for (int k = 0; k < K; ++k) {
        log_prior[k] = prior[k] > 0.0 ? std::log(prior[k])
                                      : -std::numeric_limits<double>::infinity();
    }
    double ll = 0.0;
    std::vector<double> s(K);
    for (size_t i = 0; i < tasks.size(); ++i) {
        for (int k = 0; k < K; ++k) s[k] = log_prior[k];
        for (int id : ds.by_task[tasks[i]]) {
            const Annotation& a = ds.annotations[id];
            for (int k = 0; k < K; ++k) s[k] += log_conf(a.annotator, k, a.label);
        }
        double m = s[0];
        for (double v : s) m = std::max(m, v);
        double sum = 0.0;
        for (int k = 0; k < K; ++k) sum += std::exp(s[k] - m);
        for (int k = 0; k < K; ++k) posteriors[i][k] = std::exp(s[k] - m) / sum;
        ll += m + std::log(sum);
    }
    return ll;
}

std::vector<double> prior_from_posteriors(
    const std::vector<std::vector<double>>& posteriors, int K) {
    std::vector<double> counts(K, kSmoothing);
    for (const auto& row : posteriors) {
        for (int k = 0; k < K; ++k) counts[k] += row[k];
    }
    double total = 0.0;
    for (double c : counts) total += c;
    for (double& c : counts) c /= total;
    return counts;
}

double max_abs_delta(const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b) {
    double delta = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t k = 0; k < a[i].size(); ++k) {
            delta = std::max(delta, std::abs(a[i][k] - b[i][k]));
        }
    }
    return delta;
}

}  // namespace

DawidSkeneResult dawid_skene(const Dataset& ds, const std::vector<int>& tasks,
                             const DawidSkeneOptions& opts) {
    if (ds.num_choices < 2) {
        throw std::runtime_error("dawid-skene needs at least two choices");
    }
    const int K = ds.num_choices;
    DawidSkeneResult result;
    result.tasks = scoped_annotated(ds, tasks);
    const auto& scoped = result.tasks;
    std::unordered_map<int, size_t> task_row;
    for (size_t i = 0; i < scoped.size(); ++i) task_row[scoped[i]] = i;

    auto m_step = [&](const std::vector<std::vector<double>>& posteriors) {
        ConfusionMatrix model;
        model.num_choices = K;
        model.prior = prior_from_posteriors(posteriors, K);
        model.annotator.assign(ds.num_annotators,
                               std::vector<double>(K * K, kSmoothing));
        for (int t : scoped) {
            const auto& post = posteriors[task_row[t]];
            for (int id : ds.by_task[t]) {
                const Annotation& a = ds.annotations[id];
                auto& rows = model.annotator[a.annotator];
                for (int g = 0; g < K; ++g) rows[g * K + a.label] += post[g];
            }
        }
        // row normalization; annotators without scoped annotations end up
        // with uniform rows
        for (auto& rows : model.annotator) {
            for (int g = 0; g < K; ++g) {
                double sum = 0.0;
                for (int l = 0; l < K; ++l) sum += rows[g * K + l];
                for (int l = 0; l < K; ++l) rows[g * K + l] /= sum;
            }
        }
        return model;
    };

    std::vector<std::vector<double>> posteriors;
    if (opts.init != nullptr) {
        result.model = *opts.init;
        posteriors.assign(scoped.size(), std::vector<double>(K, 0.0));
        const double ll = expectation_step(
            ds, scoped, result.model.prior,
            [&](int annotator, int g, int l) {
                return std::log(result.model.annotator[annotator][g * K + l]);
            },
            posteriors);
        result.log_likelihood.push_back(ll);
    } else {
        posteriors = vote_fractions(ds, scoped);
    }

    for (int it = 0; it < opts.max_iter; ++it) {
        result.model = m_step(posteriors);
        std::vector<std::vector<double>> next(scoped.size(),
                                              std::vector<double>(K, 0.0));
        const double ll = expectation_step(
            ds, scoped, result.model.prior,
            [&](int annotator, int g, int l) {
                return std::log(result.model.annotator[annotator][g * K + l]);
            },
            next);
        const double delta = max_abs_delta(posteriors, next);
        posteriors = std::move(next);
        result.log_likelihood.push_back(ll);
        if (delta < opts.tol) break;
    }
    if (opts.max_iter == 0 && opts.init == nullptr) {
        result.model = m_step(posteriors);  // report a defined model anyway
    }

    result.posteriors = std::move(posteriors);
    result.predictions = argmax_predictions(scoped, result.posteriors);
    return result;
}

ZenCrowdResult zencrowd(const Dataset& ds, const std::vector<int>& tasks,
                        const ZenCrowdOptions& opts) {
    if (ds.num_choices < 2) {
        throw std::runtime_error("zencrowd needs at least two choices");
    }
    const int K = ds.num_choices;
    ZenCrowdResult result;
    result.tasks = scoped_annotated(ds, tasks);
    const auto& scoped = result.tasks;
    std::unordered_map<int, size_t> task_row;
    for (size_t i = 0; i < scoped.size(); ++i) task_row[scoped[i]] = i;

    auto clip = [](double r) {
        return std::clamp(r, kReliabilityFloor, 1.0 - kReliabilityFloor);
    };
    if (opts.init_reliability != nullptr) {
        if (static_cast<int>(opts.init_reliability->size()) != ds.num_annotators) {
            throw std::runtime_error("reliability init has the wrong size");
        }
        result.reliability = *opts.init_reliability;
        for (double& r : result.reliability) r = clip(r);
    } else {
        result.reliability.assign(ds.num_annotators, kDefaultReliability);
    }
    std::vector<double> prior(K, 1.0 / K);

    auto log_conf = [&](int annotator, int g, int l) {
        const double r = result.reliability[annotator];
        return l == g ? std::log(r) : std::log((1.0 - r) / (K - 1));
    };

    std::vector<std::vector<double>> posteriors(scoped.size(),
                                                std::vector<double>(K, 0.0));
    result.log_likelihood.push_back(
        expectation_step(ds, scoped, prior, log_conf, posteriors));

    for (int it = 0; it < opts.max_iter; ++it) {
        prior = prior_from_posteriors(posteriors, K);
        std::vector<double> correct(ds.num_annotators, 0.0);
        std::vector<int> seen(ds.num_annotators, 0);
        for (int t : scoped) {
            const auto& post = posteriors[task_row[t]];
            for (int id : ds.by_task[t]) {
                const Annotation& a = ds.annotations[id];
                correct[a.annotator] += post[a.label];
                ++seen[a.annotator];
            }
        }
        for (int i = 0; i < ds.num_annotators; ++i) {
            if (seen[i] > 0) result.reliability[i] = clip(correct[i] / seen[i]);
        }

        std::vector<std::vector<double>> next(scoped.size(),
                                              std::vector<double>(K, 0.0));
        const double ll = expectation_step(ds, scoped, prior, log_conf, next);
        const double delta = max_abs_delta(posteriors, next);
        posteriors = std::move(next);
        result.log_likelihood.push_back(ll);
        if (delta < opts.tol) break;
    }

    result.posteriors = std::move(posteriors);
    result.predictions = argmax_predictions(scoped, result.posteriors);
    return result;
}

ConfusionMatrix confusion_from_truths(const Dataset& ds,
                                      const std::vector<int>& tasks) {
    const int K = ds.num_choices;
    ConfusionMatrix model;
    model.num_choices = K;
    model.annotator.assign(ds.num_annotators,
                           std::vector<double>(K * K, kSmoothing));
    std::vector<double> prior_counts(K, kSmoothing);
    for (int t : tasks) {
        auto truth_it = ds.truths.find(t);
        if (truth_it == ds.truths.end()) continue;
        prior_counts[truth_it->second] += 1.0;
        for (int id : ds.by_task[t]) {
            const Annotation& a = ds.annotations[id];
            model.annotator[a.annotator][truth_it->second * K + a.label] += 1.0;
        }
    }
    for (auto& rows : model.annotator) {
        for (int g = 0; g < K; ++g) {
            double sum = 0.0;
            for (int l = 0; l < K; ++l) sum += rows[g * K + l];
            for (int l = 0; l < K; ++l) rows[g * K + l] /= sum;
        }
    }
    double total = 0.0;
    for (double c : prior_counts) total += c;
    model.prior = prior_counts;
    for (double& p : model.prior) p /= total;
    return model;
}

std::vector<double> reliability_from_truths(const Dataset& ds,
                                            const std::vector<int>& tasks) {
    std::vector<double> correct(ds.num_annotators, 0.0);
    std::vector<int> seen(ds.num_annotators, 0);
    for (int t : tasks) {
        auto truth_it = ds.truths.find(t);
        if (truth_it == ds.truths.end()) continue;
        for (int id : ds.by_task[t]) {
            const Annotation& a = ds.annotations[id];
            ++seen[a.annotator];
            if (a.label == truth_it->second) correct[a.annotator] += 1.0;
        }
    }
    std::vector<double> reliability(ds.num_annotators, kDefaultReliability);
    for (int i = 0; i < ds.num_annotators; ++i) {
        if (seen[i] > 0) {
            reliability[i] = std::clamp(correct[i] / seen[i], kReliabilityFloor,
                                        1.0 - kReliabilityFloor);
        }
    }
    return reliability;
}

}  // namespace superla
