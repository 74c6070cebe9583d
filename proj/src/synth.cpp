#include "superla/synth.hpp"

#include <stdexcept>
#include <string>

#include "superla/util.hpp"

namespace superla {

namespace {

void check_prob(double p, const char* what) {
    // 1.0 is allowed: a perfect annotator is a useful oracle case
    if (!(p > 0.0 && p <= 1.0)) {
        throw std::runtime_error(std::string(what) + " must be in (0, 1]");
    }
}

void check_open_prob(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::runtime_error(std::string(what) + " must be in (0, 1)");
    }
}

}  // namespace

AccuracyLaw AccuracyLaw::fixed(double p) {
    AccuracyLaw law;
    law.kind = Kind::fixed;
    law.p1 = p;
    return law;
}

AccuracyLaw AccuracyLaw::uniform(double lo, double hi) {
    AccuracyLaw law;
    law.kind = Kind::uniform;
    law.p1 = lo;
    law.p2 = hi;
    return law;
}

AccuracyLaw AccuracyLaw::two_point(double p1, double p2, double mix) {
    AccuracyLaw law;
    law.kind = Kind::two_point;
    law.p1 = p1;
    law.p2 = p2;
    law.mix = mix;
    return law;
}

void AccuracyLaw::validate() const {
    switch (kind) {
        case Kind::fixed:
            check_prob(p1, "fixed accuracy");
            break;
        case Kind::uniform:
            check_prob(p1, "uniform lower bound");
            check_prob(p2, "uniform upper bound");
            if (p2 < p1) throw std::runtime_error("uniform bounds are reversed");
            break;
        case Kind::two_point:
            check_prob(p1, "two-point accuracy p1");
            check_prob(p2, "two-point accuracy p2");
            check_open_prob(mix, "two-point mix");
            break;
    }
}

void SynthConfig::validate() const {
    if (num_tasks < 1) throw std::runtime_error("num_tasks must be >= 1");
    if (num_annotators < 1) {
        throw std::runtime_error("num_annotators must be >= 1");
    }
    if (num_choices < 2) throw std::runtime_error("num_choices must be >= 2");
    if (redundancy < 1) throw std::runtime_error("redundancy must be >= 1");
    if (redundancy > num_annotators) {
        throw std::runtime_error("redundancy exceeds the annotator count");
    }
    law.validate();
}

SynthResult generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    SynthResult result;
    result.annotator_accuracy.resize(cfg.num_annotators);
    for (double& acc : result.annotator_accuracy) {
        switch (cfg.law.kind) {
            case AccuracyLaw::Kind::fixed:
                acc = cfg.law.p1;
                break;
            case AccuracyLaw::Kind::uniform:
                acc = cfg.law.p1 + (cfg.law.p2 - cfg.law.p1) * uniform01(rng);
                break;
            case AccuracyLaw::Kind::two_point:
                acc = uniform01(rng) < cfg.law.mix ? cfg.law.p1 : cfg.law.p2;
                break;
        }
    }

    Dataset& ds = result.dataset;
    ds.num_tasks = cfg.num_tasks;
    ds.num_annotators = cfg.num_annotators;
    ds.num_choices = cfg.num_choices;
    ds.choices_fixed = true;
    ds.task_names.reserve(cfg.num_tasks);
    for (int t = 0; t < cfg.num_tasks; ++t) {
        ds.task_names.push_back("t" + std::to_string(t));
    }
    ds.annotator_names.reserve(cfg.num_annotators);
    for (int i = 0; i < cfg.num_annotators; ++i) {
        ds.annotator_names.push_back("w" + std::to_string(i));
    }
    ds.label_names.reserve(cfg.num_choices);
    for (int k = 0; k < cfg.num_choices; ++k) {
        ds.label_names.push_back(std::to_string(k));
    }

    for (int t = 0; t < cfg.num_tasks; ++t) {
        ds.truths[t] = static_cast<int>(bounded_rand(rng, cfg.num_choices));
    }

    std::vector<int> pool(cfg.num_annotators);
    for (int i = 0; i < cfg.num_annotators; ++i) pool[i] = i;
    ds.annotations.reserve(static_cast<size_t>(cfg.num_tasks) * cfg.redundancy);
    for (int t = 0; t < cfg.num_tasks; ++t) {
        // partial Fisher-Yates picks `redundancy` distinct annotators
        for (int s = 0; s < cfg.redundancy; ++s) {
            const int j =
                s + static_cast<int>(bounded_rand(rng, cfg.num_annotators - s));
            std::swap(pool[s], pool[j]);
        }
        const int truth = ds.truths[t];
        for (int s = 0; s < cfg.redundancy; ++s) {
            const int annotator = pool[s];
            int label = truth;
            if (uniform01(rng) >= result.annotator_accuracy[annotator]) {
                label = static_cast<int>(
                    (truth + 1 + bounded_rand(rng, cfg.num_choices - 1)) %
                    cfg.num_choices);
            }
            ds.annotations.push_back({t, annotator, label});
        }
    }
    ds.finalize();
    return result;
}

}  // namespace superla
