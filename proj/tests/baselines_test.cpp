#include "superla/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "superla/eval.hpp"
#include "superla/synth.hpp"
#include "test_util.hpp"

using namespace superla;
using testutil::make_dataset;

TEST_CASE("majority vote: plurality and smallest-label ties") {
    Dataset ds = make_dataset(2, 2, 3,
                              {{0, 0, 0}, {0, 1, 0}, {0, 2, 1}, {1, 0, 0}, {1, 1, 1}});
    auto preds = majority_vote(ds, {0, 1});
    CHECK(preds.at(0) == 0);
    CHECK(preds.at(1) == 0);  // 1-1 tie goes to the smaller label
}

TEST_CASE("wawa equals majority vote when annotators agree everywhere") {
    Dataset ds = make_dataset(2, 3, 3,
                              {{0, 0, 1}, {0, 1, 1}, {0, 2, 1},
                               {1, 0, 0}, {1, 1, 0}, {1, 2, 0},
                               {2, 0, 1}, {2, 1, 1}, {2, 2, 1}});
    auto mv = majority_vote(ds, {0, 1, 2});
    auto ww = wawa(ds, {0, 1, 2});
    CHECK(ww.predictions == mv);
    for (double w : ww.weights) CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("an annotator who always disagrees gets a below-average weight") {
    // 4 agreeing annotators, 1 adversary voting the opposite on 5 tasks
    std::vector<Annotation> anns;
    for (int t = 0; t < 5; ++t) {
        for (int w = 0; w < 4; ++w) anns.push_back({t, w, 0});
        anns.push_back({t, 4, 1});
    }
    Dataset ds = make_dataset(2, 5, 5, anns);
    auto result = wawa(ds, {0, 1, 2, 3, 4});
    double mean = 0.0;
    for (double w : result.weights) mean += w;
    mean /= 5.0;
    CHECK(result.weights[4] < mean);
    CHECK(result.weights[4] == doctest::Approx(0.0));
    CHECK(result.weights[0] == doctest::Approx(1.0));
    for (int t = 0; t < 5; ++t) CHECK(result.predictions.at(t) == 0);
}

TEST_CASE("zbs converges to majority vote on unanimous data") {
    Dataset ds = make_dataset(2, 2, 3,
                              {{0, 0, 1}, {0, 1, 1}, {0, 2, 1},
                               {1, 0, 0}, {1, 1, 0}, {1, 2, 0}});
    auto mv = majority_vote(ds, {0, 1});
    auto zbs = zero_based_skill(ds, {0, 1});
    CHECK(zbs.predictions == mv);
    for (double s : zbs.skills) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("zbs skills stay inside [0,1] and it beats mv with one expert") {
    SynthConfig cfg;
    cfg.num_tasks = 1500;
    cfg.num_annotators = 5;
    cfg.num_choices = 2;
    cfg.redundancy = 5;
    cfg.law = AccuracyLaw::two_point(0.95, 0.55, 0.2);
    // deterministic scan for a population with exactly one expert
    SynthResult synth;
    bool found = false;
    for (uint64_t seed = 100; seed < 200 && !found; ++seed) {
        cfg.seed = seed;
        synth = generate(cfg);
        int experts = 0;
        for (double a : synth.annotator_accuracy) experts += a == 0.95 ? 1 : 0;
        found = experts == 1;
    }
    REQUIRE(found);

    const auto tasks = truthed_tasks(synth.dataset);
    auto zbs = zero_based_skill(synth.dataset, tasks);
    for (double s : zbs.skills) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
    const double zbs_acc = accuracy(zbs.predictions, synth.dataset.truths);
    const double mv_acc =
        accuracy(majority_vote(synth.dataset, tasks), synth.dataset.truths);
    CHECK(zbs_acc >= mv_acc);
}

TEST_CASE("dawid-skene on two perfect agreeing annotators") {
    std::vector<Annotation> anns;
    for (int t = 0; t < 6; ++t) {
        anns.push_back({t, 0, t % 2});
        anns.push_back({t, 1, t % 2});
    }
    Dataset ds = make_dataset(2, 6, 2, anns);
    auto result = dawid_skene(ds, {0, 1, 2, 3, 4, 5});
    for (int t = 0; t < 6; ++t) {
        CHECK(result.predictions.at(t) == t % 2);
    }
    for (size_t i = 0; i < result.posteriors.size(); ++i) {
        const int label = result.tasks[i] % 2;
        CHECK(result.posteriors[i][label] > 0.999);
    }
    // confusion close to the identity
    for (int w = 0; w < 2; ++w) {
        CHECK(result.model.annotator[w][0 * 2 + 0] > 0.99);
        CHECK(result.model.annotator[w][1 * 2 + 1] > 0.99);
    }
}

TEST_CASE("dawid-skene log-likelihood never decreases") {
    for (uint64_t seed = 0; seed < 6; ++seed) {
        SynthConfig cfg;
        cfg.num_tasks = 120;
        cfg.num_annotators = 10;
        cfg.num_choices = 3;
        cfg.redundancy = 4;
        cfg.law = AccuracyLaw::uniform(0.35, 0.95);
        cfg.seed = 400 + seed;
        auto synth = generate(cfg);
        auto result = dawid_skene(synth.dataset, truthed_tasks(synth.dataset));
        REQUIRE(result.log_likelihood.size() >= 2);
        for (size_t i = 1; i < result.log_likelihood.size(); ++i) {
            CHECK(result.log_likelihood[i] >= result.log_likelihood[i - 1] - 1e-9);
        }
        // posterior and confusion rows are distributions
        for (const auto& row : result.posteriors) {
            double sum = 0.0;
            for (double v : row) {
                sum += v;
                CHECK(v >= 0.0);
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
        const int K = synth.dataset.num_choices;
        for (const auto& rows : result.model.annotator) {
            for (int g = 0; g < K; ++g) {
                double sum = 0.0;
                for (int l = 0; l < K; ++l) sum += rows[g * K + l];
                CHECK(std::abs(sum - 1.0) < 1e-9);
            }
        }
        double prior_sum = 0.0;
        for (double p : result.model.prior) prior_sum += p;
        CHECK(std::abs(prior_sum - 1.0) < 1e-9);
    }
}

TEST_CASE("dawid-skene with zero iterations reproduces majority vote") {
    SynthConfig cfg;
    cfg.num_tasks = 90;
    cfg.num_annotators = 8;
    cfg.num_choices = 4;
    cfg.redundancy = 5;
    cfg.law = AccuracyLaw::uniform(0.4, 0.9);
    cfg.seed = 3;
    auto synth = generate(cfg);
    const auto tasks = truthed_tasks(synth.dataset);
    DawidSkeneOptions opts;
    opts.max_iter = 0;
    auto ds0 = dawid_skene(synth.dataset, tasks, opts);
    auto mv = majority_vote(synth.dataset, tasks);
    CHECK(ds0.predictions == mv);
}

TEST_CASE("an annotator outside the scope gets uniform confusion rows") {
    Dataset ds = make_dataset(2, 2, 2, {{0, 0, 0}, {1, 0, 1}}, {});
    // annotator 1 never annotates the scoped tasks
    auto result = dawid_skene(ds, {0, 1});
    CHECK(result.model.annotator[1][0] == doctest::Approx(0.5));
    CHECK(result.model.annotator[1][1] == doctest::Approx(0.5));
}

TEST_CASE("zencrowd with a single annotator follows their labels") {
    Dataset ds = make_dataset(2, 4, 1, {{0, 0, 1}, {1, 0, 0}, {2, 0, 1}, {3, 0, 1}});
    auto result = zencrowd(ds, {0, 1, 2, 3});
    CHECK(result.predictions.at(0) == 1);
    CHECK(result.predictions.at(1) == 0);
    CHECK(result.predictions.at(2) == 1);
    CHECK(result.predictions.at(3) == 1);
}

TEST_CASE("zencrowd reliabilities stay strictly inside (0,1)") {
    SynthConfig cfg;
    cfg.num_tasks = 200;
    cfg.num_annotators = 10;
    cfg.num_choices = 2;
    cfg.redundancy = 5;
    cfg.law = AccuracyLaw::fixed(0.999);  // near-perfect, pushes toward the clip
    cfg.seed = 9;
    auto synth = generate(cfg);
    auto result = zencrowd(synth.dataset, truthed_tasks(synth.dataset));
    for (double r : result.reliability) {
        CHECK(r > 0.0);
        CHECK(r < 1.0);
    }
}

TEST_CASE("zencrowd recovers known reliabilities on binary data") {
    SynthConfig cfg;
    cfg.num_tasks = 1000;
    cfg.num_annotators = 20;
    cfg.num_choices = 2;
    cfg.redundancy = 10;
    cfg.law = AccuracyLaw::uniform(0.6, 0.9);
    cfg.seed = 42;
    auto synth = generate(cfg);
    auto result = zencrowd(synth.dataset, truthed_tasks(synth.dataset));
    double worst = 0.0;
    for (int i = 0; i < cfg.num_annotators; ++i) {
        worst = std::max(worst,
                         std::abs(result.reliability[i] - synth.annotator_accuracy[i]));
    }
    CHECK(worst < 0.05);
}

TEST_CASE("ds stays within a point of mv when all annotators are good") {
    SynthConfig cfg;
    cfg.num_tasks = 1200;
    cfg.num_annotators = 30;
    cfg.num_choices = 2;
    cfg.redundancy = 5;
    cfg.law = AccuracyLaw::uniform(0.55, 0.9);
    cfg.seed = 11;
    auto synth = generate(cfg);
    const auto tasks = truthed_tasks(synth.dataset);
    const double mv_acc =
        accuracy(majority_vote(synth.dataset, tasks), synth.dataset.truths);
    const double ds_acc = accuracy(dawid_skene(synth.dataset, tasks).predictions,
                                   synth.dataset.truths);
    CHECK(ds_acc >= mv_acc - 0.01);
}

TEST_CASE("warm-started parameters are estimated from the given truths") {
    SynthConfig cfg;
    cfg.num_tasks = 300;
    cfg.num_annotators = 6;
    cfg.num_choices = 2;
    cfg.redundancy = 3;
    cfg.law = AccuracyLaw::uniform(0.6, 0.95);
    cfg.seed = 12;
    auto synth = generate(cfg);
    const auto tasks = truthed_tasks(synth.dataset);
    auto reliability = reliability_from_truths(synth.dataset, tasks);
    for (int i = 0; i < cfg.num_annotators; ++i) {
        CHECK(std::abs(reliability[i] - synth.annotator_accuracy[i]) < 0.1);
    }
    auto confusion = confusion_from_truths(synth.dataset, tasks);
    const int K = 2;
    for (int w = 0; w < cfg.num_annotators; ++w) {
        for (int g = 0; g < K; ++g) {
            double sum = 0.0;
            for (int l = 0; l < K; ++l) sum += confusion.annotator[w][g * K + l];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
            // diagonal should be near the annotator's accuracy
            CHECK(std::abs(confusion.annotator[w][g * K + g] -
                           synth.annotator_accuracy[w]) < 0.15);
        }
    }
    // the warm start can seed the EM runs
    DawidSkeneOptions opts;
    opts.init = &confusion;
    auto result = dawid_skene(synth.dataset, tasks, opts);
    CHECK(accuracy(result.predictions, synth.dataset.truths) > 0.8);
    ZenCrowdOptions zopts;
    zopts.init_reliability = &reliability;
    auto zc = zencrowd(synth.dataset, tasks, zopts);
    CHECK(accuracy(zc.predictions, synth.dataset.truths) > 0.8);
}
