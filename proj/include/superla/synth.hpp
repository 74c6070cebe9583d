#pragma once

#include <cstdint>
#include <vector>

#include "superla/dataset.hpp"

namespace superla {

// How per-annotator accuracies are drawn.
struct AccuracyLaw {
    enum class Kind { fixed, uniform, two_point };
    Kind kind = Kind::fixed;
    double p1 = 0.0;
    double p2 = 0.0;
    double mix = 0.0;  // probability of p1 in the two-point law

    static AccuracyLaw fixed(double p);
    static AccuracyLaw uniform(double lo, double hi);
    static AccuracyLaw two_point(double p1, double p2, double mix);

    void validate() const;
};

struct SynthConfig {
    int num_tasks = 0;
    int num_annotators = 0;
    int num_choices = 2;
    int redundancy = 1;  // annotations per task, distinct annotators
    AccuracyLaw law;
    uint64_t seed = 0;

    void validate() const;
};

struct SynthResult {
    Dataset dataset;  // fully ground-truthed
    std::vector<double> annotator_accuracy;
};

// Truths uniform over K; each task gets `redundancy` distinct annotators
// chosen uniformly; an annotation matches the truth with the annotator's
// accuracy, otherwise it is uniform over the K-1 wrong labels. Byte-identical
// output for a fixed seed.
SynthResult generate(const SynthConfig& cfg);

}  // namespace superla
