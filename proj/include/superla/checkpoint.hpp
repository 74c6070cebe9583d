#pragma once

#include <string>
#include <vector>

#include "superla/model.hpp"

namespace superla {

// Everything needed to run inference later: parameters, the annotator
// statistics they were trained with, and the string vocabularies that pin the
// feature layout.
struct Checkpoint {
    ModelParams params;
    AnnotatorStats stats;
    std::vector<std::string> annotator_names;  // size N
    std::vector<std::string> label_names;      // size K
};

// Versioned binary serialization; doubles round-trip bit-exact, so a saved and
// reloaded model reproduces identical predictions.
void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Maps a freshly loaded dataset into the model's index space: labels through
// the stored label vocabulary (unknown labels are an incompatibility error),
// annotators through the stored annotator vocabulary with unseen IDs collapsed
// onto the OOV row N.
Dataset remap_for_model(const Checkpoint& cp, const Dataset& ds);

}  // namespace superla
