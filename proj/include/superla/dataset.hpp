#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace superla {

// One crowd answer: annotator gave `label` to `task`. All three are dense
// 0-based indices into the owning Dataset's vocabularies.
struct Annotation {
    int task = 0;
    int annotator = 0;
    int label = 0;
};

struct Dataset {
    int num_tasks = 0;       // M
    int num_annotators = 0;  // N
    int num_choices = 0;     // K
    std::vector<Annotation> annotations;       // file order
    std::unordered_map<int, int> truths;       // task -> label, partial
    std::vector<std::string> task_names;
    std::vector<std::string> annotator_names;
    std::vector<std::string> label_names;
    bool choices_fixed = false;  // true when K came from an explicit override
    int l_max = 0;               // max annotations on any single task

    // per task, annotation ids sorted by annotator index (canonical order)
    std::vector<std::vector<int>> by_task;

    int annotation_count(int task) const {
        return static_cast<int>(by_task[task].size());
    }
    bool has_truth(int task) const { return truths.count(task) > 0; }

    // Rebuilds by_task and l_max; call after editing `annotations` directly.
    void finalize();
};

struct FoldSplit {
    int fold_index = 0;
    // pairwise disjoint, sorted ascending; union = all ground-truthed tasks
    std::vector<int> train_tasks;
    std::vector<int> val_tasks;
    std::vector<int> test_tasks;
};

// Reads `<task> <annotator> <label>` lines (tab or space separated; blank
// lines and lines starting with '#' are skipped). Indices are assigned in
// first-appearance order. `num_choices` fixes K beyond the observed labels.
Dataset load_annotations(const std::string& answer_path,
                         std::optional<int> num_choices = std::nullopt);

// Reads `<task> <label>` lines into ds.truths. Truths for unknown tasks are
// skipped with a warning; novel labels extend the label index unless K was
// fixed at load, in which case they are an error.
void load_truths(const std::string& truth_path, Dataset& ds);

void save_annotations(const Dataset& ds, const std::string& path);
void save_truths(const Dataset& ds, const std::string& path);

// Seeded shuffle of the ground-truthed tasks, partitioned into `folds` equal
// test blocks; per fold, 20% of the non-test remainder (rounded down) is
// validation and the rest is train.
std::vector<FoldSplit> kfold_split(const Dataset& ds, int folds, uint64_t seed);

// All tasks carrying ground truth, ascending.
std::vector<int> truthed_tasks(const Dataset& ds);
// All tasks with at least one annotation, ascending.
std::vector<int> annotated_tasks(const Dataset& ds);

// Copy of `ds` where each listed task keeps only its first `keep` annotations
// in canonical order. Other tasks are untouched.
Dataset truncate_annotations(const Dataset& ds, const std::vector<int>& tasks,
                             int keep);

}  // namespace superla
