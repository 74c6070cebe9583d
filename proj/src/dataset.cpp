#include "superla/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "superla/util.hpp"

namespace superla {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    size_t i = 0;
    const size_t n = line.size();
    while (i < n) {
        while (i < n && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        size_t start = i;
        while (i < n && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) fields.emplace_back(line.substr(start, i - start));
    }
    return fields;
}

bool skippable(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;  // blank
}

int intern(std::unordered_map<std::string, int>& index,
           std::vector<std::string>& names, const std::string& key) {
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(names.size());
    index.emplace(key, id);
    names.push_back(key);
    return id;
}

}  // namespace

void Dataset::finalize() {
    by_task.assign(num_tasks, {});
    for (int i = 0; i < static_cast<int>(annotations.size()); ++i) {
        by_task[annotations[i].task].push_back(i);
    }
    l_max = 0;
    for (auto& ids : by_task) {
        // canonical order: ascending annotator; stable so that equal indices
        // (the OOV row after remapping) keep file order
        std::stable_sort(ids.begin(), ids.end(), [this](int a, int b) {
            return annotations[a].annotator < annotations[b].annotator;
        });
        l_max = std::max(l_max, static_cast<int>(ids.size()));
    }
}

Dataset load_annotations(const std::string& answer_path,
                         std::optional<int> num_choices) {
    std::ifstream in(answer_path);
    if (!in) {
        throw std::runtime_error("cannot open answer file: " + answer_path);
    }
    Dataset ds;
    std::unordered_map<std::string, int> task_index, annotator_index, label_index;
    std::unordered_set<uint64_t> seen_pairs;
    if (num_choices) {
        if (*num_choices < 2) {
            throw std::runtime_error("choice count override must be >= 2");
        }
        ds.choices_fixed = true;
        ds.num_choices = *num_choices;
    }

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skippable(line)) continue;
        auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw std::runtime_error(answer_path + ":" + std::to_string(line_no) +
                                     ": expected 3 fields, got " +
                                     std::to_string(fields.size()));
        }
        const int task = intern(task_index, ds.task_names, fields[0]);
        const int annotator = intern(annotator_index, ds.annotator_names, fields[1]);
        const int label = intern(label_index, ds.label_names, fields[2]);
        if (ds.choices_fixed && label >= ds.num_choices) {
            throw std::runtime_error(answer_path + ":" + std::to_string(line_no) +
                                     ": label '" + fields[2] +
                                     "' exceeds the configured choice count " +
                                     std::to_string(ds.num_choices));
        }
        const uint64_t pair =
            (static_cast<uint64_t>(task) << 32) | static_cast<uint32_t>(annotator);
        if (!seen_pairs.insert(pair).second) {
            throw std::runtime_error("duplicate annotation by '" + fields[1] +
                                     "' on task '" + fields[0] + "'");
        }
        ds.annotations.push_back({task, annotator, label});
    }
    ds.num_tasks = static_cast<int>(ds.task_names.size());
    ds.num_annotators = static_cast<int>(ds.annotator_names.size());
    if (!ds.choices_fixed) ds.num_choices = static_cast<int>(ds.label_names.size());
    if (!ds.annotations.empty() && static_cast<int>(ds.label_names.size()) < 2 &&
        !ds.choices_fixed) {
        throw std::runtime_error(answer_path +
                                 ": only one distinct label observed; pass an "
                                 "explicit choice count if this is intended");
    }
    ds.finalize();
    return ds;
}

void load_truths(const std::string& truth_path, Dataset& ds) {
    std::ifstream in(truth_path);
    if (!in) {
        throw std::runtime_error("cannot open truth file: " + truth_path);
    }
    std::unordered_map<std::string, int> task_index, label_index;
    for (int i = 0; i < ds.num_tasks; ++i) task_index.emplace(ds.task_names[i], i);
    for (int i = 0; i < static_cast<int>(ds.label_names.size()); ++i) {
        label_index.emplace(ds.label_names[i], i);
    }

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skippable(line)) continue;
        auto fields = split_fields(line);
        if (fields.size() != 2) {
            throw std::runtime_error(truth_path + ":" + std::to_string(line_no) +
                                     ": expected 2 fields, got " +
                                     std::to_string(fields.size()));
        }
        auto task_it = task_index.find(fields[0]);
        if (task_it == task_index.end()) {
            std::cerr << "warning: " << truth_path << ":" << line_no
                      << ": truth for unknown task '" << fields[0]
                      << "' skipped (it has no annotations to aggregate)\n";
            continue;
        }
        auto label_it = label_index.find(fields[1]);
        int label;
        if (label_it != label_index.end()) {
            label = label_it->second;
        } else if (!ds.choices_fixed) {
            // K covers observed labels plus observed truths
            label = intern(label_index, ds.label_names, fields[1]);
            ds.num_choices = static_cast<int>(ds.label_names.size());
        } else {
            throw std::runtime_error(truth_path + ":" + std::to_string(line_no) +
                                     ": unknown truth label '" + fields[1] + "'");
        }
        ds.truths[task_it->second] = label;
    }
}

void save_annotations(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write answer file: " + path);
    for (const auto& a : ds.annotations) {
        out << ds.task_names[a.task] << '\t' << ds.annotator_names[a.annotator]
            << '\t' << ds.label_names[a.label] << '\n';
    }
}

void save_truths(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write truth file: " + path);
    for (int t = 0; t < ds.num_tasks; ++t) {
        auto it = ds.truths.find(t);
        if (it == ds.truths.end()) continue;
        out << ds.task_names[t] << '\t' << ds.label_names[it->second] << '\n';
    }
}

std::vector<int> truthed_tasks(const Dataset& ds) {
    std::vector<int> tasks;
    tasks.reserve(ds.truths.size());
    for (int t = 0; t < ds.num_tasks; ++t) {
        if (ds.has_truth(t)) tasks.push_back(t);
    }
    return tasks;
}

std::vector<int> annotated_tasks(const Dataset& ds) {
    std::vector<int> tasks;
    for (int t = 0; t < ds.num_tasks; ++t) {
        if (ds.annotation_count(t) > 0) tasks.push_back(t);
    }
    return tasks;
}

std::vector<FoldSplit> kfold_split(const Dataset& ds, int folds, uint64_t seed) {
    if (folds < 2) throw std::runtime_error("fold count must be >= 2");
    std::vector<int> universe = truthed_tasks(ds);
    const int total = static_cast<int>(universe.size());
    if (total < folds) {
        throw std::runtime_error("k-fold split needs at least " +
                                 std::to_string(folds) +
                                 " ground-truthed tasks, have " +
                                 std::to_string(total));
    }
    std::mt19937_64 rng(seed);
    deterministic_shuffle(universe, rng);

    std::vector<FoldSplit> splits;
    splits.reserve(folds);
    for (int f = 0; f < folds; ++f) {
        const int begin = static_cast<int>(static_cast<int64_t>(total) * f / folds);
        const int end = static_cast<int>(static_cast<int64_t>(total) * (f + 1) / folds);
        FoldSplit split;
        split.fold_index = f;
        split.test_tasks.assign(universe.begin() + begin, universe.begin() + end);
        std::vector<int> remainder;
        remainder.reserve(total - (end - begin));
        remainder.insert(remainder.end(), universe.begin(), universe.begin() + begin);
        remainder.insert(remainder.end(), universe.begin() + end, universe.end());
        const int val_count = static_cast<int>(remainder.size()) / 5;  // 20%, floor
        split.val_tasks.assign(remainder.begin(), remainder.begin() + val_count);
        split.train_tasks.assign(remainder.begin() + val_count, remainder.end());
        std::sort(split.train_tasks.begin(), split.train_tasks.end());
        std::sort(split.val_tasks.begin(), split.val_tasks.end());
        std::sort(split.test_tasks.begin(), split.test_tasks.end());
        splits.push_back(std::move(split));
    }
    return splits;
}

Dataset truncate_annotations(const Dataset& ds, const std::vector<int>& tasks,
                             int keep) {
    if (keep < 0) throw std::runtime_error("annotation budget must be >= 0");
    std::unordered_set<int> scoped(tasks.begin(), tasks.end());
    Dataset out = ds;
    out.annotations.clear();
    std::vector<char> keep_flag(ds.annotations.size(), 0);
    for (int t = 0; t < ds.num_tasks; ++t) {
        const auto& ids = ds.by_task[t];
        const int limit =
            scoped.count(t) ? std::min<int>(keep, static_cast<int>(ids.size()))
                            : static_cast<int>(ids.size());
        for (int s = 0; s < limit; ++s) keep_flag[ids[s]] = 1;
    }
    for (size_t i = 0; i < ds.annotations.size(); ++i) {
        if (keep_flag[i]) out.annotations.push_back(ds.annotations[i]);
    }
    out.finalize();
    return out;
}

}  // namespace superla
