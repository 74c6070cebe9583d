#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "superla/dataset.hpp"

namespace testutil {

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// in-memory dataset with auto-generated names (t0..., w0..., labels "0"...)
inline superla::Dataset make_dataset(
    int num_choices, int num_tasks, int num_annotators,
    std::vector<superla::Annotation> annotations,
    std::vector<std::pair<int, int>> truths = {}) {
    superla::Dataset ds;
    ds.num_tasks = num_tasks;
    ds.num_annotators = num_annotators;
    ds.num_choices = num_choices;
    ds.choices_fixed = true;
    for (int t = 0; t < num_tasks; ++t) ds.task_names.push_back("t" + std::to_string(t));
    for (int i = 0; i < num_annotators; ++i) {
        ds.annotator_names.push_back("w" + std::to_string(i));
    }
    for (int k = 0; k < num_choices; ++k) ds.label_names.push_back(std::to_string(k));
    ds.annotations = std::move(annotations);
    for (auto [task, label] : truths) ds.truths[task] = label;
    ds.finalize();
    return ds;
}

// FNV-1a over the raw bytes; used for parameter purity checks
inline uint64_t hash_doubles(const std::vector<double>& values) {
    uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
    for (size_t i = 0; i < values.size() * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace testutil
