#include "superla/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace superla {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'A', 'C'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& out, const std::vector<double>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void write_i32(std::ostream& out, const std::vector<int>& v) {
    write_u64(out, v.size());
    for (int x : v) write_u32(out, static_cast<uint32_t>(x));
}

void write_strings(std::ostream& out, const std::vector<std::string>& v) {
    write_u64(out, v.size());
    for (const auto& s : v) {
        write_u32(out, static_cast<uint32_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
}

uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("corrupt checkpoint: truncated file");
    return v;
}

uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("corrupt checkpoint: truncated file");
    return v;
}

std::vector<double> read_f64(std::istream& in) {
    const uint64_t n = read_u64(in);
    if (n > (1ull << 32)) throw std::runtime_error("corrupt checkpoint: bad size");
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("corrupt checkpoint: truncated file");
    return v;
}

std::vector<int> read_i32(std::istream& in) {
    const uint64_t n = read_u64(in);
    if (n > (1ull << 32)) throw std::runtime_error("corrupt checkpoint: bad size");
    std::vector<int> v(n);
    for (auto& x : v) x = static_cast<int>(read_u32(in));
    return v;
}

std::vector<std::string> read_strings(std::istream& in) {
    const uint64_t n = read_u64(in);
    if (n > (1ull << 32)) throw std::runtime_error("corrupt checkpoint: bad size");
    std::vector<std::string> v(n);
    for (auto& s : v) {
        const uint32_t len = read_u32(in);
        s.resize(len);
        in.read(s.data(), len);
        if (!in) throw std::runtime_error("corrupt checkpoint: truncated file");
    }
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, static_cast<uint32_t>(cp.params.dims.num_choices));
    write_u32(out, static_cast<uint32_t>(cp.params.dims.num_annotators));
    write_u32(out, static_cast<uint32_t>(cp.params.dims.max_annotations));
    write_u64(out, cp.params.seed);
    write_strings(out, cp.annotator_names);
    write_strings(out, cp.label_names);
    write_f64(out, cp.stats.acc);
    write_f64(out, cp.stats.stddev);
    write_i32(out, cp.stats.count);
    out.write(reinterpret_cast<const char*>(&cp.stats.global_mean_acc),
              sizeof(double));
    write_f64(out, cp.params.theta);
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a model checkpoint: " + path);
    }
    const uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw std::runtime_error("unsupported checkpoint version " +
                                 std::to_string(version));
    }
    Checkpoint cp;
    cp.params.dims.num_choices = static_cast<int>(read_u32(in));
    cp.params.dims.num_annotators = static_cast<int>(read_u32(in));
    cp.params.dims.max_annotations = static_cast<int>(read_u32(in));
    cp.params.seed = read_u64(in);
    cp.annotator_names = read_strings(in);
    cp.label_names = read_strings(in);
    cp.stats.acc = read_f64(in);
    cp.stats.stddev = read_f64(in);
    cp.stats.count = read_i32(in);
    in.read(reinterpret_cast<char*>(&cp.stats.global_mean_acc), sizeof(double));
    cp.params.theta = read_f64(in);
    if (!in) throw std::runtime_error("corrupt checkpoint: truncated file");
    if (static_cast<int>(cp.params.theta.size()) !=
            cp.params.dims.total_params() ||
        static_cast<int>(cp.annotator_names.size()) !=
            cp.params.dims.num_annotators ||
        static_cast<int>(cp.label_names.size()) != cp.params.dims.num_choices ||
        cp.stats.acc.size() != cp.annotator_names.size()) {
        throw std::runtime_error("corrupt checkpoint: inconsistent sizes");
    }
    return cp;
}

Dataset remap_for_model(const Checkpoint& cp, const Dataset& ds) {
    std::unordered_map<std::string, int> annotator_rows, label_ids;
    for (int i = 0; i < static_cast<int>(cp.annotator_names.size()); ++i) {
        annotator_rows.emplace(cp.annotator_names[i], i);
    }
    for (int i = 0; i < static_cast<int>(cp.label_names.size()); ++i) {
        label_ids.emplace(cp.label_names[i], i);
    }
    const int oov = cp.params.dims.num_annotators;

    Dataset out;
    out.num_tasks = ds.num_tasks;
    out.num_annotators = oov + 1;  // row `oov` collects all unseen annotators
    out.num_choices = cp.params.dims.num_choices;
    out.choices_fixed = true;
    out.task_names = ds.task_names;
    out.annotator_names = cp.annotator_names;
    out.annotator_names.push_back("<unseen>");
    out.label_names = cp.label_names;

    auto map_label = [&](int label) {
        auto it = label_ids.find(ds.label_names[label]);
        if (it == label_ids.end()) {
            throw std::runtime_error(
                "label '" + ds.label_names[label] +
                "' is not part of the model (trained with K=" +
                std::to_string(cp.params.dims.num_choices) + ")");
        }
        return it->second;
    };
    out.annotations.reserve(ds.annotations.size());
    for (const auto& a : ds.annotations) {
        auto row_it = annotator_rows.find(ds.annotator_names[a.annotator]);
        const int row = row_it == annotator_rows.end() ? oov : row_it->second;
        out.annotations.push_back({a.task, row, map_label(a.label)});
    }
    for (const auto& [task, label] : ds.truths) {
        out.truths[task] = map_label(label);
    }
    out.finalize();
    return out;
}

}  // namespace superla
