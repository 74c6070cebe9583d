// Command-line front end: train / infer / benchmark / simulate / redundancy.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "superla/checkpoint.hpp"
#include "superla/eval.hpp"
#include "superla/synth.hpp"
#include "superla/util.hpp"

namespace {

using namespace superla;

struct CommonArgs {
    uint64_t seed = 1;
    std::string out_dir = ".";
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& common) {
    cmd->add_option("--seed", common.seed, "seed for every random choice")
        ->capture_default_str();
    cmd->add_option("--out-dir", common.out_dir, "directory for result files")
        ->capture_default_str();
    cmd->add_flag("--quiet", common.quiet, "suppress progress logging");
}

struct ModelArgs {
    TrainConfig cfg;
};

void add_model_overrides(CLI::App* cmd, ModelArgs& args) {
    cmd->add_option("--lr", args.cfg.learning_rate, "learning rate")
        ->capture_default_str();
    cmd->add_option("--batch-size", args.cfg.batch_size, "training batch size")
        ->capture_default_str();
    cmd->add_option("--weight-decay", args.cfg.weight_decay,
                    "decoupled weight decay rate")
        ->capture_default_str();
    cmd->add_option("--dropout", args.cfg.dropout_rate, "dropout rate")
        ->capture_default_str();
    cmd->add_option("--patience", args.cfg.patience,
                    "non-improving validation epochs tolerated")
        ->capture_default_str();
    cmd->add_option("--replication", args.cfg.replication,
                    "augmentation copies per training task")
        ->capture_default_str();
    cmd->add_option("--max-epochs", args.cfg.max_epochs, "hard epoch bound")
        ->capture_default_str();
}

class ConfigEcho {
public:
    void add(const std::string& key, const std::string& value) {
        lines_.push_back(key + " = " + value);
    }
    template <typename T>
    void add(const std::string& key, const T& value) {
        std::ostringstream out;
        out << value;
        add(key, out.str());
    }
    void print() const {
        for (const auto& line : lines_) std::cout << "config: " << line << "\n";
    }

private:
    std::vector<std::string> lines_;
};

void echo_common(ConfigEcho& echo, const std::string& command,
                 const CommonArgs& common) {
    echo.add("command", command);
    echo.add("seed", common.seed);
    echo.add("out_dir", common.out_dir);
    echo.add("quiet", common.quiet ? "true" : "false");
}

void echo_model(ConfigEcho& echo, const TrainConfig& cfg) {
    echo.add("lr", cfg.learning_rate);
    echo.add("batch_size", cfg.batch_size);
    echo.add("weight_decay", cfg.weight_decay);
    echo.add("dropout", cfg.dropout_rate);
    echo.add("patience", cfg.patience);
    echo.add("replication", cfg.replication);
    echo.add("max_epochs", cfg.max_epochs);
}

AccuracyLaw parse_law(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::string rest = spec.substr(colon + 1);
        std::replace(rest.begin(), rest.end(), ',', ' ');
        std::istringstream in(rest);
        double v;
        while (in >> v) args.push_back(v);
    }
    if (kind == "fixed" && args.size() == 1) return AccuracyLaw::fixed(args[0]);
    if (kind == "uniform" && args.size() == 2) {
        return AccuracyLaw::uniform(args[0], args[1]);
    }
    if (kind == "two-point" && args.size() == 3) {
        return AccuracyLaw::two_point(args[0], args[1], args[2]);
    }
    throw std::runtime_error(
        "bad accuracy law '" + spec +
        "' (use fixed:P, uniform:LO,HI or two-point:P1,P2,MIX)");
}

std::string law_to_string(const AccuracyLaw& law) {
    std::ostringstream out;
    switch (law.kind) {
        case AccuracyLaw::Kind::fixed: out << "fixed:" << law.p1; break;
        case AccuracyLaw::Kind::uniform:
            out << "uniform:" << law.p1 << "," << law.p2;
            break;
        case AccuracyLaw::Kind::two_point:
            out << "two-point:" << law.p1 << "," << law.p2 << "," << law.mix;
            break;
    }
    return out.str();
}

Dataset load_dataset(const std::string& answers, const std::string& truths,
                     std::optional<int> choices) {
    Dataset ds = load_annotations(answers, choices);
    if (!truths.empty()) load_truths(truths, ds);
    return ds;
}

std::vector<std::string> split_list(const std::string& value) {
    std::string copy = value;
    std::replace(copy.begin(), copy.end(), ',', ' ');
    std::istringstream in(copy);
    std::vector<std::string> items;
    std::string item;
    while (in >> item) items.push_back(item);
    return items;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += ",";
        out += item;
    }
    return out;
}

// ---- benchmark grid config --------------------------------------------------

struct GridEntry {
    std::string name;
    std::string answers;
    std::string truths;
    std::optional<int> choices;
};

struct GridConfig {
    std::optional<uint64_t> seed;
    int folds = 4;
    std::string mode = "test";
    int timing_runs = 1;
    std::vector<std::string> methods = registered_methods();
    TrainConfig model;
    std::vector<GridEntry> datasets;
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

GridConfig parse_grid_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open benchmark config: " + path);
    GridConfig grid;
    GridEntry* entry = nullptr;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto fail = [&](const std::string& why) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                                     why);
        };
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            std::istringstream header(line.substr(1, line.size() - 2));
            std::string kind, name;
            header >> kind >> name;
            if (kind != "dataset" || name.empty()) fail("expected [dataset NAME]");
            grid.datasets.push_back({name, "", "", std::nullopt});
            entry = &grid.datasets.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (entry != nullptr) {
            if (key == "answers") entry->answers = value;
            else if (key == "truths") entry->truths = value;
            else if (key == "choices") entry->choices = std::stoi(value);
            else fail("unknown dataset key '" + key + "'");
            continue;
        }
        if (key == "seed") grid.seed = std::stoull(value);
        else if (key == "folds") grid.folds = std::stoi(value);
        else if (key == "mode") grid.mode = value;
        else if (key == "timing_runs") grid.timing_runs = std::stoi(value);
        else if (key == "methods") grid.methods = split_list(value);
        else if (key == "superla.lr") grid.model.learning_rate = std::stod(value);
        else if (key == "superla.batch_size") grid.model.batch_size = std::stoi(value);
        else if (key == "superla.weight_decay") grid.model.weight_decay = std::stod(value);
        else if (key == "superla.dropout") grid.model.dropout_rate = std::stod(value);
        else if (key == "superla.patience") grid.model.patience = std::stoi(value);
        else if (key == "superla.replication") grid.model.replication = std::stoi(value);
        else if (key == "superla.max_epochs") grid.model.max_epochs = std::stoi(value);
        else fail("unknown key '" + key + "'");
    }
    if (grid.datasets.empty()) {
        throw std::runtime_error(path + ": no [dataset NAME] sections");
    }
    for (const auto& ds : grid.datasets) {
        if (ds.answers.empty()) {
            throw std::runtime_error(path + ": dataset '" + ds.name +
                                     "' is missing an answers path");
        }
    }
    return grid;
}

// ---- commands -----------------------------------------------------------------

int cmd_train(const std::string& answers, const std::string& truths,
              const std::string& out_model, std::optional<int> choices,
              ModelArgs& model, const CommonArgs& common) {
    ConfigEcho echo;
    echo_common(echo, "train", common);
    echo.add("answers", answers);
    echo.add("truths", truths);
    echo.add("out", out_model);
    echo.add("choices", choices ? std::to_string(*choices) : "auto");
    echo_model(echo, model.cfg);
    echo.print();

    Dataset ds = load_dataset(answers, truths, choices);
    auto truthed = truthed_tasks(ds);
    if (truthed.empty()) {
        throw std::runtime_error("no ground-truthed tasks to train on");
    }

    // carve 20% validation for early stopping; statistics and supervision
    // come from the remaining 80%
    std::vector<int> shuffled = truthed;
    std::mt19937_64 rng(mix_seed(common.seed, 0xCA));
    deterministic_shuffle(shuffled, rng);
    const int val_count = static_cast<int>(shuffled.size()) / 5;
    std::vector<int> val(shuffled.begin(), shuffled.begin() + val_count);
    std::vector<int> train_tasks(shuffled.begin() + val_count, shuffled.end());
    std::sort(val.begin(), val.end());
    std::sort(train_tasks.begin(), train_tasks.end());

    model.cfg.seed = common.seed;
    auto stats = compute_stats(ds, train_tasks);
    auto result = train(train_tasks, val, ds, stats, model.cfg);

    save_checkpoint({result.params, stats, ds.annotator_names, ds.label_names},
                    out_model);
    const std::string history_path = out_model + ".history.txt";
    std::ofstream history(history_path);
    history << "epoch\ttrain_loss\tval_loss\n";
    char buf[96];
    for (size_t e = 0; e < result.history.epochs.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu\t%.17g\t%.17g\n", e,
                      result.history.epochs[e].train_loss,
                      result.history.epochs[e].val_loss);
        history << buf;
    }
    history << "# best_epoch " << result.history.best_epoch << "\n";
    if (!common.quiet) {
        std::cout << "trained " << result.history.epochs.size() << " epochs (best "
                  << result.history.best_epoch << "), checkpoint written to "
                  << out_model << "\n";
    }
    return 0;
}

int cmd_infer(const std::string& answers, const std::string& model_path,
              const std::string& out_preds, const CommonArgs& common) {
    ConfigEcho echo;
    echo_common(echo, "infer", common);
    echo.add("answers", answers);
    echo.add("model", model_path);
    echo.add("out", out_preds);
    echo.print();

    Checkpoint cp = load_checkpoint(model_path);
    Dataset ds = load_annotations(answers, cp.params.dims.num_choices);
    Dataset mapped = remap_for_model(cp, ds);
    auto result = infer(annotated_tasks(mapped), mapped, cp.stats, cp.params);

    std::ofstream out(out_preds);
    if (!out) throw std::runtime_error("cannot write predictions: " + out_preds);
    size_t written = 0;
    for (int t = 0; t < mapped.num_tasks; ++t) {
        auto it = result.predictions.find(t);
        if (it == result.predictions.end()) continue;
        out << ds.task_names[t] << '\t' << cp.label_names[it->second] << '\n';
        ++written;
    }
    for (int t : result.skipped) {
        std::cerr << "warning: task '" << ds.task_names[t]
                  << "' has no annotations, skipped\n";
    }
    if (!common.quiet) {
        std::cout << "wrote " << written << " predictions to " << out_preds << "\n";
    }
    return 0;
}

int report_errors(const std::vector<std::pair<std::string, std::string>>& errors,
                  const std::string& path) {
    if (errors.empty()) return 0;
    std::ofstream out(path);
    for (const auto& [cell, message] : errors) {
        out << cell << '\t' << message << '\n';
        std::cerr << "error: " << cell << ": " << message << "\n";
    }
    std::cerr << errors.size() << " grid cell(s) failed; see " << path << "\n";
    return 1;
}

int cmd_benchmark(const std::string& config_path, std::string out_csv,
                  const CommonArgs& common) {
    GridConfig grid = parse_grid_config(config_path);
    if (out_csv.empty()) out_csv = common.out_dir + "/results.csv";

    BenchOptions opts;
    opts.folds = grid.folds;
    opts.seed = grid.seed.value_or(common.seed);
    opts.mode = parse_baseline_mode(grid.mode);
    opts.model = grid.model;
    opts.timing_runs = grid.timing_runs;
    opts.quiet = common.quiet;
    opts.dump_dir = common.out_dir + "/preds";

    ConfigEcho echo;
    echo_common(echo, "benchmark", common);
    echo.add("config", config_path);
    echo.add("out", out_csv);
    echo.add("folds", opts.folds);
    echo.add("mode", to_string(opts.mode));
    echo.add("methods", join(grid.methods));
    echo.add("timing_runs", opts.timing_runs);
    echo.add("effective_seed", opts.seed);
    echo_model(echo, opts.model);
    for (const auto& entry : grid.datasets) {
        echo.add("dataset." + entry.name,
                 entry.answers + (entry.truths.empty() ? "" : " + " + entry.truths));
    }
    echo.print();

    std::vector<NamedDataset> datasets;
    std::vector<std::pair<std::string, std::string>> errors;
    for (const auto& entry : grid.datasets) {
        try {
            datasets.push_back(
                {entry.name,
                 load_dataset(entry.answers, entry.truths, entry.choices)});
        } catch (const std::exception& e) {
            errors.emplace_back(entry.name, e.what());
        }
    }

    std::filesystem::create_directories(common.out_dir);
    auto cells = run_benchmark(datasets, grid.methods, opts);
    std::ofstream csv(out_csv);
    if (!csv) throw std::runtime_error("cannot write results: " + out_csv);
    write_results_csv(cells, csv);
    std::cout << format_results_table(cells);
    std::cout << "results written to " << out_csv << "\n";

    for (const auto& cell : cells) {
        if (!cell.error.empty()) {
            errors.emplace_back(cell.dataset + "/" + cell.method, cell.error);
        }
    }
    return report_errors(errors, out_csv + ".errors.txt");
}

int cmd_simulate(const SynthConfig& base, const std::string& law_spec,
                 const std::string& out_answers, const std::string& out_truths,
                 const CommonArgs& common) {
    SynthConfig cfg = base;
    cfg.law = parse_law(law_spec);
    cfg.seed = common.seed;

    ConfigEcho echo;
    echo_common(echo, "simulate", common);
    echo.add("tasks", cfg.num_tasks);
    echo.add("annotators", cfg.num_annotators);
    echo.add("choices", cfg.num_choices);
    echo.add("redundancy", cfg.redundancy);
    echo.add("law", law_to_string(cfg.law));
    echo.add("out_answers", out_answers);
    echo.add("out_truths", out_truths);
    echo.print();

    auto result = generate(cfg);
    save_annotations(result.dataset, out_answers);
    save_truths(result.dataset, out_truths);
    if (!common.quiet) {
        std::cout << "wrote " << result.dataset.annotations.size()
                  << " annotations over " << result.dataset.num_tasks
                  << " tasks to " << out_answers << "\n";
    }
    return 0;
}

int cmd_redundancy(const std::string& answers, const std::string& truths,
                   std::optional<int> choices, const std::string& levels_arg,
                   const std::string& methods_arg, int folds,
                   const std::string& mode, std::string out_csv,
                   ModelArgs& model, const CommonArgs& common) {
    std::vector<int> levels;
    for (const auto& item : split_list(levels_arg)) {
        levels.push_back(std::stoi(item));
    }
    if (levels.empty()) throw std::runtime_error("no redundancy levels given");
    auto methods = split_list(methods_arg);
    if (out_csv.empty()) out_csv = common.out_dir + "/redundancy.csv";

    ConfigEcho echo;
    echo_common(echo, "redundancy", common);
    echo.add("answers", answers);
    echo.add("truths", truths);
    echo.add("levels", levels_arg);
    echo.add("methods", join(methods));
    echo.add("folds", folds);
    echo.add("mode", mode);
    echo.add("out", out_csv);
    echo_model(echo, model.cfg);
    echo.print();

    NamedDataset nd{std::filesystem::path(answers).stem().string(),
                    load_dataset(answers, truths, choices)};
    BenchOptions opts;
    opts.folds = folds;
    opts.seed = common.seed;
    opts.mode = parse_baseline_mode(mode);
    opts.model = model.cfg;
    opts.quiet = common.quiet;

    std::filesystem::create_directories(common.out_dir);
    auto rows = redundancy_sweep(nd, methods, levels, opts);
    std::ofstream csv(out_csv);
    if (!csv) throw std::runtime_error("cannot write results: " + out_csv);
    write_redundancy_csv(nd.name, rows, csv);
    std::cout << "redundancy results written to " << out_csv << "\n";

    std::vector<std::pair<std::string, std::string>> errors;
    for (const auto& row : rows) {
        if (!row.error.empty()) {
            errors.emplace_back(row.method + "@r" + std::to_string(row.level),
                                row.error);
        }
    }
    return report_errors(errors, out_csv + ".errors.txt");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"supervised label aggregation for crowdsourced annotations"};
    app.require_subcommand(1);

    CommonArgs common;
    ModelArgs model;

    auto* train_cmd = app.add_subcommand("train", "train a model on answers+truths");
    std::string answers, truths, out_model;
    std::optional<int> choices;
    train_cmd->add_option("--answers", answers, "answer file")->required();
    train_cmd->add_option("--truths", truths, "ground-truth file")->required();
    train_cmd->add_option("--out", out_model, "checkpoint output path")->required();
    train_cmd->add_option("--choices", choices, "fix the choice count K");
    add_model_overrides(train_cmd, model);
    add_common(train_cmd, common);

    auto* infer_cmd =
        app.add_subcommand("infer", "aggregate labels with a trained model");
    std::string infer_answers, model_path, out_preds;
    infer_cmd->add_option("--answers", infer_answers, "answer file")->required();
    infer_cmd->add_option("--model", model_path, "model checkpoint")->required();
    infer_cmd->add_option("--out", out_preds, "prediction dump path")->required();
    add_common(infer_cmd, common);

    auto* bench_cmd = app.add_subcommand("benchmark", "run a dataset x method grid");
    std::string config_path, bench_out;
    bench_cmd->add_option("--config", config_path, "grid config file")->required();
    bench_cmd->add_option("--out", bench_out, "results csv path");
    add_common(bench_cmd, common);

    auto* sim_cmd =
        app.add_subcommand("simulate", "generate a synthetic crowd dataset");
    SynthConfig synth_cfg;
    std::string law_spec = "uniform:0.55,0.95";
    std::string sim_answers, sim_truths;
    sim_cmd->add_option("--tasks", synth_cfg.num_tasks, "task count")->required();
    sim_cmd->add_option("--annotators", synth_cfg.num_annotators, "annotator count")
        ->required();
    sim_cmd->add_option("--choices", synth_cfg.num_choices, "choice count")
        ->capture_default_str();
    sim_cmd->add_option("--redundancy", synth_cfg.redundancy, "annotations per task")
        ->capture_default_str();
    sim_cmd
        ->add_option("--law", law_spec,
                     "accuracy law: fixed:P | uniform:LO,HI | two-point:P1,P2,MIX")
        ->capture_default_str();
    sim_cmd->add_option("--out-answers", sim_answers, "answer file to write")
        ->required();
    sim_cmd->add_option("--out-truths", sim_truths, "truth file to write")
        ->required();
    add_common(sim_cmd, common);

    auto* red_cmd = app.add_subcommand(
        "redundancy", "score methods on truncated test annotations");
    std::string red_answers, red_truths, levels_arg, red_out;
    std::string red_methods = "mv,ds,superla";
    std::string red_mode = "test";
    std::optional<int> red_choices;
    int red_folds = 4;
    red_cmd->add_option("--answers", red_answers, "answer file")->required();
    red_cmd->add_option("--truths", red_truths, "ground-truth file")->required();
    red_cmd->add_option("--choices", red_choices, "fix the choice count K");
    red_cmd->add_option("--levels", levels_arg, "comma-separated redundancy levels")
        ->required();
    red_cmd->add_option("--methods", red_methods, "comma-separated methods")
        ->capture_default_str();
    red_cmd->add_option("--folds", red_folds, "fold count")->capture_default_str();
    red_cmd->add_option("--mode", red_mode, "baseline mode: test|whole|init")
        ->capture_default_str();
    red_cmd->add_option("--out", red_out, "results csv path");
    add_model_overrides(red_cmd, model);
    add_common(red_cmd, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            return cmd_train(answers, truths, out_model, choices, model, common);
        }
        if (infer_cmd->parsed()) {
            return cmd_infer(infer_answers, model_path, out_preds, common);
        }
        if (bench_cmd->parsed()) {
            return cmd_benchmark(config_path, bench_out, common);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(synth_cfg, law_spec, sim_answers, sim_truths,
                                common);
        }
        if (red_cmd->parsed()) {
            return cmd_redundancy(red_answers, red_truths, red_choices, levels_arg,
                                  red_methods, red_folds, red_mode, red_out, model,
                                  common);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
