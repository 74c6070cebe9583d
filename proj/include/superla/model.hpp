#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "superla/features.hpp"

namespace superla {

// Parameter geometry. Flat layout:
//   [embedding | w1 | b1 | w2a | b2a | w2b | b2b]
// with the OOV embedding in row N. Weight matrices are row-major by output.
struct ModelDims {
    int num_choices = 0;      // K
    int num_annotators = 0;   // N
    int max_annotations = 0;  // L_max

    static constexpr int embed_dim = 8;
    static constexpr int hidden1 = 16;
    static constexpr int hidden2 = 8;

    int acc_len() const { return (num_choices + 1) * max_annotations; }
    int in1() const { return acc_len() + num_choices * embed_dim; }
    int in2() const { return hidden1 + num_choices * num_annotators; }

    int embedding_size() const { return (num_annotators + 1) * embed_dim; }
    int w1_size() const { return hidden1 * in1(); }
    int w2a_size() const { return hidden2 * in2(); }
    int w2b_size() const { return num_choices * hidden2; }

    int embedding_offset() const { return 0; }
    int w1_offset() const { return embedding_size(); }
    int b1_offset() const { return w1_offset() + w1_size(); }
    int w2a_offset() const { return b1_offset() + hidden1; }
    int b2a_offset() const { return w2a_offset() + w2a_size(); }
    int w2b_offset() const { return b2a_offset() + hidden2; }
    int b2b_offset() const { return w2b_offset() + w2b_size(); }
    int total_params() const { return b2b_offset() + num_choices; }

    FeatureSpace space() const {
        return {num_choices, num_annotators, max_annotations};
    }

    bool operator==(const ModelDims&) const = default;
};

struct ModelParams {
    ModelDims dims;
    uint64_t seed = 0;  // seed the parameters were initialized/trained with
    std::vector<double> theta;

    std::span<const double> embedding() const {
        return {theta.data() + dims.embedding_offset(),
                static_cast<size_t>(dims.embedding_size())};
    }
    std::span<const double> embedding_row(int row) const {
        return {theta.data() + dims.embedding_offset() +
                    static_cast<size_t>(row) * ModelDims::embed_dim,
                ModelDims::embed_dim};
    }
};

// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases,
// normal(0, 0.1) embeddings
ModelParams init_params(const ModelDims& dims, uint64_t seed);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 1024;
    double weight_decay = 1e-3;
    double dropout_rate = 0.5;
    int patience = 5;
    int replication = 10;
    int max_epochs = 200;  // safety bound; early stopping is the real exit
    uint64_t seed = 0;

    void validate() const;
};

std::vector<double> softmax(std::span<const double> logits);

struct ForwardCache {
    std::vector<double> x1;          // concat(acc_block, pooled embeddings)
    std::vector<double> a1, h1;      // MLP-1 pre/post ReLU
    std::vector<double> a2, z, zd;   // MLP-2 first layer pre/post ReLU, post dropout
    std::vector<uint8_t> drop_mask;  // kept units (train mode)
    std::vector<double> logits;
};

// Mean pooling of embedding rows per choice set (zero vector for empty sets),
// concatenated in choice order.
std::vector<double> embed_choice_sets(
    const std::vector<std::vector<int>>& choice_sets, const ModelParams& params);

// In train mode inverted dropout (scale 1/(1-rate)) is applied between the two
// MLP-2 linear layers; in inference mode dropout is the identity. Returns the
// logits stored in the cache.
std::span<const double> forward(const TaskFeatures& features,
                                const ModelParams& params, bool train_mode,
                                double dropout_rate, std::mt19937_64& rng,
                                ForwardCache& cache);

struct Instance {
    TaskFeatures features;
    int label = 0;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grads;  // same flat layout as theta
};

// Mean cross-entropy over the batch plus reverse-mode gradients. Weight decay
// is decoupled and lives in the optimizer step, not here.
LossGrad loss_and_grad(std::span<const Instance* const> batch,
                       const ModelParams& params, const TrainConfig& config,
                       uint64_t dropout_seed);

// Mean cross-entropy in inference mode (no dropout).
double mean_loss(std::span<const Instance* const> instances,
                 const ModelParams& params);

struct AdamState {
    std::vector<double> m, v;
    int64_t step = 0;
};

// Decoupled AdamW: theta -= lr * mhat / (sqrt(vhat) + eps) + lr * decay * theta
void adamw_step(ModelParams& params, const std::vector<double>& grads,
                AdamState& state, const TrainConfig& config);

class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    // Call once per epoch with the monitored loss. Returns true once
    // `patience` consecutive epochs failed to improve on the best.
    bool observe(double loss) {
        const int epoch = epoch_++;
        if (loss < best_) {
            best_ = loss;
            best_epoch_ = epoch;
            stall_ = 0;
            return false;
        }
        return ++stall_ >= patience_;
    }

    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = -1;
    int stall_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool operator==(const EpochStats&) const = default;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    bool operator==(const TrainHistory&) const = default;
};

struct TrainResult {
    ModelParams params;
    TrainHistory history;
};

// Trains on augmented instances from train_tasks, monitoring validation loss
// on val_tasks (training loss when val_tasks is empty); returns the parameters
// from the best-validation epoch. L_max is pinned by train_tasks. `stats` must
// come from tasks that exclude validation/test truths.
TrainResult train(const std::vector<int>& train_tasks,
                  const std::vector<int>& val_tasks, const Dataset& ds,
                  const AnnotatorStats& stats, const TrainConfig& config);

struct InferResult {
    std::unordered_map<int, int> predictions;
    std::vector<int> skipped;  // tasks without annotations
};

// Pure inference: argmax of the logits, ties toward the smallest label.
InferResult infer(const std::vector<int>& tasks, const Dataset& ds,
                  const AnnotatorStats& stats, const ModelParams& params);

}  // namespace superla
