#include "superla/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "superla/util.hpp"

namespace superla {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;

void check_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("training aborted: non-finite ") +
                                     what);
        }
    }
}

double log_sum_exp(std::span<const double> values) {
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw std::invalid_argument("learning_rate must be in (0, 1]");
    }
    if (!(weight_decay > 0.0 && weight_decay <= 1.0)) {
        throw std::invalid_argument("weight_decay must be in (0, 1]");
    }
    if (!(dropout_rate > 0.0 && dropout_rate < 1.0)) {
        throw std::invalid_argument("dropout_rate must be in (0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (replication < 1) throw std::invalid_argument("replication must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
}

ModelParams init_params(const ModelDims& dims, uint64_t seed) {
    ModelParams params;
    params.dims = dims;
    params.seed = seed;
    params.theta.assign(dims.total_params(), 0.0);

    std::mt19937_64 rng(mix_seed(seed, 0x1217));
    std::normal_distribution<double> embed_init(0.0, 0.1);
    double* theta = params.theta.data();
    for (int i = 0; i < dims.embedding_size(); ++i) {
        theta[dims.embedding_offset() + i] = embed_init(rng);
    }
    auto fill_uniform = [&](int offset, int size, int fan_in) {
        const double bound = std::sqrt(1.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (int i = 0; i < size; ++i) theta[offset + i] = dist(rng);
    };
    fill_uniform(dims.w1_offset(), dims.w1_size(), dims.in1());
    fill_uniform(dims.w2a_offset(), dims.w2a_size(), dims.in2());
    fill_uniform(dims.w2b_offset(), dims.w2b_size(), ModelDims::hidden2);
    // biases stay zero
    return params;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> embed_choice_sets(
    const std::vector<std::vector<int>>& choice_sets, const ModelParams& params) {
    const int K = static_cast<int>(choice_sets.size());
    constexpr int D = ModelDims::embed_dim;
    std::vector<double> pooled(static_cast<size_t>(K) * D, 0.0);
    for (int k = 0; k < K; ++k) {
        const auto& set = choice_sets[k];
        if (set.empty()) continue;
        double* out = pooled.data() + static_cast<size_t>(k) * D;
        for (int row : set) {
            if (row < 0 || row > params.dims.num_annotators) {
                throw std::runtime_error("embedding row out of range");
            }
            const auto emb = params.embedding_row(row);
            for (int d = 0; d < D; ++d) out[d] += emb[d];
        }
        for (int d = 0; d < D; ++d) out[d] /= static_cast<double>(set.size());
    }
    return pooled;
}

std::span<const double> forward(const TaskFeatures& features,
                                const ModelParams& params, bool train_mode,
                                double dropout_rate, std::mt19937_64& rng,
                                ForwardCache& cache) {
    const ModelDims& dims = params.dims;
    if (static_cast<int>(features.acc_block.size()) != dims.acc_len() ||
        static_cast<int>(features.choice_sets.size()) != dims.num_choices) {
        throw std::runtime_error("feature dimensions do not match the model");
    }
    const int in1 = dims.in1();
    const int in2 = dims.in2();
    constexpr int H1 = ModelDims::hidden1;
    constexpr int H2 = ModelDims::hidden2;
    const int K = dims.num_choices;
    const double* theta = params.theta.data();
    const double* w1 = theta + dims.w1_offset();
    const double* b1 = theta + dims.b1_offset();
    const double* w2a = theta + dims.w2a_offset();
    const double* b2a = theta + dims.b2a_offset();
    const double* w2b = theta + dims.w2b_offset();
    const double* b2b = theta + dims.b2b_offset();

    cache.x1.assign(in1, 0.0);
    std::copy(features.acc_block.begin(), features.acc_block.end(),
              cache.x1.begin());
    const auto pooled = embed_choice_sets(features.choice_sets, params);
    std::copy(pooled.begin(), pooled.end(), cache.x1.begin() + dims.acc_len());

    cache.a1.assign(H1, 0.0);
    cache.h1.assign(H1, 0.0);
    for (int o = 0; o < H1; ++o) {
        double s = b1[o];
        const double* row = w1 + static_cast<size_t>(o) * in1;
        for (int j = 0; j < in1; ++j) s += row[j] * cache.x1[j];
        cache.a1[o] = s;
        cache.h1[o] = s > 0.0 ? s : 0.0;
    }

    // second input is [h1 | multihot]; the multihot part is sparse
    cache.a2.assign(H2, 0.0);
    cache.z.assign(H2, 0.0);
    for (int o = 0; o < H2; ++o) {
        const double* row = w2a + static_cast<size_t>(o) * in2;
        double s = b2a[o];
        for (int j = 0; j < H1; ++j) s += row[j] * cache.h1[j];
        for (int p : features.multihot_ones) s += row[H1 + p];
        cache.a2[o] = s;
        cache.z[o] = s > 0.0 ? s : 0.0;
    }

    cache.zd = cache.z;
    cache.drop_mask.assign(H2, 1);
    if (train_mode) {
        const double keep = 1.0 - dropout_rate;
        for (int o = 0; o < H2; ++o) {
            if (uniform01(rng) < dropout_rate) {
                cache.drop_mask[o] = 0;
                cache.zd[o] = 0.0;
            } else {
                cache.zd[o] /= keep;
            }
        }
    }

    cache.logits.assign(K, 0.0);
    for (int k = 0; k < K; ++k) {
        const double* row = w2b + static_cast<size_t>(k) * H2;
        double s = b2b[k];
        for (int o = 0; o < H2; ++o) s += row[o] * cache.zd[o];
        cache.logits[k] = s;
    }
    return cache.logits;
}

LossGrad loss_and_grad(std::span<const Instance* const> batch,
                       const ModelParams& params, const TrainConfig& config,
                       uint64_t dropout_seed) {
    if (batch.empty()) throw std::runtime_error("empty training batch");
    const ModelDims& dims = params.dims;
    const int in1 = dims.in1();
    const int in2 = dims.in2();
    constexpr int H1 = ModelDims::hidden1;
    constexpr int H2 = ModelDims::hidden2;
    constexpr int D = ModelDims::embed_dim;
    const int K = dims.num_choices;
    const double* theta = params.theta.data();
    const double* w1 = theta + dims.w1_offset();
    const double* w2a = theta + dims.w2a_offset();
    const double* w2b = theta + dims.w2b_offset();

    LossGrad result;
    result.grads.assign(dims.total_params(), 0.0);
    double* g_emb = result.grads.data() + dims.embedding_offset();
    double* g_w1 = result.grads.data() + dims.w1_offset();
    double* g_b1 = result.grads.data() + dims.b1_offset();
    double* g_w2a = result.grads.data() + dims.w2a_offset();
    double* g_b2a = result.grads.data() + dims.b2a_offset();
    double* g_w2b = result.grads.data() + dims.w2b_offset();
    double* g_b2b = result.grads.data() + dims.b2b_offset();

    std::mt19937_64 rng(dropout_seed);
    ForwardCache cache;
    const double scale = 1.0 / static_cast<double>(batch.size());
    const double keep = 1.0 - config.dropout_rate;
    std::vector<double> dlogits(K), dzd(H2), da2(H2), dh1(H1), da1(H1);

    for (const Instance* inst : batch) {
        forward(inst->features, params, /*train_mode=*/true, config.dropout_rate,
                rng, cache);
        const double lse = log_sum_exp(cache.logits);
        result.loss += scale * (lse - cache.logits[inst->label]);

        for (int k = 0; k < K; ++k) {
            dlogits[k] = scale * std::exp(cache.logits[k] - lse);
        }
        dlogits[inst->label] -= scale;

        // output layer
        for (int k = 0; k < K; ++k) {
            const double d = dlogits[k];
            double* row = g_w2b + static_cast<size_t>(k) * H2;
            for (int o = 0; o < H2; ++o) row[o] += d * cache.zd[o];
            g_b2b[k] += d;
        }
        for (int o = 0; o < H2; ++o) {
            double s = 0.0;
            for (int k = 0; k < K; ++k) {
                s += w2b[static_cast<size_t>(k) * H2 + o] * dlogits[k];
            }
            dzd[o] = s;
        }

        // dropout and ReLU of the MLP-2 hidden layer
        for (int o = 0; o < H2; ++o) {
            const double dz = cache.drop_mask[o] ? dzd[o] / keep : 0.0;
            da2[o] = cache.a2[o] > 0.0 ? dz : 0.0;
        }

        // MLP-2 first layer (dense over h1, sparse over the multihot part)
        for (int o = 0; o < H2; ++o) {
            const double d = da2[o];
            if (d == 0.0) continue;
            double* row = g_w2a + static_cast<size_t>(o) * in2;
            for (int j = 0; j < H1; ++j) row[j] += d * cache.h1[j];
            for (int p : inst->features.multihot_ones) row[H1 + p] += d;
            g_b2a[o] += d;
        }
        for (int j = 0; j < H1; ++j) {
            double s = 0.0;
            for (int o = 0; o < H2; ++o) {
                s += w2a[static_cast<size_t>(o) * in2 + j] * da2[o];
            }
            dh1[j] = s;
            da1[j] = cache.a1[j] > 0.0 ? s : 0.0;
        }

        // MLP-1
        for (int o = 0; o < H1; ++o) {
            const double d = da1[o];
            if (d == 0.0) continue;
            double* row = g_w1 + static_cast<size_t>(o) * in1;
            for (int j = 0; j < in1; ++j) row[j] += d * cache.x1[j];
            g_b1[o] += d;
        }

        // pooled embeddings: each member row of set k receives the pooled
        // gradient divided by the set size
        for (int k = 0; k < K; ++k) {
            const auto& set = inst->features.choice_sets[k];
            if (set.empty()) continue;
            double dpool[D];
            for (int d = 0; d < D; ++d) {
                double s = 0.0;
                const int col = dims.acc_len() + k * D + d;
                for (int o = 0; o < H1; ++o) {
                    if (da1[o] != 0.0) {
                        s += w1[static_cast<size_t>(o) * in1 + col] * da1[o];
                    }
                }
                dpool[d] = s / static_cast<double>(set.size());
            }
            for (int row : set) {
                double* g = g_emb + static_cast<size_t>(row) * D;
                for (int d = 0; d < D; ++d) g[d] += dpool[d];
            }
        }
    }

    if (!std::isfinite(result.loss)) {
        throw std::runtime_error("training aborted: non-finite loss");
    }
    return result;
}

double mean_loss(std::span<const Instance* const> instances,
                 const ModelParams& params) {
    if (instances.empty()) throw std::runtime_error("empty evaluation set");
    std::mt19937_64 rng(0);
    ForwardCache cache;
    double total = 0.0;
    for (const Instance* inst : instances) {
        forward(inst->features, params, /*train_mode=*/false, 0.0, rng, cache);
        total += log_sum_exp(cache.logits) - cache.logits[inst->label];
    }
    return total / static_cast<double>(instances.size());
}

void adamw_step(ModelParams& params, const std::vector<double>& grads,
                AdamState& state, const TrainConfig& config) {
    const size_t n = params.theta.size();
    if (grads.size() != n) {
        throw std::runtime_error("gradient/parameter size mismatch");
    }
    if (state.m.empty()) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
    const double lr = config.learning_rate;
    const double decay = config.weight_decay;
    for (size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * g;
        state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.theta[i] -=
            lr * mhat / (std::sqrt(vhat) + kEpsilon) + lr * decay * params.theta[i];
    }
}

namespace {

std::vector<Instance> build_instances(const std::vector<int>& tasks,
                                      const Dataset& ds,
                                      const AnnotatorStats& stats,
                                      const FeatureSpace& space, int replication,
                                      uint64_t seed) {
    std::vector<Instance> out;
    out.reserve(tasks.size() * static_cast<size_t>(replication));
    for (int task : tasks) {
        auto truth_it = ds.truths.find(task);
        if (truth_it == ds.truths.end()) {
            throw std::runtime_error("task '" + ds.task_names[task] +
                                     "' has no ground truth");
        }
        TaskFeatures f = build_task_features(task, ds, stats, space);
        if (replication == 1) {
            out.push_back({std::move(f), truth_it->second});
            continue;
        }
        // salt spaces: (1<<32) augmentation, (2<<32) epoch shuffles,
        // (3<<32) dropout streams
        auto copies =
            augment(f, replication, mix_seed(seed, (1ull << 32) + task));
        for (auto& copy : copies) {
            out.push_back({std::move(copy), truth_it->second});
        }
    }
    return out;
}

}  // namespace

TrainResult train(const std::vector<int>& train_tasks,
                  const std::vector<int>& val_tasks, const Dataset& ds,
                  const AnnotatorStats& stats, const TrainConfig& config) {
    config.validate();
    if (train_tasks.empty()) {
        throw std::runtime_error("training split is empty");
    }

    ModelDims dims;
    dims.num_choices = ds.num_choices;
    dims.num_annotators = ds.num_annotators;
    dims.max_annotations = 0;
    for (int task : train_tasks) {
        dims.max_annotations = std::max(dims.max_annotations,
                                        ds.annotation_count(task));
    }
    if (dims.max_annotations == 0) {
        throw std::runtime_error("training tasks carry no annotations");
    }
    const FeatureSpace space = dims.space();

    auto train_instances = build_instances(train_tasks, ds, stats, space,
                                           config.replication, config.seed);
    auto val_instances =
        build_instances(val_tasks, ds, stats, space, 1, config.seed);
    std::vector<const Instance*> val_ptrs;
    val_ptrs.reserve(val_instances.size());
    for (const auto& inst : val_instances) val_ptrs.push_back(&inst);

    ModelParams params = init_params(dims, config.seed);
    AdamState adam;
    EarlyStopper stopper(config.patience);
    TrainHistory history;
    std::vector<double> best_theta = params.theta;

    std::vector<const Instance*> order;
    order.reserve(train_instances.size());
    for (const auto& inst : train_instances) order.push_back(&inst);

    const int n = static_cast<int>(order.size());
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::mt19937_64 epoch_rng(mix_seed(config.seed, (2ull << 32) + epoch));
        deterministic_shuffle(order, epoch_rng);

        double epoch_loss = 0.0;
        int batch_index = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            const int size = std::min(config.batch_size, n - start);
            std::span<const Instance* const> batch(order.data() + start,
                                                   static_cast<size_t>(size));
            LossGrad lg = loss_and_grad(
                batch, params, config,
                mix_seed(config.seed, (3ull << 32) +
                                          (static_cast<uint64_t>(epoch) << 20) +
                                          batch_index));
            adamw_step(params, lg.grads, adam, config);
            check_finite(params.theta, "parameter after optimizer step");
            epoch_loss += lg.loss * size;
            ++batch_index;
        }
        epoch_loss /= n;

        // no validation split: fall back to monitoring the training loss
        const double val_loss =
            val_ptrs.empty() ? epoch_loss : mean_loss(val_ptrs, params);
        history.epochs.push_back({epoch_loss, val_loss});
        const bool stop = stopper.observe(val_loss);
        if (stopper.best_epoch() == epoch) best_theta = params.theta;
        if (stop) break;
    }

    params.theta = std::move(best_theta);
    history.best_epoch = stopper.best_epoch();
    history.best_val_loss = stopper.best_loss();
    return {std::move(params), std::move(history)};
}

InferResult infer(const std::vector<int>& tasks, const Dataset& ds,
                  const AnnotatorStats& stats, const ModelParams& params) {
    InferResult result;
    const FeatureSpace space = params.dims.space();
    std::mt19937_64 rng(0);
    ForwardCache cache;
    for (int task : tasks) {
        if (ds.annotation_count(task) == 0) {
            result.skipped.push_back(task);
            continue;
        }
        const TaskFeatures features = build_task_features(task, ds, stats, space);
        const auto logits = forward(features, params, /*train_mode=*/false, 0.0,
                                    rng, cache);
        result.predictions[task] = argmax_smallest(logits);
    }
    return result;
}

}  // namespace superla
