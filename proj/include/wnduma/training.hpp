#ifndef WNDUMA_TRAINING_HPP
#define WNDUMA_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wnduma/classifier.hpp"
#include "wnduma/data.hpp"
#include "wnduma/params.hpp"

namespace wnduma {

struct TrainConfig {
    std::size_t epochs = 3;
    /// Caps the run at this many optimizer steps when nonzero.
    std::size_t max_steps = 0;
    std::size_t batch_size = 2;
    double peak_lr = 5e-6;
    double warmup_fraction = 0.1;
    double grad_clip_norm = 10.0;
    double dropout = 0.1;
    std::size_t eval_every_steps = 200;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t max_seq_len = 150;
    CoAttentionMode mode = CoAttentionMode::stacked;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    /// Batch 2, lr 5e-6, 3 epochs, eval every 200 steps, clip 10, 10% warmup, dropout 0.1.
    static TrainConfig reference();
    /// Batch 8, lr 1e-3, 500 steps, eval every 50 steps; for the small from-scratch encoder.
    static TrainConfig desk();
};

void validate(const TrainConfig& config);

/// Linear warmup from 0 to the peak over the first warmup_fraction of the
/// steps, then linear decay to 0 at `total_steps`. Steps past the end give 0.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config);
std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& config);

double global_grad_norm(std::span<Param* const> params);
/// Scales every gradient by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_global_norm(std::span<Param* const> params, double max_norm);

struct AdamWState {
    std::vector<Mat> first_moment;
    std::vector<Mat> second_moment;
    std::size_t step = 0;

    void reset(std::span<Param* const> params);
};

struct AdamWOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// One AdamW update with bias-corrected moments. Weight decay is applied to
/// the weights directly (w -= lr * decay * w) for parameters with `decay`
/// set. Throws NumericalError, leaving everything untouched, when any
/// gradient is non-finite.
void adamw_step(std::span<Param* const> params, AdamWState& state, double lr, const AdamWOptions& options);

struct EvalPoint {
    std::size_t step = 0;
    double train_loss = 0;
    double dev_accuracy = 0;
    double lr = 0;
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<EvalPoint> curve;
    /// Loss of every optimizer step, in order.
    std::vector<double> step_losses;
    double best_dev_accuracy = 0;
    std::size_t best_step = 0;
    std::size_t total_steps = 0;
    std::string checkpoint;
};

struct TrainResult {
    RunRecord record;
    /// Parameter values at the best dev evaluation.
    std::vector<Mat> best_parameters;
};

/// Mean cross-entropy over a batch; gradients land in the model parameters.
double batch_loss_and_grad(Model& model, std::span<const data::EncodedInstance* const> batch, std::mt19937_64& rng);

/// Optimizes `model` in place and leaves it holding the best-dev parameters.
TrainResult train(Model& model, const TrainConfig& config, std::uint64_t seed,
                  std::span<const data::EncodedInstance> train_set, std::span<const data::EncodedInstance> dev_set);

/// Fraction of instances whose argmax logit equals the label (dropout off).
double evaluate(const Model& model, std::span<const data::EncodedInstance> dataset);
std::vector<int> predict_all(const Model& model, std::span<const data::EncodedInstance> dataset);

struct SeedSummary {
    std::vector<RunRecord> runs;
    double mean_best_dev_accuracy = 0;
    double stddev_best_dev_accuracy = 0;
    /// Set when a seed failed; `runs` then holds the seeds finished before it.
    std::optional<std::string> error;
};

using ModelFactory = std::function<Model(std::uint64_t seed)>;
/// Called after each finished seed with its model (holding best parameters).
using RunCallback = std::function<void(const RunRecord&, Model&)>;

/// Independent runs, one per seed in config.seeds, each initialized from its seed.
SeedSummary run_seeds(const TrainConfig& config, const ModelFactory& make_model,
                      std::span<const data::EncodedInstance> train_set, std::span<const data::EncodedInstance> dev_set,
                      const RunCallback& on_run = {});

/// Per instance, the most frequent index across models; among tied indices
/// the one predicted by the earliest-listed model wins.
std::vector<int> majority_vote(std::span<const std::vector<int>> predictions);

}  // namespace wnduma

#endif  // WNDUMA_TRAINING_HPP
