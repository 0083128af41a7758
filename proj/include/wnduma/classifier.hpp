#ifndef WNDUMA_CLASSIFIER_HPP
#define WNDUMA_CLASSIFIER_HPP

// Pooling head and the full per-instance model.

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "wnduma/coattention.hpp"
#include "wnduma/data.hpp"
#include "wnduma/encoder.hpp"
#include "wnduma/params.hpp"

namespace wnduma {

struct ClassifierHead {
    /// 2*d_model x 1 scoring vector shared by all options.
    Param* weight = nullptr;
    /// 1 x 1 bias. It cancels in the softmax over options but is kept so
    /// raw scores are affine.
    Param* bias = nullptr;
};

/// M = [masked_mean(REP1) | masked_mean(REP2)], a 1 x 2*d_model row.
Tensor pool_and_merge(const Representations& reps, const RowMask& rep1_mask, const RowMask& rep2_mask);

/// M . w + b as a 1 x 1 tensor.
Tensor score_option(const Tensor& merged, const Tensor& weight, const Tensor& bias);

/// Index of the largest entry; the lowest index wins ties.
Index argmax_lowest(std::span<const double> values);

struct ModelConfig {
    EncoderConfig encoder;
    CoAttentionConfig coattention;
    /// Keep the [SEP] closing each segment in E^P / E^OD.
    bool include_separators = false;

    /// d_model 64, 2 blocks of 4 heads, FFN 256; co-attention 4 heads of 16.
    static ModelConfig desk(Index vocab_size, Index max_seq_len);
    /// ALBERT-xxlarge-sized encoder with a 64-head, 64-dim co-attention layer.
    /// Recorded for reference; far too large to train here.
    static ModelConfig reference_scale(Index vocab_size);
};

void validate(const ModelConfig& config);

class Model {
public:
    Model(const ModelConfig& config, std::uint64_t init_seed);

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    /// Scalar score of one option (1 x 1).
    Tensor option_score(DTape& tape, const data::ModelInput& input, bool training, std::mt19937_64& rng) const;

    /// Logits over the five options (1 x 5); each option is scored on its own.
    Tensor instance_logits(DTape& tape, std::span<const data::ModelInput, data::kNumOptions> options, bool training,
                           std::mt19937_64& rng) const;

    /// Inference-mode logits.
    std::array<double, data::kNumOptions> logits(const data::EncodedInstance& instance) const;
    int predict(const data::EncodedInstance& instance) const;

    const ModelConfig& config() const { return config_; }
    /// Dropout probability used in training mode (co-attention probabilities and outputs).
    void set_dropout(double p);
    ParameterStore& parameters() { return *store_; }
    const ParameterStore& parameters() const { return *store_; }
    const Encoder& encoder() const { return *encoder_; }
    const CoAttention& coattention() const { return *coattention_; }
    const ClassifierHead& head() const { return head_; }

private:
    ModelConfig config_;
    std::unique_ptr<ParameterStore> store_;
    std::unique_ptr<Encoder> encoder_;
    std::unique_ptr<CoAttention> coattention_;
    ClassifierHead head_;
};

}  // namespace wnduma

#endif  // WNDUMA_CLASSIFIER_HPP
