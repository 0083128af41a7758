#include "wnduma/classifier.hpp"

namespace wnduma {

Tensor pool_and_merge(const Representations& reps, const RowMask& rep1_mask, const RowMask& rep2_mask) {
    const Tensor pooled[] = {mean_pool_masked(reps.rep1, rep1_mask), mean_pool_masked(reps.rep2, rep2_mask)};
    return concat_cols<double>(pooled);
}

Tensor score_option(const Tensor& merged, const Tensor& weight, const Tensor& bias) {
    if (merged.rows() != 1 || weight.cols() != 1 || weight.rows() != merged.cols())
        throw DimensionError("score_option: merged " + shape_string(merged.value()) + " vs weight " +
                             shape_string(weight.value()));
    return add(matmul(merged, weight), bias);
}

Index argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw ValidationError("argmax: no values");
    Index best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<Index>(i);
    return best;
}

ModelConfig ModelConfig::desk(Index vocab_size, Index max_seq_len) {
    ModelConfig c;
    c.encoder.vocab_size = vocab_size;
    c.encoder.max_seq_len = max_seq_len;
    return c;
}

ModelConfig ModelConfig::reference_scale(Index vocab_size) {
    ModelConfig c;
    c.encoder.vocab_size = vocab_size;
    c.encoder.max_seq_len = 150;
    c.encoder.d_model = 4096;
    c.encoder.n_blocks = 12;
    c.encoder.n_heads = 64;
    c.encoder.d_ff = 16384;
    c.coattention.heads = 64;
    c.coattention.d_k = 64;
    c.coattention.d_v = 64;
    c.coattention.layers = 1;
    c.coattention.dropout = 0.1;
    return c;
}

void validate(const ModelConfig& config) {
    const auto& e = config.encoder;
    if (e.d_model < 2 || e.n_heads < 1 || e.d_model % e.n_heads != 0)
        throw ParameterError("model: d_model must be >= 2 and divisible by the encoder head count");
    if (config.coattention.layers < 1) throw ParameterError("model: co-attention layers (k) must be at least 1");
}

Model::Model(const ModelConfig& config, std::uint64_t init_seed)
    : config_(config), store_(std::make_unique<ParameterStore>()) {
    validate(config);
    std::mt19937_64 rng(init_seed);
    encoder_ = std::make_unique<Encoder>(config.encoder, *store_, rng);
    coattention_ = std::make_unique<CoAttention>(config.coattention, config.encoder.d_model, *store_, rng);
    const Index d = config.encoder.d_model;
    head_.weight = &store_->add("classifier.weight", xavier_normal(2 * d, 1, rng), true);
    head_.bias = &store_->add("classifier.bias", Mat::Zero(1, 1), false);
}

void Model::set_dropout(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
    config_.coattention.dropout = p;
    coattention_->set_dropout(p);
}

Tensor Model::option_score(DTape& tape, const data::ModelInput& input, bool training, std::mt19937_64& rng) const {
    // Trailing [PAD] rows never reach an unpadded row, so encoding the
    // unpadded prefix alone gives the same values for the rows we use.
    Index used = input.length();
    while (used > 0 && !input.attention_mask(used - 1)) --used;
    if (used == 0) throw ValidationError("option_score: input has no unpadded positions");
    const Tensor x = encoder_->embed(tape, input, used);
    const Tensor h = encoder_->encode(tape, x, input.attention_mask.head(used));
    const SplitEncoding split = split_representations(h, input, config_.include_separators);
    const Representations reps = coattention_->forward(tape, split.passage, split.passage_mask,
                                                       split.option_definition, split.option_definition_mask,
                                                       training, rng);
    const Tensor merged = pool_and_merge(reps, split.option_definition_mask, split.passage_mask);
    return score_option(merged, tape.param(*head_.weight), tape.param(*head_.bias));
}

Tensor Model::instance_logits(DTape& tape, std::span<const data::ModelInput, data::kNumOptions> options,
                              bool training, std::mt19937_64& rng) const {
    std::array<Tensor, data::kNumOptions> scores;
    for (std::size_t k = 0; k < data::kNumOptions; ++k) scores[k] = option_score(tape, options[k], training, rng);
    return concat_cols<double>(scores);
}

std::array<double, data::kNumOptions> Model::logits(const data::EncodedInstance& instance) const {
    DTape tape;
    std::mt19937_64 rng(0);
    const Tensor out = instance_logits(tape, instance.options, false, rng);
    std::array<double, data::kNumOptions> values{};
    for (std::size_t k = 0; k < data::kNumOptions; ++k) values[k] = out.value()(0, static_cast<Index>(k));
    return values;
}

int Model::predict(const data::EncodedInstance& instance) const {
    const auto values = logits(instance);
    return static_cast<int>(argmax_lowest(values));
}

}  // namespace wnduma
