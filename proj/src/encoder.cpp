#include "wnduma/encoder.hpp"

#include <numeric>

namespace wnduma {

Encoder::Encoder(const EncoderConfig& config, ParameterStore& store, std::mt19937_64& rng) : config_(config) {
    if (config.vocab_size < 4) throw ParameterError("encoder: vocab_size must cover the special tokens");
    if (config.max_seq_len < 5) throw ParameterError("encoder: max_seq_len must be at least 5");
    if (config.d_model < 2) throw ParameterError("encoder: d_model must be at least 2");
    if (config.n_blocks < 0) throw ParameterError("encoder: n_blocks must be non-negative");
    if (config.n_heads < 1 || config.d_model % config.n_heads != 0)
        throw ParameterError("encoder: d_model " + std::to_string(config.d_model) + " not divisible by " +
                             std::to_string(config.n_heads) + " heads");
    if (config.d_ff < 1) throw ParameterError("encoder: d_ff must be positive");

    const Index d = config.d_model;
    token_embedding_ = &store.add("encoder.token_embedding", random_normal(config.vocab_size, d, 0.02, rng), true);
    position_embedding_ =
        &store.add("encoder.position_embedding", random_normal(config.max_seq_len, d, 0.02, rng), true);
    type_embedding_ = &store.add("encoder.type_embedding", random_normal(2, d, 0.02, rng), true);

    const Index head_dim = d / config.n_heads;
    for (Index b = 0; b < config.n_blocks; ++b) {
        const std::string prefix = "encoder.block" + std::to_string(b);
        EncoderBlock blk;
        blk.attention = make_attention_weights(store, prefix + ".attention", d, config.n_heads, head_dim, head_dim,
                                               true, rng);
        blk.ln1_gamma = &store.add(prefix + ".ln1.gamma", Mat::Ones(1, d), false);
        blk.ln1_beta = &store.add(prefix + ".ln1.beta", Mat::Zero(1, d), false);
        blk.ff_in = &store.add(prefix + ".ff_in", xavier_normal(d, config.d_ff, rng), true);
        blk.ff_in_bias = &store.add(prefix + ".ff_in_bias", Mat::Zero(1, config.d_ff), false);
        blk.ff_out = &store.add(prefix + ".ff_out", xavier_normal(config.d_ff, d, rng), true);
        blk.ff_out_bias = &store.add(prefix + ".ff_out_bias", Mat::Zero(1, d), false);
        blk.ln2_gamma = &store.add(prefix + ".ln2.gamma", Mat::Ones(1, d), false);
        blk.ln2_beta = &store.add(prefix + ".ln2.beta", Mat::Zero(1, d), false);
        blocks_.push_back(blk);
    }
}

Tensor Encoder::embed(DTape& tape, const data::ModelInput& input, Index length) const {
    const Index n = length < 0 ? input.length() : length;
    if (n > input.length() || n < 1)
        throw IndexError("embed: length " + std::to_string(n) + " outside input of " + std::to_string(input.length()));
    if (static_cast<Index>(input.token_type_ids.size()) != input.length())
        throw DimensionError("embed: token_ids and token_type_ids differ in length");
    std::vector<Index> positions(static_cast<std::size_t>(n));
    std::iota(positions.begin(), positions.end(), Index{0});
    const std::span<const Index> ids(input.token_ids.data(), static_cast<std::size_t>(n));
    const std::span<const Index> types(input.token_type_ids.data(), static_cast<std::size_t>(n));
    Tensor tok = gather_rows(tape.param(*token_embedding_), ids);
    Tensor pos = gather_rows(tape.param(*position_embedding_), std::span<const Index>(positions));
    Tensor typ = gather_rows(tape.param(*type_embedding_), types);
    return add(add(tok, pos), typ);
}

Tensor Encoder::encode(DTape& tape, const Tensor& x, const RowMask& mask) const {
    if (x.cols() != config_.d_model)
        throw DimensionError("encode: input " + shape_string(x.value()) + " vs d_model " +
                             std::to_string(config_.d_model));
    Tensor h = x;
    const double eps = config_.ln_eps;
    for (const auto& blk : blocks_) {
        Tensor attn = multi_head_attention(tape, h, h, mask, blk.attention).output;
        h = layer_norm(add(h, attn), tape.param(*blk.ln1_gamma), tape.param(*blk.ln1_beta), eps);
        Tensor inner = gelu(add_row(matmul(h, tape.param(*blk.ff_in)), tape.param(*blk.ff_in_bias)));
        Tensor ff = add_row(matmul(inner, tape.param(*blk.ff_out)), tape.param(*blk.ff_out_bias));
        h = layer_norm(add(h, ff), tape.param(*blk.ln2_gamma), tape.param(*blk.ln2_beta), eps);
    }
    return h;
}

SplitEncoding split_representations(const Tensor& hidden, const data::ModelInput& input, bool include_separators) {
    using data::Vocabulary;
    const auto& ids = input.token_ids;
    const Index n = static_cast<Index>(ids.size());
    if (hidden.rows() > n)
        throw DimensionError("split_representations: " + shape_string(hidden.value()) + " rows for an input of " +
                             std::to_string(n));
    if (n == 0 || ids[0] != Vocabulary::kCls) throw ValidationError("split_representations: input must start with [CLS]");
    Index first_sep = -1, second_sep = -1;
    for (Index i = 1; i < n; ++i) {
        if (ids[static_cast<std::size_t>(i)] != Vocabulary::kSep) continue;
        if (first_sep < 0) {
            first_sep = i;
        } else {
            second_sep = i;
            break;
        }
    }
    if (first_sep < 0 || second_sep < 0) throw ValidationError("split_representations: expected two [SEP] tokens");
    for (Index i = second_sep + 1; i < n; ++i)
        if (ids[static_cast<std::size_t>(i)] != Vocabulary::kPad)
            throw ValidationError("split_representations: non-padding token after the closing [SEP]");
    if (first_sep < 2 || second_sep - first_sep < 2)
        throw ValidationError("split_representations: empty passage or option segment");
    if (hidden.rows() <= second_sep)
        throw DimensionError("split_representations: hidden " + shape_string(hidden.value()) +
                             " does not reach the closing [SEP]");

    const Index p_end = include_separators ? first_sep + 1 : first_sep;
    const Index od_end = include_separators ? second_sep + 1 : second_sep;
    std::vector<Index> p_rows, od_rows;
    for (Index i = 1; i < p_end; ++i) p_rows.push_back(i);
    for (Index i = first_sep + 1; i < od_end; ++i) od_rows.push_back(i);

    SplitEncoding out;
    out.passage = gather_rows(hidden, std::span<const Index>(p_rows));
    out.option_definition = gather_rows(hidden, std::span<const Index>(od_rows));
    out.passage_mask = RowMask::Constant(static_cast<Index>(p_rows.size()), true);
    out.option_definition_mask = RowMask::Constant(static_cast<Index>(od_rows.size()), true);
    out.passage_positions = RowMask::Constant(n, false);
    out.option_definition_positions = RowMask::Constant(n, false);
    for (Index i : p_rows) out.passage_positions(i) = true;
    for (Index i : od_rows) out.option_definition_positions(i) = true;
    return out;
}

}  // namespace wnduma
