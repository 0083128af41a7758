#ifndef WNDUMA_ENCODER_HPP
#define WNDUMA_ENCODER_HPP

// Small transformer encoder standing in for a pre-trained language model.

#include <random>
#include <vector>

#include "wnduma/attention.hpp"
#include "wnduma/data.hpp"
#include "wnduma/params.hpp"

namespace wnduma {

struct EncoderConfig {
    Index vocab_size = 0;
    Index max_seq_len = 150;
    Index d_model = 64;
    Index n_blocks = 2;
    Index n_heads = 4;
    Index d_ff = 256;
    double ln_eps = 1e-5;
};

struct EncoderBlock {
    AttentionWeights attention;
    Param* ln1_gamma = nullptr;
    Param* ln1_beta = nullptr;
    Param* ff_in = nullptr;
    Param* ff_in_bias = nullptr;
    Param* ff_out = nullptr;
    Param* ff_out_bias = nullptr;
    Param* ln2_gamma = nullptr;
    Param* ln2_beta = nullptr;
};

class Encoder {
public:
    Encoder(const EncoderConfig& config, ParameterStore& store, std::mt19937_64& rng);

    /// Token + position + token-type embeddings for the first `length`
    /// positions of `input` (all of them when `length` is negative).
    Tensor embed(DTape& tape, const data::ModelInput& input, Index length = -1) const;

    /// n_blocks of self-attention -> add & norm -> GELU feed-forward -> add & norm.
    /// Keys at positions where `mask` is false are never attended to.
    Tensor encode(DTape& tape, const Tensor& x, const RowMask& mask) const;

    const EncoderConfig& config() const { return config_; }
    const std::vector<EncoderBlock>& blocks() const { return blocks_; }
    Param& token_embedding() const { return *token_embedding_; }
    Param& position_embedding() const { return *position_embedding_; }
    Param& type_embedding() const { return *type_embedding_; }

private:
    EncoderConfig config_;
    Param* token_embedding_ = nullptr;
    Param* position_embedding_ = nullptr;
    Param* type_embedding_ = nullptr;
    std::vector<EncoderBlock> blocks_;
};

/// Encoder rows split into the passage segment (E^P) and the
/// option+definition segment (E^OD). Special tokens and padding are left
/// out unless `include_separators` asks for the [SEP] closing each segment.
struct SplitEncoding {
    Tensor passage;
    Tensor option_definition;
    /// Row masks of `passage` / `option_definition` (all true after gathering).
    RowMask passage_mask;
    RowMask option_definition_mask;
    /// Positions of the full input covered by each segment (length L).
    RowMask passage_positions;
    RowMask option_definition_positions;
};

SplitEncoding split_representations(const Tensor& hidden, const data::ModelInput& input,
                                    bool include_separators = false);

}  // namespace wnduma

#endif  // WNDUMA_ENCODER_HPP
