#ifndef WNDUMA_ATTENTION_HPP
#define WNDUMA_ATTENTION_HPP

#include <random>
#include <vector>

#include "wnduma/params.hpp"

namespace wnduma {

/// Projections of one multi-head attention site. Head i uses column block
/// [i*d_k, (i+1)*d_k) of `query`/`key` and [i*d_v, (i+1)*d_v) of `value`;
/// `output` maps the concatenated heads (h*d_v) back to d_model.
struct AttentionWeights {
    Param* query = nullptr;
    Param* key = nullptr;
    Param* value = nullptr;
    Param* output = nullptr;
    /// Optional 1 x n biases; the co-attention sites have none. make_attention_weights
    /// never creates a key bias: it shifts every score of a query row equally and
    /// cancels in the softmax.
    Param* query_bias = nullptr;
    Param* key_bias = nullptr;
    Param* value_bias = nullptr;
    Param* output_bias = nullptr;
    Index heads = 1;
    Index d_k = 0;
    Index d_v = 0;
};

struct DropoutContext {
    double p = 0.0;
    bool training = false;
    std::mt19937_64* rng = nullptr;
};

struct AttentionOutput {
    Tensor output;
    /// Per-head attention probabilities (l_q x l_kv), before dropout.
    std::vector<Tensor> probabilities;
};

/// head_i = softmax(Q_i K_i^T / sqrt(d_k)) V_i over unmasked kv rows;
/// output = concat(head_1..head_h) W^O. Dropout, when active, hits the
/// attention probabilities and the projected output.
AttentionOutput multi_head_attention(DTape& tape, const Tensor& query_src, const Tensor& kv_src,
                                     const RowMask& kv_mask, const AttentionWeights& weights,
                                     const DropoutContext& dropout = {});

/// Registers query/key/value/output projections (and query/value/output biases
/// if asked) under `prefix`.
AttentionWeights make_attention_weights(ParameterStore& store, const std::string& prefix, Index d_model, Index heads,
                                        Index d_k, Index d_v, bool with_bias, std::mt19937_64& rng);

}  // namespace wnduma

#endif  // WNDUMA_ATTENTION_HPP
