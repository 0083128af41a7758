#include "wnduma/coattention.hpp"

namespace wnduma {
namespace {

Tensor normalize_site(DTape& tape, const CoAttentionPass& pass, const Tensor& residual, const Tensor& mha, double eps) {
    return fuse_add_normalize(residual, mha, tape.param(*pass.gamma), tape.param(*pass.beta), eps);
}

}  // namespace

std::string_view to_string(CoAttentionMode mode) {
    return mode == CoAttentionMode::stacked ? "stacked" : "parallel";
}

CoAttentionMode parse_mode(std::string_view text) {
    if (text == "stacked") return CoAttentionMode::stacked;
    if (text == "parallel") return CoAttentionMode::parallel;
    throw ParameterError("unknown co-attention mode '" + std::string(text) + "' (expected stacked or parallel)");
}

Tensor multi_head_coattention(DTape& tape, const Tensor& query_src, const Tensor& kv_src, const RowMask& kv_mask,
                              const AttentionWeights& weights, const DropoutContext& dropout) {
    return multi_head_attention(tape, query_src, kv_src, kv_mask, weights, dropout).output;
}

Tensor fuse_add_normalize(const Tensor& residual, const Tensor& mha, const Tensor& gamma, const Tensor& beta,
                          double eps) {
    return layer_norm(add(residual, mha), gamma, beta, eps);
}

Representations dual_pass_stacked(DTape& tape, const CoAttentionLayer& layer, const Tensor& passage,
                                  const RowMask& passage_mask, const Tensor& option_definition,
                                  const RowMask& option_definition_mask, const DropoutContext& dropout, double eps) {
    const auto& first = layer.option_to_passage;
    const auto& second = layer.passage_to_option;
    Representations r;
    r.rep1 = normalize_site(
        tape, first, option_definition,
        multi_head_coattention(tape, option_definition, passage, passage_mask, first.attention, dropout), eps);
    r.rep2 = normalize_site(
        tape, second, passage,
        multi_head_coattention(tape, passage, r.rep1, option_definition_mask, second.attention, dropout), eps);
    return r;
}

Representations dual_pass_parallel(DTape& tape, const CoAttentionLayer& layer, const Tensor& passage,
                                   const RowMask& passage_mask, const Tensor& option_definition,
                                   const RowMask& option_definition_mask, const DropoutContext& dropout, double eps) {
    const auto& first = layer.option_to_passage;
    const auto& second = layer.passage_to_option;
    Representations r;
    r.rep1 = normalize_site(
        tape, first, option_definition,
        multi_head_coattention(tape, option_definition, passage, passage_mask, first.attention, dropout), eps);
    r.rep2 = normalize_site(tape, second, passage,
                            multi_head_coattention(tape, passage, option_definition, option_definition_mask,
                                                   second.attention, dropout),
                            eps);
    return r;
}

Representations stack_k(DTape& tape, std::span<const CoAttentionLayer> layers, CoAttentionMode mode,
                        const Tensor& passage, const RowMask& passage_mask, const Tensor& option_definition,
                        const RowMask& option_definition_mask, const DropoutContext& dropout, double eps) {
    if (layers.empty()) throw ParameterError("stack_k: need at least one co-attention layer");
    Tensor p = passage;
    Tensor od = option_definition;
    Representations r;
    for (const auto& layer : layers) {
        r = mode == CoAttentionMode::stacked
                ? dual_pass_stacked(tape, layer, p, passage_mask, od, option_definition_mask, dropout, eps)
                : dual_pass_parallel(tape, layer, p, passage_mask, od, option_definition_mask, dropout, eps);
        p = r.rep2;
        od = r.rep1;
    }
    return r;
}

CoAttention::CoAttention(const CoAttentionConfig& config, Index d_model, ParameterStore& store, std::mt19937_64& rng)
    : config_(config) {
    if (config.layers < 1) throw ParameterError("co-attention: layers (k) must be at least 1");
    if (config.heads < 1 || config.d_k < 1 || config.d_v < 1)
        throw ParameterError("co-attention: heads, d_k and d_v must be positive");
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ParameterError("co-attention: dropout must lie in [0, 1)");
    auto make_norm = [&](CoAttentionPass& pass, const std::string& prefix) {
        pass.gamma = &store.add(prefix + ".gamma", Mat::Ones(1, d_model), false);
        pass.beta = &store.add(prefix + ".beta", Mat::Zero(1, d_model), false);
    };
    for (Index j = 0; j < config.layers; ++j) {
        const std::string prefix = "coattention.layer" + std::to_string(j);
        CoAttentionLayer layer;
        layer.option_to_passage.attention = make_attention_weights(store, prefix + ".od_to_p", d_model, config.heads,
                                                                   config.d_k, config.d_v, false, rng);
        make_norm(layer.option_to_passage, prefix + ".od_to_p.norm");
        layer.passage_to_option.attention =
            config.shared_params ? layer.option_to_passage.attention
                                 : make_attention_weights(store, prefix + ".p_to_od", d_model, config.heads, config.d_k,
                                                          config.d_v, false, rng);
        make_norm(layer.passage_to_option, prefix + ".p_to_od.norm");
        layers_.push_back(layer);
    }
}

Representations CoAttention::forward(DTape& tape, const Tensor& passage, const RowMask& passage_mask,
                                     const Tensor& option_definition, const RowMask& option_definition_mask,
                                     bool training, std::mt19937_64& rng) const {
    DropoutContext drop{config_.dropout, training, &rng};
    return stack_k(tape, layers_, config_.mode, passage, passage_mask, option_definition, option_definition_mask, drop,
                   config_.ln_eps);
}

}  // namespace wnduma
