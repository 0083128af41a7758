#ifndef WNDUMA_COATTENTION_HPP
#define WNDUMA_COATTENTION_HPP

// Dual multi-head co-attention between the passage encoding E^P and the
// option+definition encoding E^OD.
//
// Stacked mode (the default):
//   REP1 = LayerNorm(E^OD + MHA(query = E^OD, key/value = E^P))
//   REP2 = LayerNorm(E^P  + MHA(query = E^P,  key/value = REP1))
// Parallel mode reads E^OD instead of REP1 in the second pass.

#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "wnduma/attention.hpp"
#include "wnduma/params.hpp"

namespace wnduma {

enum class CoAttentionMode { stacked, parallel };

std::string_view to_string(CoAttentionMode mode);
CoAttentionMode parse_mode(std::string_view text);

struct CoAttentionConfig {
    Index heads = 4;
    /// Query/key width per head (d_q == d_k).
    Index d_k = 16;
    Index d_v = 16;
    /// Number of stacked co-attention layers.
    Index layers = 1;
    CoAttentionMode mode = CoAttentionMode::stacked;
    /// Both passes of a layer share one set of projections.
    bool shared_params = false;
    double dropout = 0.1;
    double ln_eps = 1e-5;
};

struct CoAttentionPass {
    AttentionWeights attention;
    Param* gamma = nullptr;
    Param* beta = nullptr;
};

struct CoAttentionLayer {
    /// E^OD queries the passage; produces REP1.
    CoAttentionPass option_to_passage;
    /// The passage queries REP1 (stacked) or E^OD (parallel); produces REP2.
    CoAttentionPass passage_to_option;
};

struct Representations {
    /// Same shape as E^OD.
    Tensor rep1;
    /// Same shape as E^P.
    Tensor rep2;
};

/// Multi-head attention with `query_src` as Query and `kv_src` as Key and Value.
Tensor multi_head_coattention(DTape& tape, const Tensor& query_src, const Tensor& kv_src, const RowMask& kv_mask,
                              const AttentionWeights& weights, const DropoutContext& dropout = {});

/// layer_norm(residual + mha) with the site's gamma/beta.
Tensor fuse_add_normalize(const Tensor& residual, const Tensor& mha, const Tensor& gamma, const Tensor& beta,
                          double eps = 1e-5);

Representations dual_pass_stacked(DTape& tape, const CoAttentionLayer& layer, const Tensor& passage,
                                  const RowMask& passage_mask, const Tensor& option_definition,
                                  const RowMask& option_definition_mask, const DropoutContext& dropout = {},
                                  double eps = 1e-5);

Representations dual_pass_parallel(DTape& tape, const CoAttentionLayer& layer, const Tensor& passage,
                                   const RowMask& passage_mask, const Tensor& option_definition,
                                   const RowMask& option_definition_mask, const DropoutContext& dropout = {},
                                   double eps = 1e-5);

/// Applies `layers` in sequence. Layer j > 1 takes the previous REP2 in the
/// passage role and the previous REP1 in the option+definition role.
Representations stack_k(DTape& tape, std::span<const CoAttentionLayer> layers, CoAttentionMode mode,
                        const Tensor& passage, const RowMask& passage_mask, const Tensor& option_definition,
                        const RowMask& option_definition_mask, const DropoutContext& dropout = {}, double eps = 1e-5);

class CoAttention {
public:
    CoAttention(const CoAttentionConfig& config, Index d_model, ParameterStore& store, std::mt19937_64& rng);

    Representations forward(DTape& tape, const Tensor& passage, const RowMask& passage_mask,
                            const Tensor& option_definition, const RowMask& option_definition_mask, bool training,
                            std::mt19937_64& rng) const;

    const CoAttentionConfig& config() const { return config_; }
    void set_dropout(double p) { config_.dropout = p; }
    const std::vector<CoAttentionLayer>& layers() const { return layers_; }

private:
    CoAttentionConfig config_;
    std::vector<CoAttentionLayer> layers_;
};

}  // namespace wnduma

#endif  // WNDUMA_COATTENTION_HPP
