#include "wnduma/attention.hpp"

#include <cmath>

namespace wnduma {
namespace {

Tensor project(DTape& tape, const Tensor& x, Param* w, Param* b) {
    Tensor out = matmul(x, tape.param(*w));
    return b ? add_row(out, tape.param(*b)) : out;
}

void expect_shape(const Param* p, Index rows, Index cols, const char* what) {
    if (p == nullptr) throw ParameterError(std::string("attention: missing ") + what + " projection");
    if (p->value.rows() != rows || p->value.cols() != cols)
        throw DimensionError(std::string("attention: ") + what + " projection '" + p->name + "' is " +
                             shape_string(p->value) + ", expected [" + std::to_string(rows) + "x" +
                             std::to_string(cols) + "]");
}

}  // namespace

AttentionOutput multi_head_attention(DTape& tape, const Tensor& query_src, const Tensor& kv_src,
                                     const RowMask& kv_mask, const AttentionWeights& w,
                                     const DropoutContext& dropout) {
    const Index d_model = query_src.cols();
    if (kv_src.cols() != d_model)
        throw DimensionError("attention: query " + shape_string(query_src.value()) + " vs key/value " +
                             shape_string(kv_src.value()));
    if (kv_mask.size() != kv_src.rows())
        throw DimensionError("attention: key/value " + shape_string(kv_src.value()) + " vs mask of " +
                             std::to_string(kv_mask.size()));
    if (!kv_mask.any()) throw ValidationError("attention: every key/value position is masked");
    if (w.heads < 1 || w.d_k < 1 || w.d_v < 1) throw ParameterError("attention: heads, d_k and d_v must be positive");
    expect_shape(w.query, d_model, w.heads * w.d_k, "query");
    expect_shape(w.key, d_model, w.heads * w.d_k, "key");
    expect_shape(w.value, d_model, w.heads * w.d_v, "value");
    expect_shape(w.output, w.heads * w.d_v, d_model, "output");

    const Tensor q = project(tape, query_src, w.query, w.query_bias);
    const Tensor k = project(tape, kv_src, w.key, w.key_bias);
    const Tensor v = project(tape, kv_src, w.value, w.value_bias);
    const Mask mask = kv_mask.transpose().replicate(query_src.rows(), 1);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(w.d_k));
    std::mt19937_64 unused_rng;
    std::mt19937_64& rng = dropout.rng ? *dropout.rng : unused_rng;

    AttentionOutput out;
    std::vector<Tensor> heads;
    heads.reserve(static_cast<std::size_t>(w.heads));
    for (Index h = 0; h < w.heads; ++h) {
        const Tensor qh = w.heads == 1 ? q : slice_cols(q, h * w.d_k, w.d_k);
        const Tensor kh = w.heads == 1 ? k : slice_cols(k, h * w.d_k, w.d_k);
        const Tensor vh = w.heads == 1 ? v : slice_cols(v, h * w.d_v, w.d_v);
        Tensor probs = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt_dk), mask);
        out.probabilities.push_back(probs);
        probs = wnduma::dropout(probs, dropout.p, dropout.training, rng);
        heads.push_back(matmul(probs, vh));
    }
    const Tensor concat = w.heads == 1 ? heads.front() : concat_cols<double>(heads);
    out.output = wnduma::dropout(project(tape, concat, w.output, w.output_bias), dropout.p, dropout.training, rng);
    return out;
}

AttentionWeights make_attention_weights(ParameterStore& store, const std::string& prefix, Index d_model, Index heads,
                                        Index d_k, Index d_v, bool with_bias, std::mt19937_64& rng) {
    AttentionWeights w;
    w.heads = heads;
    w.d_k = d_k;
    w.d_v = d_v;
    w.query = &store.add(prefix + ".query", xavier_normal(d_model, heads * d_k, rng), true);
    w.key = &store.add(prefix + ".key", xavier_normal(d_model, heads * d_k, rng), true);
    w.value = &store.add(prefix + ".value", xavier_normal(d_model, heads * d_v, rng), true);
    w.output = &store.add(prefix + ".output", xavier_normal(heads * d_v, d_model, rng), true);
    if (with_bias) {
        w.query_bias = &store.add(prefix + ".query_bias", Mat::Zero(1, heads * d_k), false);
        w.value_bias = &store.add(prefix + ".value_bias", Mat::Zero(1, heads * d_v), false);
        w.output_bias = &store.add(prefix + ".output_bias", Mat::Zero(1, d_model), false);
    }
    return w;
}

}  // namespace wnduma
