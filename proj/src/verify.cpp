#include "wnduma/verify.hpp"

namespace wnduma {

data::EncodedInstance random_encoded_instance(Index vocab_size, Index seq_len, std::mt19937_64& rng) {
    if (seq_len < 8) throw ParameterError("random_encoded_instance: seq_len must be at least 8");
    if (vocab_size < 5) throw ParameterError("random_encoded_instance: vocab_size must be at least 5");
    std::uniform_int_distribution<Index> token(4, vocab_size - 1);
    const Index budget = seq_len - 3;
    const Index n_p = budget / 2;
    std::vector<Index> passage(static_cast<std::size_t>(n_p));
    for (auto& t : passage) t = token(rng);
    data::EncodedInstance out;
    out.id = "random";
    out.label = std::uniform_int_distribution<int>(0, data::kNumOptions - 1)(rng);
    for (auto& in : out.options) {
        const Index n_od = std::uniform_int_distribution<Index>(1, budget - n_p)(rng);
        in.token_ids.assign(static_cast<std::size_t>(seq_len), data::Vocabulary::kPad);
        in.token_type_ids.assign(static_cast<std::size_t>(seq_len), 1);
        in.attention_mask = RowMask::Constant(seq_len, false);
        std::size_t i = 0;
        auto put = [&](Index id, Index type) {
            in.token_ids[i] = id;
            in.token_type_ids[i] = type;
            in.attention_mask(static_cast<Index>(i)) = true;
            ++i;
        };
        put(data::Vocabulary::kCls, 0);
        for (Index t : passage) put(t, 0);
        put(data::Vocabulary::kSep, 0);
        for (Index j = 0; j < n_od; ++j) put(token(rng), 1);
        put(data::Vocabulary::kSep, 1);
    }
    return out;
}

GradCheckReport model_gradcheck(const ModelConfig& config, std::uint64_t seed, const GradCheckOptions& options) {
    Model model(config, seed);
    std::mt19937_64 rng(seed ^ 0xa5a5a5a5ULL);
    const data::EncodedInstance inst = random_encoded_instance(config.encoder.vocab_size,
                                                               config.encoder.max_seq_len, rng);
    std::vector<Param*> params = model.parameters().all();
    GradCheckOptions opts = options;
    opts.seed = seed;
    auto loss = [&](DTape& tape) {
        std::mt19937_64 unused(0);
        return cross_entropy_softmax(model.instance_logits(tape, inst.options, false, unused), *inst.label);
    };
    return check_gradients<double>(std::span<Param* const>(params), loss, opts);
}

}  // namespace wnduma
