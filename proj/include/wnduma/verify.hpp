#ifndef WNDUMA_VERIFY_HPP
#define WNDUMA_VERIFY_HPP

// End-to-end finite-difference check of the full model loss.

#include <cstdint>
#include <random>

#include "wnduma/classifier.hpp"
#include "wnduma/gradcheck.hpp"

namespace wnduma {

/// Five options sharing one random passage, each with its own random
/// option+definition segment and a little padding. Token ids lie in
/// [4, vocab_size).
data::EncodedInstance random_encoded_instance(Index vocab_size, Index seq_len, std::mt19937_64& rng);

/// Cross-entropy of a random labelled instance through the whole model
/// (dropout off), every parameter tensor probed against central differences.
GradCheckReport model_gradcheck(const ModelConfig& config, std::uint64_t seed, const GradCheckOptions& options);

}  // namespace wnduma

#endif  // WNDUMA_VERIFY_HPP
