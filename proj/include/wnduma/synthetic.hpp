#ifndef WNDUMA_SYNTHETIC_HPP
#define WNDUMA_SYNTHETIC_HPP

// Generated datasets for tests, demos and the overfit check.

#include <cstdint>
#include <vector>

#include "wnduma/data.hpp"

namespace wnduma::data {

struct CopyTaskOptions {
    std::size_t instances = 64;
    std::size_t passage_words = 12;
    std::size_t answer_pool = 40;
    std::size_t filler_pool = 60;
};

/// Copy task: the passage contains the correct candidate and none of the
/// four distractors, so the answer is recoverable by matching the option
/// word against the passage.
std::vector<Instance> make_copy_task(const CopyTaskOptions& options, std::uint64_t seed);

/// Instances with random lengths, punctuation, digits and labels; for
/// pipeline invariant sweeps.
std::vector<Instance> make_random_instances(std::size_t count, std::uint64_t seed);

/// Distinct pronounceable lowercase words ("bakori", ...).
std::vector<std::string> make_words(std::size_t count, std::uint64_t seed);

}  // namespace wnduma::data

#endif  // WNDUMA_SYNTHETIC_HPP
