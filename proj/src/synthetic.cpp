#include "wnduma/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace wnduma::data {
namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    return out;
}

}  // namespace

std::vector<std::string> make_words(std::size_t count, std::uint64_t seed) {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    std::mt19937_64 rng(seed);
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < count) {
        std::string w;
        const std::size_t syllables = 2 + pick(rng, 2);
        for (std::size_t s = 0; s < syllables; ++s) {
            w += consonants[pick(rng, consonants.size())];
            w += vowels[pick(rng, vowels.size())];
        }
        if (seen.insert(w).second) out.push_back(w);
    }
    return out;
}

std::vector<Instance> make_copy_task(const CopyTaskOptions& o, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto words = make_words(o.answer_pool + o.filler_pool, seed ^ 0x5eedULL);
    const std::vector<std::string> answers(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(o.answer_pool));
    const std::vector<std::string> filler(words.begin() + static_cast<std::ptrdiff_t>(o.answer_pool), words.end());
    std::vector<Instance> out;
    for (std::size_t n = 0; n < o.instances; ++n) {
        std::vector<std::size_t> chosen;
        while (chosen.size() < kNumOptions) {
            const std::size_t a = pick(rng, answers.size());
            if (std::find(chosen.begin(), chosen.end(), a) == chosen.end()) chosen.push_back(a);
        }
        Instance inst;
        inst.id = "copy-" + std::to_string(n);
        const int label = static_cast<int>(pick(rng, kNumOptions));
        inst.label = label;
        for (std::size_t k = 0; k < kNumOptions; ++k) inst.candidates[k] = answers[chosen[k]];
        std::vector<std::string> passage;
        for (std::size_t i = 0; i < o.passage_words; ++i) passage.push_back(filler[pick(rng, filler.size())]);
        passage.insert(passage.begin() + static_cast<std::ptrdiff_t>(pick(rng, passage.size() + 1)),
                       inst.candidates[static_cast<std::size_t>(label)]);
        inst.passage = join(passage) + " .";
        inst.question = filler[pick(rng, filler.size())] + " " + filler[pick(rng, filler.size())] + " @placeholder " +
                        filler[pick(rng, filler.size())] + " .";
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> make_random_instances(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto words = make_words(200, seed + 1);
    static const std::vector<std::string> extras = {",", ".", "!", "?", "$", "1.5", "2021", "(", ")", "'s", "--"};
    auto text = [&](std::size_t min_len, std::size_t max_len) {
        const std::size_t len = min_len + pick(rng, max_len - min_len + 1);
        std::vector<std::string> toks;
        for (std::size_t i = 0; i < len; ++i)
            toks.push_back(pick(rng, 6) == 0 ? extras[pick(rng, extras.size())] : words[pick(rng, words.size())]);
        return join(toks);
    };
    std::vector<Instance> out;
    for (std::size_t n = 0; n < count; ++n) {
        Instance inst;
        inst.id = "rand-" + std::to_string(n);
        inst.passage = words[pick(rng, words.size())] + " " + text(0, 400);
        const std::string before = text(0, 20);
        const std::string after = text(0, 20);
        inst.question = before + (before.empty() ? "" : " ") + "@placeholder" + (after.empty() ? "" : " ") + after;
        for (auto& c : inst.candidates) c = pick(rng, 8) == 0 ? text(2, 3) : words[pick(rng, words.size())];
        inst.label = static_cast<int>(pick(rng, kNumOptions));
        if (pick(rng, 2) == 0) {
            for (std::size_t k = 0; k < kNumOptions; ++k) inst.definitions.push_back(text(0, 120));
        }
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace wnduma::data
