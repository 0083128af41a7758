#ifndef WNDUMA_DATA_HPP
#define WNDUMA_DATA_HPP

// Loading ReCAM-style instances and turning them into fixed-length encoder
// inputs of the form [CLS] passage [SEP] option definition [SEP] [PAD]...

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wnduma/tensor.hpp"

namespace wnduma::data {

inline constexpr std::size_t kNumOptions = 5;
inline constexpr std::string_view kPlaceholder = "@placeholder";

struct Instance {
    std::string id;
    std::string passage;
    std::string question;
    std::array<std::string, kNumOptions> candidates;
    std::optional<int> label;
    /// Per-candidate WordNet definition text; empty until enriched.
    std::vector<std::string> definitions;
    /// Per-candidate inferred part of speech ("noun", ...); empty until enriched.
    std::vector<std::string> pos;
};

/// Reads one JSON object per line (article, question, option_0..option_4,
/// optional label/id/definitions/pos). Lines carrying a "_meta" key are
/// artifact headers and are skipped.
std::vector<Instance> load_jsonl(const std::filesystem::path& path);
std::vector<Instance> parse_jsonl(std::string_view text, const std::string& source);

/// One JSON line in the same schema load_jsonl() reads.
std::string to_json_line(const Instance& instance);

std::string substitute_placeholder(std::string_view question, std::string_view candidate);

struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Lowercases ASCII, splits on Unicode whitespace, emits each ASCII
/// punctuation character as its own token and keeps digit runs apart from
/// letter runs: "$1.5m deal" -> $ 1 . 5 m deal.
std::vector<std::string> tokenize(std::string_view text);
/// Byte ranges of the tokens produced by tokenize().
std::vector<TokenSpan> tokenize_spans(std::string_view text);
/// Prefix of `text` holding at most `max_tokens` tokens.
std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens);

class Vocabulary {
public:
    static constexpr Index kPad = 0;
    static constexpr Index kUnk = 1;
    static constexpr Index kCls = 2;
    static constexpr Index kSep = 3;

    Vocabulary();

    /// Counts tokens over passages, substituted options and (when enabled)
    /// definitions. Tokens seen at least `min_freq` times get ids in order of
    /// descending frequency, ties broken lexicographically.
    static Vocabulary build(std::span<const Instance> instances, std::size_t min_freq, bool use_definitions);
    /// Rebuilds a vocabulary from its id-ordered token list (checkpoint load).
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    Index id(const std::string& token) const;
    const std::string& token(Index id) const;
    Index size() const { return static_cast<Index>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::map<std::string, Index, std::less<>> ids_;
};

struct ModelInput {
    std::vector<Index> token_ids;
    std::vector<Index> token_type_ids;
    RowMask attention_mask;

    Index length() const { return static_cast<Index>(token_ids.size()); }
};

/// Builds [CLS] P [SEP] O D [SEP] [PAD]... of exactly `max_seq_len` ids.
/// When over budget the option+definition segment is capped first (at
/// max(half the content budget, room left by the passage), trimming the
/// definition before option words), then the passage tail is dropped.
ModelInput assemble_input(std::span<const std::string> passage_tokens, std::span<const std::string> option_tokens,
                          std::span<const std::string> definition_tokens, const Vocabulary& vocab,
                          std::size_t max_seq_len);

struct EncodedInstance {
    std::string id;
    std::array<ModelInput, kNumOptions> options;
    std::optional<int> label;
};

EncodedInstance encode_instance(const Instance& instance, const Vocabulary& vocab, std::size_t max_seq_len,
                                bool use_definitions);
std::vector<EncodedInstance> encode_all(std::span<const Instance> instances, const Vocabulary& vocab,
                                        std::size_t max_seq_len, bool use_definitions);

struct DatasetStats {
    std::size_t count = 0;
    double avg_passage_length = 0;
    double avg_question_length = 0;
    std::size_t vocabulary_size = 0;
    std::size_t answer_vocabulary_size = 0;
};

DatasetStats dataset_stats(std::span<const Instance> instances);

/// Aligned text table, one column per split.
std::string format_stats_table(std::span<const std::string> names, std::span<const DatasetStats> stats);
std::string format_stats_csv(std::span<const std::string> names, std::span<const DatasetStats> stats);

}  // namespace wnduma::data

#endif  // WNDUMA_DATA_HPP
