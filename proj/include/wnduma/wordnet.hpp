#ifndef WNDUMA_WORDNET_HPP
#define WNDUMA_WORDNET_HPP

// Reader for the WordNet 3.x flat-file distribution (index.*, data.*, *.exc)
// and the POS-guided definition text attached to candidate answers.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wnduma/data.hpp"

namespace wnduma::wordnet {

enum class PosTag { noun, verb, adjective, adverb };

inline constexpr PosTag kAllPos[] = {PosTag::noun, PosTag::verb, PosTag::adjective, PosTag::adverb};

/// "noun", "verb", "adj", "adv": the suffix of the distribution files.
std::string_view file_suffix(PosTag pos);
/// Single-letter key used inside the files: n, v, a, r.
char file_key(PosTag pos);
std::string_view to_string(PosTag pos);
std::optional<PosTag> parse_pos(std::string_view text);

struct IndexEntry {
    std::string lemma;
    PosTag pos = PosTag::noun;
    std::vector<std::uint64_t> synset_offsets;
};

struct SynsetEntry {
    std::uint64_t offset = 0;
    PosTag pos = PosTag::noun;
    /// Member lemmas, lowercased, with adjective markers like "(a)" removed.
    std::vector<std::string> words;
    std::string gloss;
    std::vector<std::string> examples;
};

using DataMap = std::map<std::uint64_t, SynsetEntry>;
/// Inflected form -> base forms, from a {pos}.exc file.
using ExceptionMap = std::map<std::string, std::vector<std::string>>;

std::vector<IndexEntry> parse_index_file(const std::filesystem::path& path);
/// Parses the lines of an index file held in memory. `source` names it in errors.
std::vector<IndexEntry> parse_index_text(std::string_view text, const std::string& source);

DataMap parse_data_file(const std::filesystem::path& path);
DataMap parse_data_text(std::string_view text, const std::string& source);

ExceptionMap parse_exception_file(const std::filesystem::path& path);
ExceptionMap parse_exception_text(std::string_view text, const std::string& source);

/// Splits raw gloss text at the first `; "` into definition and quoted examples.
std::pair<std::string, std::vector<std::string>> split_gloss(std::string_view raw);

/// (lemma, pos) -> glosses in WordNet sense order.
class GlossLookup {
public:
    using Key = std::pair<std::string, PosTag>;

    GlossLookup() = default;
    GlossLookup(std::span<const IndexEntry> index, const std::map<PosTag, DataMap>& data);

    /// Glosses for an exact (already normalized) lemma; empty if absent.
    const std::vector<std::string>& glosses(const std::string& lemma, PosTag pos) const;
    bool contains(const std::string& lemma, PosTag pos) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<Key, std::vector<std::string>>& entries() const { return entries_; }

    void insert(std::string lemma, PosTag pos, std::vector<std::string> glosses);

    friend bool operator==(const GlossLookup&, const GlossLookup&) = default;

private:
    std::map<Key, std::vector<std::string>> entries_;
};

/// Lowercase, spaces to underscores: the index-file spelling of a lemma.
std::string normalize_lemma(std::string_view word);

/// Base forms of `word` that are present in the index for `pos`: exception
/// list hits first, then suffix-detachment results, then `word` itself.
std::vector<std::string> morphy(const std::string& word, PosTag pos, const ExceptionMap& exceptions,
                                const GlossLookup& lookup);

/// A loaded WordNet distribution.
class WordNet {
public:
    WordNet() = default;

    /// Reads index/data/exc files for all four parts of speech from `dir`.
    static WordNet load(const std::filesystem::path& dir);

    /// Resolves the WordNet directory from an explicit flag value or, when
    /// empty, the WNSEARCHDIR environment variable.
    static std::optional<std::filesystem::path> locate(const std::string& flag_value);

    const GlossLookup& lookup() const { return lookup_; }
    const ExceptionMap& exceptions(PosTag pos) const;
    const std::vector<IndexEntry>& index() const { return index_; }
    const DataMap& data(PosTag pos) const;

    /// morphy() against this distribution.
    std::vector<std::string> base_forms(const std::string& word, PosTag pos) const;
    /// Glosses of the first base form that has any, in sense order.
    const std::vector<std::string>& senses(const std::string& word, PosTag pos) const;

    /// Builds an in-memory distribution; used by tests and fixtures.
    static WordNet from_parts(std::vector<IndexEntry> index, std::map<PosTag, DataMap> data,
                              std::map<PosTag, ExceptionMap> exceptions);

private:
    std::vector<IndexEntry> index_;
    std::map<PosTag, DataMap> data_;
    std::map<PosTag, ExceptionMap> exceptions_;
    GlossLookup lookup_;
};

/// Rule cascade picking the part of speech of `option_tokens[position]`.
PosTag infer_pos(std::span<const std::string> option_tokens, std::size_t position, const WordNet& wn);

/// First `max_glosses` glosses joined by "; ", cut to at most `token_budget`
/// tokens. Empty when the candidate has no senses under `pos`.
std::string build_definition_text(const std::string& candidate, PosTag pos, const WordNet& wn,
                                  std::size_t max_glosses = 3, std::size_t token_budget = 75);

struct EnrichOptions {
    std::size_t max_glosses = 3;
    std::size_t token_budget = 75;
};

/// Fills `definitions` and `pos` for all five candidates. The candidate sits
/// in the question at the placeholder and is treated as one token (multi-word
/// candidates included) when inferring its part of speech. Candidates with no
/// senses get an empty definition.
void enrich_instance(data::Instance& instance, const WordNet& wn, const EnrichOptions& options = {});

}  // namespace wnduma::wordnet

#endif  // WNDUMA_WORDNET_HPP
