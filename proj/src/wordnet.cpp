#include "wnduma/wordnet.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wnduma/data.hpp"
#include "wnduma/errors.hpp"

namespace wnduma::wordnet {
namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Calls `fn(line, line_number)` for each line, with any trailing CR removed.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t number = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++number;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(line, number);
    }
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out, int base = 10) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out, base);
    return ec == std::errc{} && ptr == end;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<PosTag> pos_from_key(char key) {
    switch (key) {
        case 'n': return PosTag::noun;
        case 'v': return PosTag::verb;
        case 'a':
        case 's': return PosTag::adjective;
        case 'r': return PosTag::adverb;
        default: return std::nullopt;
    }
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

/// Drops the syntactic marker data.adj attaches to some words, e.g. "galore(ip)".
std::string strip_adjective_marker(std::string_view word) {
    for (std::string_view marker : {"(a)", "(p)", "(ip)"}) {
        if (word.size() > marker.size() && word.ends_with(marker)) {
            word.remove_suffix(marker.size());
            break;
        }
    }
    return lowercase(word);
}

bool ends_with(const std::string& s, std::string_view suffix) { return s.size() >= suffix.size() && s.ends_with(suffix); }

struct Rule {
    std::string_view suffix;
    std::string_view ending;
};

constexpr Rule kNounRules[] = {{"s", ""},     {"ses", "s"},  {"xes", "x"}, {"zes", "z"},
                               {"ches", "ch"}, {"shes", "sh"}, {"ies", "y"}};
constexpr Rule kVerbRules[] = {{"s", ""},  {"ies", "y"}, {"es", "e"}, {"es", ""},
                               {"ed", "e"}, {"ed", ""},  {"ing", "e"}, {"ing", ""}};
constexpr Rule kAdjectiveRules[] = {{"er", ""}, {"est", ""}, {"er", "e"}, {"est", "e"}};

std::span<const Rule> rules_for(PosTag pos) {
    switch (pos) {
        case PosTag::noun: return kNounRules;
        case PosTag::verb: return kVerbRules;
        case PosTag::adjective: return kAdjectiveRules;
        case PosTag::adverb: return {};
    }
    return {};
}

const std::vector<std::string>& empty_glosses() {
    static const std::vector<std::string> empty;
    return empty;
}

}  // namespace

std::string_view file_suffix(PosTag pos) {
    switch (pos) {
        case PosTag::noun: return "noun";
        case PosTag::verb: return "verb";
        case PosTag::adjective: return "adj";
        case PosTag::adverb: return "adv";
    }
    return "noun";
}

char file_key(PosTag pos) {
    switch (pos) {
        case PosTag::noun: return 'n';
        case PosTag::verb: return 'v';
        case PosTag::adjective: return 'a';
        case PosTag::adverb: return 'r';
    }
    return 'n';
}

std::string_view to_string(PosTag pos) {
    switch (pos) {
        case PosTag::noun: return "noun";
        case PosTag::verb: return "verb";
        case PosTag::adjective: return "adjective";
        case PosTag::adverb: return "adverb";
    }
    return "noun";
}

std::optional<PosTag> parse_pos(std::string_view text) {
    for (PosTag p : kAllPos)
        if (text == to_string(p) || text == file_suffix(p)) return p;
    if (text.size() == 1) return pos_from_key(text[0]);
    return std::nullopt;
}

std::vector<IndexEntry> parse_index_text(std::string_view text, const std::string& source) {
    std::vector<IndexEntry> out;
    for_each_line(text, [&](std::string_view line, std::size_t number) {
        if (line.starts_with("  ") || trim(line).empty()) return;
        const auto f = split_fields(line);
        auto fail = [&](const std::string& what) { throw ParseError(source, number, what); };
        if (f.size() < 6) fail("index line has too few fields");
        IndexEntry e;
        e.lemma = std::string(f[0]);
        if (f[1].size() != 1) fail("bad part-of-speech field '" + std::string(f[1]) + "'");
        auto pos = pos_from_key(f[1][0]);
        if (!pos) fail("bad part-of-speech field '" + std::string(f[1]) + "'");
        e.pos = *pos;
        std::size_t synset_cnt = 0, p_cnt = 0, sense_cnt = 0, tagsense_cnt = 0;
        if (!parse_number(f[2], synset_cnt)) fail("bad synset_cnt '" + std::string(f[2]) + "'");
        if (!parse_number(f[3], p_cnt)) fail("bad p_cnt '" + std::string(f[3]) + "'");
        const std::size_t after_ptrs = 4 + p_cnt;
        if (f.size() < after_ptrs + 2) fail("index line truncated inside pointer list");
        if (!parse_number(f[after_ptrs], sense_cnt)) fail("bad sense_cnt '" + std::string(f[after_ptrs]) + "'");
        if (!parse_number(f[after_ptrs + 1], tagsense_cnt))
            fail("bad tagsense_cnt '" + std::string(f[after_ptrs + 1]) + "'");
        const std::size_t first_offset = after_ptrs + 2;
        for (std::size_t i = first_offset; i < f.size(); ++i) {
            std::uint64_t off = 0;
            if (!parse_number(f[i], off)) fail("bad synset offset '" + std::string(f[i]) + "'");
            e.synset_offsets.push_back(off);
        }
        if (e.synset_offsets.size() != synset_cnt)
            throw StructuralError(source, number,
                                  "lemma '" + e.lemma + "' declares " + std::to_string(synset_cnt) + " synsets but lists " +
                                      std::to_string(e.synset_offsets.size()) + " offsets");
        out.push_back(std::move(e));
    });
    return out;
}

std::vector<IndexEntry> parse_index_file(const std::filesystem::path& path) {
    return parse_index_text(read_file(path), path.string());
}

std::pair<std::string, std::vector<std::string>> split_gloss(std::string_view raw) {
    raw = trim(raw);
    const std::size_t boundary = raw.find("; \"");
    std::string definition(trim(raw.substr(0, boundary)));
    std::vector<std::string> examples;
    if (boundary != std::string_view::npos) {
        std::string_view rest = raw.substr(boundary + 2);
        while (true) {
            const std::size_t open = rest.find('"');
            if (open == std::string_view::npos) break;
            const std::size_t close = rest.find('"', open + 1);
            if (close == std::string_view::npos) {
                examples.emplace_back(trim(rest.substr(open + 1)));
                break;
            }
            examples.emplace_back(trim(rest.substr(open + 1, close - open - 1)));
            rest = rest.substr(close + 1);
        }
    }
    return {std::move(definition), std::move(examples)};
}

DataMap parse_data_text(std::string_view text, const std::string& source) {
    DataMap out;
    for_each_line(text, [&](std::string_view line, std::size_t number) {
        if (line.starts_with("  ") || trim(line).empty()) return;
        auto fail = [&](const std::string& what) { throw ParseError(source, number, what); };
        const std::size_t bar = line.find('|');
        if (bar == std::string_view::npos) fail("missing '|' gloss separator");
        const auto f = split_fields(line.substr(0, bar));
        if (f.size() < 4) fail("data line has too few fields");
        SynsetEntry e;
        if (!parse_number(f[0], e.offset)) fail("bad synset offset '" + std::string(f[0]) + "'");
        if (f[2].size() != 1 || !pos_from_key(f[2][0])) fail("bad ss_type '" + std::string(f[2]) + "'");
        e.pos = *pos_from_key(f[2][0]);
        std::size_t w_cnt = 0;
        if (!parse_number(f[3], w_cnt, 16)) fail("bad w_cnt '" + std::string(f[3]) + "'");
        if (f.size() < 4 + 2 * w_cnt) fail("data line truncated inside word list");
        for (std::size_t i = 0; i < w_cnt; ++i) e.words.push_back(strip_adjective_marker(f[4 + 2 * i]));
        auto [definition, examples] = split_gloss(line.substr(bar + 1));
        if (definition.empty()) fail("synset " + std::string(f[0]) + " has an empty gloss");
        e.gloss = std::move(definition);
        e.examples = std::move(examples);
        const std::uint64_t key = e.offset;
        if (!out.emplace(key, std::move(e)).second)
            throw StructuralError(source, number, "duplicate synset offset " + std::string(f[0]));
    });
    return out;
}

DataMap parse_data_file(const std::filesystem::path& path) {
    return parse_data_text(read_file(path), path.string());
}

ExceptionMap parse_exception_text(std::string_view text, const std::string& source) {
    ExceptionMap out;
    for_each_line(text, [&](std::string_view line, std::size_t number) {
        const auto f = split_fields(line);
        if (f.empty()) return;
        if (f.size() < 2) throw ParseError(source, number, "exception line needs an inflected form and a base form");
        auto& bases = out[std::string(f[0])];
        for (std::size_t i = 1; i < f.size(); ++i) bases.emplace_back(f[i]);
    });
    return out;
}

ExceptionMap parse_exception_file(const std::filesystem::path& path) {
    return parse_exception_text(read_file(path), path.string());
}

GlossLookup::GlossLookup(std::span<const IndexEntry> index, const std::map<PosTag, DataMap>& data) {
    for (const auto& e : index) {
        auto dm = data.find(e.pos);
        std::vector<std::string> glosses;
        glosses.reserve(e.synset_offsets.size());
        for (std::uint64_t off : e.synset_offsets) {
            const SynsetEntry* s = nullptr;
            if (dm != data.end()) {
                if (auto it = dm->second.find(off); it != dm->second.end()) s = &it->second;
            }
            if (s == nullptr)
                throw StructuralError(std::string("index.") + std::string(file_suffix(e.pos)), 0,
                                      "lemma '" + e.lemma + "' references missing synset " + std::to_string(off));
            glosses.push_back(s->gloss);
        }
        insert(e.lemma, e.pos, std::move(glosses));
    }
}

void GlossLookup::insert(std::string lemma, PosTag pos, std::vector<std::string> glosses) {
    entries_[{std::move(lemma), pos}] = std::move(glosses);
}

const std::vector<std::string>& GlossLookup::glosses(const std::string& lemma, PosTag pos) const {
    auto it = entries_.find(Key{lemma, pos});
    return it == entries_.end() ? empty_glosses() : it->second;
}

bool GlossLookup::contains(const std::string& lemma, PosTag pos) const {
    return entries_.find(Key{lemma, pos}) != entries_.end();
}

std::string normalize_lemma(std::string_view word) {
    std::string out = lowercase(trim(word));
    std::replace(out.begin(), out.end(), ' ', '_');
    return out;
}

std::vector<std::string> morphy(const std::string& word, PosTag pos, const ExceptionMap& exceptions,
                                const GlossLookup& lookup) {
    const std::string form = normalize_lemma(word);
    std::vector<std::string> out;
    auto keep = [&](const std::string& candidate) {
        if (candidate.empty() || !lookup.contains(candidate, pos)) return;
        if (std::find(out.begin(), out.end(), candidate) == out.end()) out.push_back(candidate);
    };
    if (auto it = exceptions.find(form); it != exceptions.end())
        for (const auto& base : it->second) keep(base);
    for (const Rule& r : rules_for(pos)) {
        if (form.size() > r.suffix.size() && ends_with(form, r.suffix))
            keep(form.substr(0, form.size() - r.suffix.size()) + std::string(r.ending));
    }
    keep(form);
    return out;
}

WordNet WordNet::from_parts(std::vector<IndexEntry> index, std::map<PosTag, DataMap> data,
                            std::map<PosTag, ExceptionMap> exceptions) {
    WordNet wn;
    wn.lookup_ = GlossLookup(index, data);
    wn.index_ = std::move(index);
    wn.data_ = std::move(data);
    wn.exceptions_ = std::move(exceptions);
    return wn;
}

WordNet WordNet::load(const std::filesystem::path& dir) {
    std::vector<IndexEntry> index;
    std::map<PosTag, DataMap> data;
    std::map<PosTag, ExceptionMap> exceptions;
    for (PosTag pos : kAllPos) {
        const std::string suffix(file_suffix(pos));
        auto entries = parse_index_file(dir / ("index." + suffix));
        for (const auto& e : entries)
            if (e.pos != pos)
                throw StructuralError((dir / ("index." + suffix)).string(), 0,
                                      "lemma '" + e.lemma + "' has part of speech '" + std::string(to_string(e.pos)) + "'");
        index.insert(index.end(), std::make_move_iterator(entries.begin()), std::make_move_iterator(entries.end()));
        data.emplace(pos, parse_data_file(dir / ("data." + suffix)));
        const auto exc = dir / (suffix + ".exc");
        exceptions.emplace(pos, std::filesystem::exists(exc) ? parse_exception_file(exc) : ExceptionMap{});
    }
    return from_parts(std::move(index), std::move(data), std::move(exceptions));
}

std::optional<std::filesystem::path> WordNet::locate(const std::string& flag_value) {
    if (!flag_value.empty()) return std::filesystem::path(flag_value);
    if (const char* env = std::getenv("WNSEARCHDIR"); env != nullptr && *env != '\0')
        return std::filesystem::path(env);
    return std::nullopt;
}

const ExceptionMap& WordNet::exceptions(PosTag pos) const {
    static const ExceptionMap empty;
    auto it = exceptions_.find(pos);
    return it == exceptions_.end() ? empty : it->second;
}

const DataMap& WordNet::data(PosTag pos) const {
    static const DataMap empty;
    auto it = data_.find(pos);
    return it == data_.end() ? empty : it->second;
}

std::vector<std::string> WordNet::base_forms(const std::string& word, PosTag pos) const {
    return morphy(word, pos, exceptions(pos), lookup_);
}

const std::vector<std::string>& WordNet::senses(const std::string& word, PosTag pos) const {
    for (const auto& base : base_forms(word, pos)) {
        const auto& g = lookup_.glosses(base, pos);
        if (!g.empty()) return g;
    }
    return empty_glosses();
}

PosTag infer_pos(std::span<const std::string> option_tokens, std::size_t position, const WordNet& wn) {
    static const std::set<std::string, std::less<>> determiners = {"the", "a",  "an",  "his",   "her",
                                                                   "its", "their", "this", "these"};
    static const std::set<std::string, std::less<>> verb_cues = {
        "to", "will", "would", "can", "could", "may", "might", "has", "have", "had", "is", "are", "was", "were"};
    if (position >= option_tokens.size())
        throw IndexError("infer_pos: position " + std::to_string(position) + " outside option of " +
                         std::to_string(option_tokens.size()) + " tokens");
    const std::string& candidate = option_tokens[position];
    if (position > 0) {
        const std::string prev = lowercase(option_tokens[position - 1]);
        if (determiners.count(prev)) return PosTag::noun;
        if (verb_cues.count(prev)) return PosTag::verb;
    }
    if (ends_with(lowercase(candidate), "ly") && !wn.senses(candidate, PosTag::adverb).empty()) return PosTag::adverb;
    PosTag best = PosTag::noun;
    std::size_t best_count = 0;
    for (PosTag pos : kAllPos) {
        const std::size_t n = wn.senses(candidate, pos).size();
        if (n > best_count) {
            best = pos;
            best_count = n;
        }
    }
    return best;
}

std::string build_definition_text(const std::string& candidate, PosTag pos, const WordNet& wn,
                                  std::size_t max_glosses, std::size_t token_budget) {
    if (max_glosses < 1) throw ParameterError("build_definition_text: max_glosses must be at least 1");
    const auto& glosses = wn.senses(candidate, pos);
    std::string joined;
    for (std::size_t i = 0; i < glosses.size() && i < max_glosses; ++i) {
        if (i > 0) joined += "; ";
        joined += glosses[i];
    }
    return data::truncate_to_tokens(joined, token_budget);
}

void enrich_instance(data::Instance& instance, const WordNet& wn, const EnrichOptions& options) {
    const std::size_t at = instance.question.find(data::kPlaceholder);
    if (at == std::string::npos || instance.question.find(data::kPlaceholder, at + 1) != std::string::npos)
        throw ValidationError("instance '" + instance.id + "': question must contain exactly one placeholder");
    const auto before = data::tokenize(std::string_view(instance.question).substr(0, at));
    const auto after = data::tokenize(std::string_view(instance.question).substr(at + data::kPlaceholder.size()));
    instance.definitions.assign(data::kNumOptions, "");
    instance.pos.assign(data::kNumOptions, "");
    for (std::size_t k = 0; k < data::kNumOptions; ++k) {
        std::vector<std::string> tokens = before;
        tokens.push_back(instance.candidates[k]);
        tokens.insert(tokens.end(), after.begin(), after.end());
        const PosTag pos = infer_pos(tokens, before.size(), wn);
        instance.pos[k] = std::string(to_string(pos));
        instance.definitions[k] = build_definition_text(instance.candidates[k], pos, wn, options.max_glosses,
                                                        options.token_budget);
    }
}

}  // namespace wnduma::wordnet
