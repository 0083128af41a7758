#include "wnduma/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "wnduma/errors.hpp"

namespace wnduma::data {
namespace {

using json = nlohmann::json;

enum class CharClass { space, punct, digit, word };

/// Decodes one UTF-8 code point at `i`; returns its byte length (1 on malformed input).
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    auto byte = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    }
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | byte(1);
        return 2;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        cp = (static_cast<char32_t>(b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
        return 3;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        cp = (static_cast<char32_t>(b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
        return 4;
    }
    cp = b0;
    return 1;
}

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

CharClass classify(char32_t cp) {
    if (is_unicode_space(cp)) return CharClass::space;
    if (cp < 0x80) {
        const auto c = static_cast<unsigned char>(cp);
        if (std::ispunct(c)) return CharClass::punct;
        if (std::isdigit(c)) return CharClass::digit;
    }
    return CharClass::word;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_placeholders(std::string_view question) {
    std::size_t n = 0;
    for (std::size_t at = question.find(kPlaceholder); at != std::string_view::npos;
         at = question.find(kPlaceholder, at + kPlaceholder.size()))
        ++n;
    return n;
}

void validate(const Instance& inst, const std::string& where) {
    const std::size_t n = count_placeholders(inst.question);
    if (n != 1)
        throw ValidationError(where + ": question must contain exactly one " + std::string(kPlaceholder) + ", found " +
                              std::to_string(n));
    if (inst.label && (*inst.label < 0 || *inst.label >= static_cast<int>(kNumOptions)))
        throw ValidationError(where + ": label " + std::to_string(*inst.label) + " outside [0, 5)");
    if (!inst.definitions.empty() && inst.definitions.size() != kNumOptions)
        throw ValidationError(where + ": definitions must list one entry per option");
}

}  // namespace

std::vector<TokenSpan> tokenize_spans(std::string_view text) {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    std::optional<CharClass> run;
    std::size_t run_start = 0;
    auto close_run = [&](std::size_t end) {
        if (run) out.push_back({run_start, end});
        run.reset();
    };
    while (i < text.size()) {
        char32_t cp = 0;
        const std::size_t len = decode_utf8(text, i, cp);
        const CharClass cls = classify(cp);
        if (cls == CharClass::space) {
            close_run(i);
        } else if (cls == CharClass::punct) {
            close_run(i);
            out.push_back({i, i + len});
        } else if (!run || *run != cls) {
            close_run(i);
            run = cls;
            run_start = i;
        }
        i += len;
    }
    close_run(text.size());
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& span : tokenize_spans(text)) {
        std::string tok(text.substr(span.begin, span.end - span.begin));
        for (char& c : tok)
            if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(tok));
    }
    return out;
}

std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens) {
    const auto spans = tokenize_spans(text);
    if (spans.size() <= max_tokens) return std::string(text);
    if (max_tokens == 0) return {};
    return std::string(text.substr(0, spans[max_tokens - 1].end));
}

std::string substitute_placeholder(std::string_view question, std::string_view candidate) {
    const std::size_t n = count_placeholders(question);
    if (n != 1)
        throw ValidationError("substitute_placeholder: expected exactly one " + std::string(kPlaceholder) +
                              ", found " + std::to_string(n));
    const std::size_t at = question.find(kPlaceholder);
    std::string out(question.substr(0, at));
    out += candidate;
    out += question.substr(at + kPlaceholder.size());
    return out;
}

std::vector<Instance> parse_jsonl(std::string_view text, const std::string& source) {
    std::vector<Instance> out;
    std::size_t number = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++number;
        if (std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
            continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(source, number, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(source, number, "expected a JSON object");
        if (obj.contains("_meta")) continue;
        auto str = [&](const char* key) -> std::string {
            auto it = obj.find(key);
            if (it == obj.end()) throw ParseError(source, number, std::string("missing key '") + key + "'");
            if (!it->is_string()) throw ParseError(source, number, std::string("key '") + key + "' must be a string");
            return it->get<std::string>();
        };
        Instance inst;
        inst.passage = str("article");
        inst.question = str("question");
        for (std::size_t k = 0; k < kNumOptions; ++k) inst.candidates[k] = str(("option_" + std::to_string(k)).c_str());
        if (auto it = obj.find("id"); it != obj.end()) {
            inst.id = it->is_string() ? it->get<std::string>() : it->dump();
        } else {
            inst.id = std::to_string(out.size());
        }
        if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
            if (!it->is_number_integer()) throw ParseError(source, number, "label must be an integer");
            inst.label = it->get<int>();
        }
        try {
            if (auto it = obj.find("definitions"); it != obj.end())
                inst.definitions = it->get<std::vector<std::string>>();
            if (auto it = obj.find("pos"); it != obj.end()) inst.pos = it->get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ParseError(source, number, std::string("bad enrichment fields: ") + e.what());
        }
        validate(inst, source + ":" + std::to_string(number));
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> load_jsonl(const std::filesystem::path& path) {
    return parse_jsonl(read_file(path), path.string());
}

std::string to_json_line(const Instance& inst) {
    json obj = json::object();
    obj["id"] = inst.id;
    obj["article"] = inst.passage;
    obj["question"] = inst.question;
    for (std::size_t k = 0; k < kNumOptions; ++k) obj["option_" + std::to_string(k)] = inst.candidates[k];
    if (inst.label) obj["label"] = *inst.label;
    if (!inst.definitions.empty()) obj["definitions"] = inst.definitions;
    if (!inst.pos.empty()) obj["pos"] = inst.pos;
    return obj.dump();
}

Vocabulary::Vocabulary() : tokens_{"[PAD]", "[UNK]", "[CLS]", "[SEP]"} {
    for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<Index>(i));
}

Vocabulary Vocabulary::build(std::span<const Instance> instances, std::size_t min_freq, bool use_definitions) {
    if (instances.empty()) throw ValidationError("build_vocab: empty corpus");
    std::unordered_map<std::string, std::size_t> counts;
    auto add = [&](std::string_view text) {
        for (auto& t : tokenize(text)) ++counts[std::move(t)];
    };
    for (const auto& inst : instances) {
        add(inst.passage);
        for (std::size_t k = 0; k < kNumOptions; ++k) {
            add(substitute_placeholder(inst.question, inst.candidates[k]));
            if (use_definitions && k < inst.definitions.size()) add(inst.definitions[k]);
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [tok, n] : counts)
        if (n >= std::max<std::size_t>(min_freq, 1)) ranked.emplace_back(tok, n);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    for (auto& [tok, n] : ranked) {
        if (v.ids_.count(tok)) continue;
        v.ids_.emplace(tok, static_cast<Index>(v.tokens_.size()));
        v.tokens_.push_back(tok);
    }
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary base;
    if (tokens.size() < base.tokens_.size() ||
        !std::equal(base.tokens_.begin(), base.tokens_.end(), tokens.begin()))
        throw ValidationError("vocabulary must start with [PAD] [UNK] [CLS] [SEP]");
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    v.ids_.clear();
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        if (!v.ids_.emplace(v.tokens_[i], static_cast<Index>(i)).second)
            throw ValidationError("vocabulary lists '" + v.tokens_[i] + "' twice");
    return v;
}

Index Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(Index id) const {
    if (id < 0 || id >= size()) throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

ModelInput assemble_input(std::span<const std::string> passage_tokens, std::span<const std::string> option_tokens,
                          std::span<const std::string> definition_tokens, const Vocabulary& vocab,
                          std::size_t max_seq_len) {
    if (option_tokens.empty()) throw ValidationError("assemble_input: option has no tokens");
    if (passage_tokens.empty()) throw ValidationError("assemble_input: passage has no tokens");
    if (max_seq_len < 5)
        throw ParameterError("assemble_input: max_seq_len " + std::to_string(max_seq_len) +
                             " cannot hold [CLS] passage [SEP] option [SEP]");
    const std::size_t budget = max_seq_len - 3;
    std::size_t n_p = passage_tokens.size();
    std::size_t n_o = option_tokens.size();
    std::size_t n_d = definition_tokens.size();
    if (n_p + n_o + n_d > budget) {
        const std::size_t second_cap = std::max(budget / 2, budget > n_p ? budget - n_p : 0);
        if (n_o + n_d > second_cap) {
            const std::size_t keep_o = std::min(n_o, std::max<std::size_t>(second_cap, 1));
            n_d = std::min(n_d, second_cap - std::min(second_cap, keep_o));
            n_o = keep_o;
        }
        n_p = std::min(n_p, budget - n_o - n_d);
    }

    ModelInput in;
    in.token_ids.reserve(max_seq_len);
    in.token_type_ids.reserve(max_seq_len);
    auto push = [&](Index id, Index type) {
        in.token_ids.push_back(id);
        in.token_type_ids.push_back(type);
    };
    push(Vocabulary::kCls, 0);
    for (std::size_t i = 0; i < n_p; ++i) push(vocab.id(passage_tokens[i]), 0);
    push(Vocabulary::kSep, 0);
    for (std::size_t i = 0; i < n_o; ++i) push(vocab.id(option_tokens[i]), 1);
    for (std::size_t i = 0; i < n_d; ++i) push(vocab.id(definition_tokens[i]), 1);
    push(Vocabulary::kSep, 1);
    const std::size_t used = in.token_ids.size();
    while (in.token_ids.size() < max_seq_len) push(Vocabulary::kPad, 1);
    in.attention_mask = RowMask::Constant(static_cast<Index>(max_seq_len), false);
    in.attention_mask.head(static_cast<Index>(used)).setConstant(true);
    return in;
}

EncodedInstance encode_instance(const Instance& inst, const Vocabulary& vocab, std::size_t max_seq_len,
                                bool use_definitions) {
    EncodedInstance out;
    out.id = inst.id;
    out.label = inst.label;
    const auto passage = tokenize(inst.passage);
    for (std::size_t k = 0; k < kNumOptions; ++k) {
        const auto option = tokenize(substitute_placeholder(inst.question, inst.candidates[k]));
        std::vector<std::string> definition;
        if (use_definitions && k < inst.definitions.size()) definition = tokenize(inst.definitions[k]);
        out.options[k] = assemble_input(passage, option, definition, vocab, max_seq_len);
    }
    return out;
}

std::vector<EncodedInstance> encode_all(std::span<const Instance> instances, const Vocabulary& vocab,
                                        std::size_t max_seq_len, bool use_definitions) {
    std::vector<EncodedInstance> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(encode_instance(inst, vocab, max_seq_len, use_definitions));
    return out;
}

DatasetStats dataset_stats(std::span<const Instance> instances) {
    if (instances.empty()) throw ValidationError("dataset_stats: no instances");
    DatasetStats s;
    s.count = instances.size();
    std::set<std::string> vocab;
    std::set<std::string> answers;
    std::size_t passage_tokens = 0, question_tokens = 0;
    for (const auto& inst : instances) {
        auto p = tokenize(inst.passage);
        auto q = tokenize(inst.question);
        passage_tokens += p.size();
        question_tokens += q.size();
        vocab.insert(p.begin(), p.end());
        vocab.insert(q.begin(), q.end());
        for (const auto& c : inst.candidates) {
            auto toks = tokenize(c);
            std::string joined;
            for (const auto& t : toks) joined += (joined.empty() ? "" : " ") + t;
            answers.insert(joined);
            vocab.insert(toks.begin(), toks.end());
        }
    }
    s.avg_passage_length = static_cast<double>(passage_tokens) / static_cast<double>(s.count);
    s.avg_question_length = static_cast<double>(question_tokens) / static_cast<double>(s.count);
    s.vocabulary_size = vocab.size();
    s.answer_vocabulary_size = answers.size();
    return s;
}

std::string format_stats_table(std::span<const std::string> names, std::span<const DatasetStats> stats) {
    std::ostringstream out;
    const int label_w = 24;
    std::size_t col_w = 10;
    for (const auto& n : names) col_w = std::max(col_w, n.size() + 2);
    out << std::left << std::setw(label_w) << "";
    for (const auto& n : names) out << std::right << std::setw(static_cast<int>(col_w)) << n;
    out << '\n';
    auto row = [&](const char* label, auto get) {
        out << std::left << std::setw(label_w) << label;
        for (const auto& s : stats) out << std::right << std::setw(static_cast<int>(col_w)) << get(s);
        out << '\n';
    };
    auto fixed1 = [](double v) {
        std::ostringstream ss;
        ss << std::fixed << std::setprecision(1) << v;
        return ss.str();
    };
    row("Instances", [](const DatasetStats& s) { return std::to_string(s.count); });
    row("Avg. passage length", [&](const DatasetStats& s) { return fixed1(s.avg_passage_length); });
    row("Avg. question length", [&](const DatasetStats& s) { return fixed1(s.avg_question_length); });
    row("Vocabulary size", [](const DatasetStats& s) { return std::to_string(s.vocabulary_size); });
    row("Answer vocabulary size", [](const DatasetStats& s) { return std::to_string(s.answer_vocabulary_size); });
    return out.str();
}

std::string format_stats_csv(std::span<const std::string> names, std::span<const DatasetStats> stats) {
    std::ostringstream out;
    out << "split,count,avg_passage_length,avg_question_length,vocabulary_size,answer_vocabulary_size\n";
    out << std::setprecision(10);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        out << names[i] << ',' << s.count << ',' << s.avg_passage_length << ',' << s.avg_question_length << ','
            << s.vocabulary_size << ',' << s.answer_vocabulary_size << '\n';
    }
    return out.str();
}

}  // namespace wnduma::data
