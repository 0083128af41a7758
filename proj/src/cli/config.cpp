#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wnduma/cli.hpp"

namespace wnduma::cli {
namespace {

enum class Kind { text, count, real, flag, mode, seeds };

struct Key {
    const char* name;
    Kind kind;
    const char* fallback;
    double min = 0;
    double max = 1e300;
};

// Desk-scale defaults throughout.
const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"data.dir", Kind::text, ""},
        {"data.train", Kind::text, "train.jsonl"},
        {"data.dev", Kind::text, "dev.jsonl"},
        {"data.test", Kind::text, "test.jsonl"},
        {"data.max_seq_len", Kind::count, "150", 5},
        {"data.min_freq", Kind::count, "1", 1},
        {"wordnet.dir", Kind::text, ""},
        {"wordnet.enable", Kind::flag, "true"},
        {"wordnet.max_glosses", Kind::count, "3", 1},
        {"wordnet.definition_tokens", Kind::count, "75", 0},
        {"model.d_model", Kind::count, "64", 2},
        {"model.encoder_heads", Kind::count, "4", 1},
        {"model.n_blocks", Kind::count, "2", 0},
        {"model.d_ff", Kind::count, "256", 1},
        {"model.heads", Kind::count, "4", 1},
        {"model.d_k", Kind::count, "16", 1},
        {"model.d_v", Kind::count, "16", 1},
        {"model.mode", Kind::mode, "stacked"},
        {"model.k", Kind::count, "1", 1},
        {"model.shared_params", Kind::flag, "false"},
        {"model.include_separators", Kind::flag, "false"},
        {"train.epochs", Kind::count, "1000", 0},
        {"train.max_steps", Kind::count, "500", 0},
        {"train.batch_size", Kind::count, "8", 1},
        {"train.lr", Kind::real, "0.001", 1e-300},
        {"train.warmup_fraction", Kind::real, "0.1", 1e-300, 1 - 1e-12},
        {"train.grad_clip_norm", Kind::real, "10", 1e-300},
        {"train.dropout", Kind::real, "0.1", 0, 1 - 1e-12},
        {"train.eval_every", Kind::count, "50", 1},
        {"train.seeds", Kind::seeds, "1,2,3,4,5"},
        {"train.weight_decay", Kind::real, "0.01", 0},
        {"output.dir", Kind::text, "."},
        {"output.metrics", Kind::text, "metrics.csv"},
        {"output.checkpoint", Kind::text, ""},
        {"output.predictions", Kind::text, "predictions.jsonl"},
        {"gradcheck.seq_len", Kind::count, "32", 8},
        {"gradcheck.samples", Kind::count, "6", 0},
        {"gradcheck.tolerance", Kind::real, "0.0001", 1e-300},
    };
    return table;
}

const Key* find_key(const std::string& name) {
    for (const auto& k : keys())
        if (name == k.name) return &k;
    return nullptr;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<std::uint64_t> parse_count(const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<double> parse_real(const std::string& s) {
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<bool> parse_flag(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    return std::nullopt;
}

std::optional<std::vector<std::uint64_t>> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto v = parse_count(trim(item));
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::string real_text(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

// Parses and range-checks one value; returns its canonical text or an error.
std::pair<std::string, std::string> canonical(const Key& key, const std::string& raw) {
    switch (key.kind) {
        case Kind::text:
            return {raw, ""};
        case Kind::count: {
            const auto v = parse_count(raw);
            if (!v) return {"", "expected a non-negative integer, got '" + raw + "'"};
            if (static_cast<double>(*v) < key.min)
                return {"", "must be at least " + std::to_string(static_cast<long long>(key.min))};
            return {std::to_string(*v), ""};
        }
        case Kind::real: {
            const auto v = parse_real(raw);
            if (!v) return {"", "expected a number, got '" + raw + "'"};
            if (*v < key.min || *v > key.max) return {"", "value " + raw + " out of range"};
            return {real_text(*v), ""};
        }
        case Kind::flag: {
            const auto v = parse_flag(raw);
            if (!v) return {"", "expected true/false, got '" + raw + "'"};
            return {*v ? "true" : "false", ""};
        }
        case Kind::mode:
            if (raw != "stacked" && raw != "parallel") return {"", "expected stacked or parallel, got '" + raw + "'"};
            return {raw, ""};
        case Kind::seeds: {
            const auto v = parse_seeds(raw);
            if (!v) return {"", "expected a comma-separated list of seeds, got '" + raw + "'"};
            std::string out;
            for (auto s : *v) out += (out.empty() ? "" : ",") + std::to_string(s);
            return {out, ""};
        }
    }
    return {"", "unhandled key kind"};
}

}  // namespace

KeyValues default_values() {
    KeyValues out;
    for (const auto& k : keys()) out[k.name] = k.fallback;
    return out;
}

KeyValues parse_config_text(std::string_view text, const std::string& source) {
    KeyValues out;
    std::string section;
    std::size_t line_no = 0;
    std::stringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(source, line_no, "unterminated section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected 'key = value'");
        if (section.empty()) throw ParseError(source, line_no, "key outside of any [section]");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw ParseError(source, line_no, "empty key");
        out[section + "." + key] = trim(std::string_view(t).substr(eq + 1));
    }
    return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path.string(), 0, "cannot open config file");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

CliConfig resolve(const KeyValues& values) {
    KeyValues merged = default_values();
    std::vector<std::string> problems;
    for (const auto& [name, raw] : values) {
        const Key* key = find_key(name);
        if (key == nullptr) {
            problems.push_back(name + ": unknown key");
            continue;
        }
        merged[name] = raw;
    }
    for (const auto& k : keys()) {
        auto [text, problem] = canonical(k, merged[k.name]);
        if (!problem.empty())
            problems.push_back(std::string(k.name) + ": " + problem);
        else
            merged[k.name] = text;
    }
    auto count = [&](const char* n) { return static_cast<std::size_t>(*parse_count(merged[n])); };
    auto index = [&](const char* n) { return static_cast<Index>(*parse_count(merged[n])); };
    auto real = [&](const char* n) { return *parse_real(merged[n]); };
    auto flag = [&](const char* n) { return merged[n] == "true"; };
    if (problems.empty()) {
        if (count("model.d_model") % count("model.encoder_heads") != 0)
            problems.push_back("model.d_model: must be divisible by model.encoder_heads");
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                          (problems.size() == 1 ? "" : "s") + "):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }

    if (merged["wordnet.dir"].empty())
        if (const char* env = std::getenv("WNSEARCHDIR"); env != nullptr) merged["wordnet.dir"] = env;

    CliConfig c;
    c.data_dir = merged["data.dir"];
    c.train_file = merged["data.train"];
    c.dev_file = merged["data.dev"];
    c.test_file = merged["data.test"];
    c.max_seq_len = count("data.max_seq_len");
    c.min_freq = count("data.min_freq");
    c.wordnet_dir = merged["wordnet.dir"];
    c.use_definitions = flag("wordnet.enable");
    c.enrich.max_glosses = count("wordnet.max_glosses");
    c.enrich.token_budget = count("wordnet.definition_tokens");

    c.model.encoder.d_model = index("model.d_model");
    c.model.encoder.n_heads = index("model.encoder_heads");
    c.model.encoder.n_blocks = index("model.n_blocks");
    c.model.encoder.d_ff = index("model.d_ff");
    c.model.coattention.heads = index("model.heads");
    c.model.coattention.d_k = index("model.d_k");
    c.model.coattention.d_v = index("model.d_v");
    c.model.coattention.mode = parse_mode(merged["model.mode"]);
    c.model.coattention.layers = index("model.k");
    c.model.coattention.shared_params = flag("model.shared_params");
    c.model.coattention.dropout = real("train.dropout");
    c.model.include_separators = flag("model.include_separators");

    c.train.epochs = count("train.epochs");
    c.train.max_steps = count("train.max_steps");
    c.train.batch_size = count("train.batch_size");
    c.train.peak_lr = real("train.lr");
    c.train.warmup_fraction = real("train.warmup_fraction");
    c.train.grad_clip_norm = real("train.grad_clip_norm");
    c.train.dropout = real("train.dropout");
    c.train.eval_every_steps = count("train.eval_every");
    c.train.seeds = *parse_seeds(merged["train.seeds"]);
    c.train.weight_decay = real("train.weight_decay");
    c.train.max_seq_len = c.max_seq_len;
    c.train.mode = c.model.coattention.mode;
    try {
        validate(c.train);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("invalid configuration (1 problem):\n  ") + e.what());
    }

    c.out_dir = merged["output.dir"];
    c.metrics_file = merged["output.metrics"];
    c.checkpoint = merged["output.checkpoint"];
    c.predictions_file = merged["output.predictions"];
    c.gradcheck_seq_len = count("gradcheck.seq_len");
    c.gradcheck_samples = count("gradcheck.samples");
    c.gradcheck_tolerance = real("gradcheck.tolerance");
    c.values = std::move(merged);
    return c;
}

ModelConfig CliConfig::model_for(Index vocab_size, Index seq_len) const {
    ModelConfig m = model;
    m.encoder.vocab_size = vocab_size;
    m.encoder.max_seq_len = seq_len;
    return m;
}

std::filesystem::path CliConfig::data_path(const std::string& file) const {
    const std::filesystem::path p(file);
    if (p.is_absolute() || data_dir.empty()) return p;
    return std::filesystem::path(data_dir) / p;
}

std::filesystem::path CliConfig::out_path(const std::string& file) const {
    const std::filesystem::path p(file);
    if (p.is_absolute()) return p;
    return std::filesystem::path(out_dir) / p;
}

std::string effective_json(const CliConfig& config) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& k : keys()) {
        const std::string name = k.name;
        const auto dot = name.find('.');
        const std::string section = name.substr(0, dot);
        const std::string key = name.substr(dot + 1);
        const std::string& v = config.values.at(name);
        switch (k.kind) {
            case Kind::count: j[section][key] = *parse_count(v); break;
            case Kind::real: j[section][key] = *parse_real(v); break;
            case Kind::flag: j[section][key] = v == "true"; break;
            case Kind::seeds: j[section][key] = *parse_seeds(v); break;
            default: j[section][key] = v; break;
        }
    }
    return j.dump();
}

}  // namespace wnduma::cli
