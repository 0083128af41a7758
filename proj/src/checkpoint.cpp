#include "wnduma/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace wnduma {
namespace {

using json = nlohmann::json;
constexpr char kMagic[8] = {'W', 'N', 'D', 'U', 'M', 'A', 'C', 'K'};

template <typename T>
void put_le(std::string& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const char* data) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

json model_json(const ModelConfig& c) {
    return json{{"vocab_size", c.encoder.vocab_size},
                {"max_seq_len", c.encoder.max_seq_len},
                {"d_model", c.encoder.d_model},
                {"n_blocks", c.encoder.n_blocks},
                {"encoder_heads", c.encoder.n_heads},
                {"d_ff", c.encoder.d_ff},
                {"encoder_ln_eps", c.encoder.ln_eps},
                {"heads", c.coattention.heads},
                {"d_k", c.coattention.d_k},
                {"d_v", c.coattention.d_v},
                {"k", c.coattention.layers},
                {"mode", std::string(to_string(c.coattention.mode))},
                {"shared_params", c.coattention.shared_params},
                {"dropout", c.coattention.dropout},
                {"coattention_ln_eps", c.coattention.ln_eps},
                {"include_separators", c.include_separators}};
}

ModelConfig model_from(const json& j) {
    ModelConfig c;
    c.encoder.vocab_size = j.at("vocab_size").get<Index>();
    c.encoder.max_seq_len = j.at("max_seq_len").get<Index>();
    c.encoder.d_model = j.at("d_model").get<Index>();
    c.encoder.n_blocks = j.at("n_blocks").get<Index>();
    c.encoder.n_heads = j.at("encoder_heads").get<Index>();
    c.encoder.d_ff = j.at("d_ff").get<Index>();
    c.encoder.ln_eps = j.at("encoder_ln_eps").get<double>();
    c.coattention.heads = j.at("heads").get<Index>();
    c.coattention.d_k = j.at("d_k").get<Index>();
    c.coattention.d_v = j.at("d_v").get<Index>();
    c.coattention.layers = j.at("k").get<Index>();
    c.coattention.mode = parse_mode(j.at("mode").get<std::string>());
    c.coattention.shared_params = j.at("shared_params").get<bool>();
    c.coattention.dropout = j.at("dropout").get<double>();
    c.coattention.ln_eps = j.at("coattention_ln_eps").get<double>();
    c.include_separators = j.at("include_separators").get<bool>();
    return c;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return model_json(config).dump(); }

ModelConfig model_config_from_json(std::string_view text) { return model_from(json::parse(text)); }

void write_checkpoint(const std::filesystem::path& path, const Model& model, const data::Vocabulary& vocab,
                      std::string_view config_json) {
    json header;
    header["format_version"] = kCheckpointVersion;
    header["dtype"] = "float64";
    header["byte_order"] = "little";
    header["config"] = config_json.empty() ? json::object() : json::parse(config_json);
    header["model"] = model_json(model.config());
    header["vocabulary"] = vocab.tokens();
    std::string payload;
    json table = json::array();
    for (const Param* p : model.parameters().all()) {
        table.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()},
                         {"offset", payload.size()}});
        for (Index i = 0; i < p->value.size(); ++i) put_le<double>(payload, p->value.data()[i]);
    }
    header["tensors"] = table;
    const std::string text = header.dump();

    std::string out(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint64_t>(out, text.size());
    out += text;
    out += payload;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError(path.string(), 0, "cannot open checkpoint for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw ParseError(path.string(), 0, "failed writing checkpoint");
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError(path.string(), 0, "cannot open checkpoint");
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::size_t prefix = sizeof(kMagic) + 4 + 8;
    if (bytes.size() < prefix || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw ParseError(path.string(), 0, "not a checkpoint file (bad magic)");
    CheckpointData out;
    out.format_version = get_le<std::uint32_t>(bytes.data() + 8);
    if (out.format_version != kCheckpointVersion)
        throw ParseError(path.string(), 0, "unsupported checkpoint version " + std::to_string(out.format_version));
    const auto header_len = get_le<std::uint64_t>(bytes.data() + 12);
    if (bytes.size() < prefix + header_len) throw ParseError(path.string(), 0, "truncated checkpoint header");
    json header;
    try {
        header = json::parse(bytes.substr(prefix, header_len));
        out.config_json = header.at("config").dump();
        out.model = model_from(header.at("model"));
        out.vocabulary = data::Vocabulary::from_tokens(header.at("vocabulary").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, std::string("bad checkpoint header: ") + e.what());
    }
    const char* payload = bytes.data() + prefix + header_len;
    const std::size_t payload_len = bytes.size() - prefix - header_len;
    for (const auto& t : header.at("tensors")) {
        const auto rows = t.at("rows").get<Index>();
        const auto cols = t.at("cols").get<Index>();
        const auto offset = t.at("offset").get<std::size_t>();
        const std::size_t len = static_cast<std::size_t>(rows * cols) * sizeof(double);
        if (offset + len > payload_len)
            throw ParseError(path.string(), 0, "tensor '" + t.at("name").get<std::string>() + "' runs past the payload");
        Mat m(rows, cols);
        for (Index i = 0; i < m.size(); ++i)
            m.data()[i] = get_le<double>(payload + offset + static_cast<std::size_t>(i) * sizeof(double));
        out.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
    }
    return out;
}

void load_parameters(Model& model, const CheckpointData& checkpoint) {
    auto& store = model.parameters();
    if (checkpoint.tensors.size() != store.size())
        throw ValidationError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                              " tensors, model has " + std::to_string(store.size()));
    for (const auto& [name, value] : checkpoint.tensors) {
        Param* p = store.find(name);
        if (p == nullptr) throw ValidationError("checkpoint tensor '" + name + "' is not a model parameter");
        if (p->value.rows() != value.rows() || p->value.cols() != value.cols())
            throw DimensionError("checkpoint tensor '" + name + "' is " + shape_string(value) + ", model expects " +
                                 shape_string(p->value));
        p->value = value;
    }
}

Model restore_model(const CheckpointData& checkpoint) {
    Model model(checkpoint.model, 0);
    load_parameters(model, checkpoint);
    return model;
}

}  // namespace wnduma
