#include "aot/nn/transformer.hpp"

#include <fstream>

#include "json.hpp"

namespace aot::nn {

TransformerConfig named_config(const std::string& name) {
    TransformerConfig cfg;
    // d_embed / n_heads / n_layers per published GPT2-family sizes
    if (name == "pico") {
        cfg.d_embed = 32;
        cfg.n_heads = 2;
        cfg.n_layers = 2;
    } else if (name == "nano") {
        cfg.d_embed = 48;
        cfg.n_heads = 3;
        cfg.n_layers = 3;
    } else if (name == "micro") {
        cfg.d_embed = 128;
        cfg.n_heads = 4;
        cfg.n_layers = 4;
    } else if (name == "mini") {
        cfg.d_embed = 192;
        cfg.n_heads = 6;
        cfg.n_layers = 6;
    } else if (name == "small") {
        cfg.d_embed = 380;
        cfg.n_heads = 10;
        cfg.n_layers = 10;
    } else if (name == "gpt1") {
        cfg.d_embed = 768;
        cfg.n_heads = 12;
        cfg.n_layers = 12;
    } else if (name == "medium") {
        cfg.d_embed = 1024;
        cfg.n_heads = 16;
        cfg.n_layers = 24;
    } else if (name == "xl") {
        cfg.d_embed = 1600;
        cfg.n_heads = 25;
        cfg.n_layers = 48;
    } else {
        throw InvalidArgument("named_config: unknown model name '" + name + "'");
    }
    return cfg;
}

int64_t param_count(const TransformerConfig& cfg) {
    const int64_t d = cfg.d_embed;
    const int64_t r = cfg.mlp_ratio;
    // per layer: qkv (3d^2+3d) + proj (d^2+d) + mlp (2rd^2 + rd + d) + two
    // layernorms (4d)
    int64_t per_layer = 3 * d * d + 3 * d + d * d + d + 2 * r * d * d + r * d + d + 4 * d;
    return int64_t(cfg.vocab) * d          // token embedding
           + int64_t(cfg.context) * d      // positional embedding
           + cfg.n_layers * per_layer      // blocks
           + 2 * d                         // final layernorm
           + d * int64_t(cfg.vocab);       // untied head, no bias
}

namespace {

using nlohmann::json;

constexpr uint32_t kCkptMagic = 0x43544F41;  // "AOTC"
constexpr uint32_t kCkptVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw InvalidArgument("checkpoint: truncated file");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

json config_to_json(const TransformerConfig& cfg) {
    return json{{"d_embed", cfg.d_embed},   {"n_heads", cfg.n_heads},
                {"n_layers", cfg.n_layers}, {"context", cfg.context},
                {"vocab", cfg.vocab},       {"dropout", cfg.dropout},
                {"mlp_ratio", cfg.mlp_ratio}};
}

TransformerConfig config_from_json(const json& j) {
    TransformerConfig cfg;
    cfg.d_embed = j.at("d_embed").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.context = j.at("context").get<int>();
    cfg.vocab = j.at("vocab").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.mlp_ratio = j.at("mlp_ratio").get<int>();
    cfg.validate();
    return cfg;
}

template <class T>
void save_checkpoint_impl(const std::string& path, TransformerParams<T>& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputMissing("checkpoint: cannot open for writing: " + path);
    put_u32(os, kCkptMagic);
    put_u32(os, kCkptVersion);
    std::string cfg_json = config_to_json(params.cfg).dump();
    put_u32(os, uint32_t(cfg_json.size()));
    os.write(cfg_json.data(), std::streamsize(cfg_json.size()));
    auto named = params.named();
    put_u32(os, uint32_t(named.size()));
    for (auto& nt : named) {
        put_u32(os, uint32_t(nt.name.size()));
        os.write(nt.name.data(), std::streamsize(nt.name.size()));
        put_u32(os, uint32_t(sizeof(T)));
        put_u32(os, uint32_t(nt.tensor->shape.size()));
        for (int64_t dme : nt.tensor->shape) put_u32(os, uint32_t(dme));
        os.write(reinterpret_cast<const char*>(nt.tensor->val.data()),
                 std::streamsize(nt.tensor->val.size() * sizeof(T)));
    }
    if (!os) throw InputMissing("checkpoint: write failed: " + path);
}

template <class T>
TransformerParams<T> load_checkpoint_impl(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputMissing("checkpoint: cannot open: " + path);
    if (get_u32(is) != kCkptMagic) throw InvalidArgument("checkpoint: bad magic in " + path);
    if (get_u32(is) != kCkptVersion) throw InvalidArgument("checkpoint: unsupported version");
    uint32_t json_len = get_u32(is);
    std::string cfg_json(json_len, '\0');
    is.read(cfg_json.data(), json_len);
    TransformerConfig cfg = config_from_json(json::parse(cfg_json));
    // allocate with the right shapes, then overwrite values
    TransformerParams<T> params = init_params<T>(cfg, 0);
    auto named = params.named();
    uint32_t n_tensors = get_u32(is);
    if (n_tensors != named.size())
        throw InvalidArgument("checkpoint: tensor count mismatch in " + path);
    for (auto& nt : named) {
        uint32_t name_len = get_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (name != nt.name) throw InvalidArgument("checkpoint: unexpected tensor " + name);
        if (get_u32(is) != sizeof(T))
            throw InvalidArgument("checkpoint: precision mismatch for " + name);
        uint32_t ndim = get_u32(is);
        std::vector<int64_t> shape(ndim);
        for (auto& dme : shape) dme = int64_t(get_u32(is));
        if (shape != nt.tensor->shape)
            throw InvalidArgument("checkpoint: shape mismatch for " + name);
        is.read(reinterpret_cast<char*>(nt.tensor->val.data()),
                std::streamsize(nt.tensor->val.size() * sizeof(T)));
        if (!is) throw InvalidArgument("checkpoint: truncated tensor " + name);
    }
    return params;
}

}  // namespace

template <>
void save_checkpoint<float>(const std::string& path, TransformerParams<float>& params) {
    save_checkpoint_impl(path, params);
}
template <>
void save_checkpoint<double>(const std::string& path, TransformerParams<double>& params) {
    save_checkpoint_impl(path, params);
}
template <>
TransformerParams<float> load_checkpoint<float>(const std::string& path) {
    return load_checkpoint_impl<float>(path);
}
template <>
TransformerParams<double> load_checkpoint<double>(const std::string& path) {
    return load_checkpoint_impl<double>(path);
}

}  // namespace aot::nn
