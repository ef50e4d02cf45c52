#include "aot/shard.hpp"

#include <fstream>

namespace aot::shard {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    put_u32(os, uint32_t(v));
    put_u32(os, uint32_t(v >> 32));
}

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw InvalidArgument("shard: truncated header");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

uint64_t get_u64(std::istream& is) {
    uint64_t lo = get_u32(is);
    uint64_t hi = get_u32(is);
    return lo | hi << 32;
}

}  // namespace

void write_shard(const std::string& path, const Shard& shard) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputMissing("shard: cannot open for writing: " + path);
    put_u32(os, kMagic);
    put_u32(os, kVersion);
    put_u32(os, shard.vocab_size);
    put_u32(os, shard.sentence_length);
    put_u64(os, shard.sentences.size());
    for (const auto& s : shard.sentences) {
        if (s.size() != shard.sentence_length)
            throw InvalidArgument("shard: sentence length mismatch");
        for (lang::TokenId t : s) {
            unsigned char b[2] = {static_cast<unsigned char>(t),
                                  static_cast<unsigned char>(t >> 8)};
            os.write(reinterpret_cast<const char*>(b), 2);
        }
    }
    if (!os) throw InputMissing("shard: write failed: " + path);
}

Shard read_shard(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputMissing("shard: cannot open: " + path);
    if (get_u32(is) != kMagic) throw InvalidArgument("shard: bad magic in " + path);
    uint32_t version = get_u32(is);
    if (version != kVersion)
        throw InvalidArgument("shard: unsupported version " + std::to_string(version));
    Shard shard;
    shard.vocab_size = get_u32(is);
    shard.sentence_length = get_u32(is);
    uint64_t count = get_u64(is);
    shard.sentences.reserve(size_t(count));
    std::vector<unsigned char> row(size_t(shard.sentence_length) * 2);
    for (uint64_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        if (!is) throw InvalidArgument("shard: truncated data in " + path);
        lang::Sentence s(shard.sentence_length);
        for (uint32_t j = 0; j < shard.sentence_length; ++j)
            s[j] = lang::TokenId(uint32_t(row[j * 2]) | uint32_t(row[j * 2 + 1]) << 8);
        shard.sentences.push_back(std::move(s));
    }
    return shard;
}

std::string escape_token(const std::string& tok) {
    std::string out;
    out.reserve(tok.size());
    for (char c : tok) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            case ' ': out += "\\s"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_token(const std::string& tok) {
    std::string out;
    out.reserve(tok.size());
    for (size_t i = 0; i < tok.size(); ++i) {
        if (tok[i] != '\\') {
            out += tok[i];
            continue;
        }
        if (i + 1 >= tok.size()) throw InvalidArgument("vocab: dangling escape");
        switch (tok[++i]) {
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            case 't': out += '\t'; break;
            case 's': out += ' '; break;
            default: throw InvalidArgument("vocab: unknown escape");
        }
    }
    return out;
}

void write_vocab(const std::string& path, const lang::Vocab& v) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputMissing("vocab: cannot open for writing: " + path);
    for (const auto& tok : v.tokens) os << escape_token(tok) << '\n';
}

std::vector<std::string> read_vocab_tokens(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputMissing("vocab: cannot open: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(unescape_token(line));
    }
    return tokens;
}

uint64_t shard_checksum(const Shard& shard) {
    uint64_t h = kFnvOffset;
    h = fnv1a(&shard.vocab_size, sizeof(shard.vocab_size), h);
    h = fnv1a(&shard.sentence_length, sizeof(shard.sentence_length), h);
    for (const auto& s : shard.sentences) h = fnv1a(s.data(), s.size() * sizeof(lang::TokenId), h);
    return h;
}

}  // namespace aot::shard
