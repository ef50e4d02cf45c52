#pragma once

// Binary token shards: header (magic, version, vocab size, sentence length,
// sentence count) followed by contiguous 16-bit little-endian token ids.
// A sidecar text file stores the vocabulary, one escaped token per line.

#include <cstdint>
#include <string>
#include <vector>

#include "aot/langgen.hpp"

namespace aot::shard {

inline constexpr uint32_t kMagic = 0x53544F41;  // "AOTS" little-endian
inline constexpr uint32_t kVersion = 1;

struct Shard {
    uint32_t vocab_size = 0;
    uint32_t sentence_length = 0;
    std::vector<lang::Sentence> sentences;
};

void write_shard(const std::string& path, const Shard& shard);
Shard read_shard(const std::string& path);

// Escapes: backslash, newline, carriage return, tab, and space, so that
// tokens survive line- and space-delimited file formats.
std::string escape_token(const std::string& tok);
std::string unescape_token(const std::string& tok);

void write_vocab(const std::string& path, const lang::Vocab& v);
std::vector<std::string> read_vocab_tokens(const std::string& path);

uint64_t shard_checksum(const Shard& shard);

}  // namespace aot::shard
