#pragma once

// Direction-aware corpus preparation: stride splitting, BOS placement with
// batch-level token reversal, deterministic shuffling with validation
// withholding, a from-scratch BPE tokenizer, and character-level corpus
// reversal for the tokenization-artifact control.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "aot/common.hpp"
#include "aot/langgen.hpp"

namespace aot::pipe {

using lang::Sentence;
using lang::TokenId;

// ----------------------------- splitting -----------------------------

struct SplitConfig {
    int n = 0;       // context length in tokens, including BOS
    int stride = 0;  // 0 -> default floor(n/2)

    int window() const { return n - 1; }
    int effective_stride() const { return stride > 0 ? stride : n / 2; }
    void validate() const;
};

// Windows of n-1 tokens starting at 0, stride, 2*stride, ...; a trailing
// partial window is dropped. Input shorter than one window yields an empty
// list (not an error).
std::vector<Sentence> split_with_stride(const Sentence& tokens, const SplitConfig& cfg);

// FW: [BOS] ++ s. BW: reverse(s ++ [BOS]) == [BOS] ++ reverse(s).
Sentence prepare_direction(const Sentence& s, Direction dir, TokenId bos_id);

// ----------------------------- shuffling -----------------------------

// Identity of the permutation algorithm; part of the file-format contract.
inline constexpr const char* kShuffleAlgorithm = "fisher-yates-v1/mt19937_64";

struct SentenceSet {
    std::vector<Sentence> sentences;
    uint64_t seed = 0;
};

// Deterministic seeded Fisher-Yates permutation, then the first
// n_validation sentences go to validation and the rest to training.
std::pair<SentenceSet, SentenceSet> shuffle_split(std::vector<Sentence> sentences, uint64_t seed,
                                                  size_t n_validation);

// Sequential batch stream over a SentenceSet. Batches are consecutive slices
// in stored order and wrap around at the end; the underlying sentence order
// is direction-independent, direction is applied per sentence inside the
// batch. The checksum covers the pre-direction token ids consumed so far.
class BatchIter {
   public:
    BatchIter(const SentenceSet& set, size_t batch_size, Direction dir, TokenId bos_id);

    // next batch of prepared model inputs, each of length window+1
    std::vector<Sentence> next();
    uint64_t stream_checksum() const { return checksum_; }
    size_t batches_per_epoch() const;

   private:
    const SentenceSet& set_;
    size_t batch_size_;
    Direction dir_;
    TokenId bos_;
    size_t cursor_ = 0;
    uint64_t checksum_ = kFnvOffset;
};

// ----------------------------- BPE -----------------------------

struct BpeModel {
    std::vector<std::string> vocab;                  // index = token id; id 0 is BOS
    std::vector<std::pair<int, int>> merges;         // symbol-id pairs, in training order
    std::unordered_map<std::string, int> token_ids;  // token string -> id
    int bos_id = 0;

    int vocab_size() const { return int(vocab.size()); }
};

inline constexpr const char* kBosToken = "<bos>";

// Greedy highest-frequency pair merging over unicode-scalar symbols until
// vocab_size is reached or no pair occurs twice. Ties break on the
// lexicographically smallest (left, right) pair.
BpeModel bpe_train(const std::string& corpus, int vocab_size);

std::vector<TokenId> bpe_encode(const BpeModel& model, const std::string& text);
std::string bpe_decode(const BpeModel& model, const std::vector<TokenId>& ids);

// Text format: line 1 vocab size, then vocab tokens (escaped), then merges
// as "left right" token-string lines.
void save_bpe(const std::string& path, const BpeModel& model);
BpeModel load_bpe(const std::string& path);

// ----------------------------- char reversal -----------------------------

// Unicode-scalar-level reversal (an involution); multi-byte characters are
// kept intact rather than byte-reversed.
std::string reverse_chars(const std::string& text);

// UTF-8 <-> code point helpers (throw InvalidArgument on malformed input).
std::vector<uint32_t> utf8_decode(const std::string& text);
std::string utf8_encode(const std::vector<uint32_t>& points);

}  // namespace aot::pipe
