#pragma once

// Synthetic languages: GF(2) linear languages (x pads y with y = Mx plus
// optional bit noise), the prime-product language p x q <-> rev(pq), and the
// 81-sentence multiplication toy. Small languages can be materialized as
// explicit finite measures for exact entropy analysis.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "aot/common.hpp"
#include "aot/f2linalg.hpp"

namespace aot::lang {

using TokenId = uint16_t;
using Sentence = std::vector<TokenId>;

// ----------------------------- vocabulary -----------------------------

struct Vocab {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> ids;

    // special ids, -1 when a language does not use them
    int bos = -1;
    int pad = -1;
    int bit0 = -1;
    int bit1 = -1;
    int times = -1;
    int arrow = -1;
    int eq = -1;
    int digit0 = -1;  // digits 0..9 occupy ids digit0..digit0+9

    int size() const { return int(tokens.size()); }
    int id_of(const std::string& tok) const;
    std::string render(const Sentence& s, const std::string& sep = "") const;
};

Vocab linear_vocab();    // {0, 1, _, <bos>}
Vocab prime_vocab();     // {0..9, x, <->, <bos>}
Vocab mult_toy_vocab();  // {0..9, x, =, <bos>}

// ----------------------------- linear languages -----------------------------

enum class NoiseScope { all, y_only };

struct LinearLangSpec {
    int m = 0;            // register width in bits
    f2::F2Matrix M;       // m x m, invertible
    double p = 0.0;       // per-bit flip probability
    int pad_count = 7;    // separator pad tokens between x and y
    NoiseScope noise_scope = NoiseScope::all;

    int sentence_length() const { return 2 * m + pad_count; }
    void validate() const;
};

// x uniform on F2^m, y = Mx, bit tokens flipped independently with
// probability p (pads never flipped).
Sentence gen_linear_sentence(const LinearLangSpec& spec, const Vocab& v, Rng& rng);

// ----------------------------- prime language -----------------------------

struct PrimeLangSpec {
    int k = 0;  // digit budget per prime; p,q < 10^k
    std::vector<int64_t> primes;
    int times_reps = 3;
    int arrow_reps = 7;

    static PrimeLangSpec make(int k);
    int sentence_length() const { return 4 * k + 10; }
};

// (p, q) uniform over {(p,q): both prime < 10^k, p < q}; with replacement
// across calls.
std::pair<int64_t, int64_t> gen_prime_pair(const PrimeLangSpec& spec, Rng& rng);

Sentence format_prime_sentence(int64_t p, int64_t q, const PrimeLangSpec& spec, const Vocab& v);

// Zero-pad value to `width` digits, then reverse the character order.
std::string rev_digits(int64_t value, int width);

// Exact list of primes strictly below `limit`.
std::vector<int64_t> sieve_primes(int64_t limit);

// ----------------------------- finite measures -----------------------------

inline constexpr size_t kDefaultSupportCap = 1000000;

struct FiniteLanguage {
    std::vector<Sentence> sentences;  // distinct, all the same length
    std::vector<double> probabilities;
    int vocab_size = 0;

    int length() const { return sentences.empty() ? 0 : int(sentences[0].size()); }
    size_t support_size() const { return sentences.size(); }
    void validate() const;
};

FiniteLanguage finite_language(std::vector<Sentence> sentences, std::vector<double> probs,
                               int vocab_size);

// The 81 expressions A x B = C D with 1 <= A,B <= 9 and C=0 when the product
// has a single digit; uniform probability 1/81.
FiniteLanguage mult_toy_language();

// Explicit measure of a linear language. For p=0 the support is the 2^m
// pairs (x, Mx); for p>0 the bit noise spreads mass over all of F2^{2m}
// (computed exactly by convolving the noise one bit position at a time).
FiniteLanguage linear_language_measure(const LinearLangSpec& spec,
                                       size_t support_cap = kDefaultSupportCap);

// All C(pi,2) ordered pairs p<q as sentences, uniform.
FiniteLanguage prime_language_measure(int k, size_t support_cap = kDefaultSupportCap);

// Uniform measure over all V^n sequences (test helper; capped).
FiniteLanguage uniform_language(int vocab_size, int length,
                                size_t support_cap = kDefaultSupportCap);

// ----------------------------- field layout -----------------------------

struct FieldSpan {
    std::string name;
    int begin = 0;  // natural token positions [begin, end)
    int end = 0;
};

std::vector<FieldSpan> prime_field_spans(int k);
std::vector<FieldSpan> linear_field_spans(const LinearLangSpec& spec);
std::vector<FieldSpan> mult_toy_field_spans();

}  // namespace aot::lang
