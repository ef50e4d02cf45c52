#include "aot/langgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

namespace aot::lang {

int Vocab::id_of(const std::string& tok) const {
    auto it = ids.find(tok);
    if (it == ids.end()) throw UnknownSymbol("vocab: unknown token '" + tok + "'");
    return it->second;
}

std::string Vocab::render(const Sentence& s, const std::string& sep) const {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += sep;
        out += tokens.at(s[i]);
    }
    return out;
}

namespace {

Vocab build_vocab(const std::vector<std::string>& toks) {
    Vocab v;
    v.tokens = toks;
    for (int i = 0; i < int(toks.size()); ++i) v.ids[toks[size_t(i)]] = i;
    return v;
}

}  // namespace

Vocab linear_vocab() {
    Vocab v = build_vocab({"0", "1", "_", "<bos>"});
    v.bit0 = 0;
    v.bit1 = 1;
    v.pad = 2;
    v.bos = 3;
    return v;
}

Vocab prime_vocab() {
    Vocab v = build_vocab({"0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "x", "<->", "<bos>"});
    v.digit0 = 0;
    v.times = 10;
    v.arrow = 11;
    v.bos = 12;
    return v;
}

Vocab mult_toy_vocab() {
    Vocab v = build_vocab({"0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "x", "=", "<bos>"});
    v.digit0 = 0;
    v.times = 10;
    v.eq = 11;
    v.bos = 12;
    return v;
}

// ----------------------------- linear languages -----------------------------

void LinearLangSpec::validate() const {
    if (m < 1) throw InvalidArgument("LinearLangSpec: m must be >= 1");
    if (M.dim() != m) throw InvalidArgument("LinearLangSpec: matrix dimension != m");
    if (!f2::is_invertible(M)) throw InvalidArgument("LinearLangSpec: matrix must be invertible");
    if (p < 0.0 || p >= 1.0) throw InvalidArgument("LinearLangSpec: p must be in [0,1)");
    if (pad_count < 0) throw InvalidArgument("LinearLangSpec: pad_count must be >= 0");
}

Sentence gen_linear_sentence(const LinearLangSpec& spec, const Vocab& v, Rng& rng) {
    spec.validate();
    f2::F2Vec x(spec.m);
    for (int i = 0; i < spec.m; ++i) x.set(i, int(uniform_below(rng, 2)));
    f2::F2Vec y = f2::mat_vec_mul(spec.M, x);

    Sentence s;
    s.reserve(size_t(spec.sentence_length()));
    for (int i = 0; i < spec.m; ++i) s.push_back(TokenId(x.get(i) ? v.bit1 : v.bit0));
    for (int i = 0; i < spec.pad_count; ++i) s.push_back(TokenId(v.pad));
    for (int i = 0; i < spec.m; ++i) s.push_back(TokenId(y.get(i) ? v.bit1 : v.bit0));

    if (spec.p > 0.0) {
        int y_begin = spec.m + spec.pad_count;
        for (int i = 0; i < int(s.size()); ++i) {
            bool is_bit = i < spec.m || i >= y_begin;
            if (!is_bit) continue;
            if (spec.noise_scope == NoiseScope::y_only && i < y_begin) continue;
            if (uniform_unit(rng) < spec.p)
                s[size_t(i)] = TokenId(s[size_t(i)] == v.bit0 ? v.bit1 : v.bit0);
        }
    }
    return s;
}

// ----------------------------- prime language -----------------------------

std::vector<int64_t> sieve_primes(int64_t limit) {
    if (limit < 2) {
        if (limit < 2 && limit >= 0) return {};
        throw InvalidArgument("sieve_primes: limit must be >= 0");
    }
    if (limit > int64_t(1) << 31)
        throw ResourceLimit("sieve_primes: limit " + std::to_string(limit) +
                            " exceeds sieve budget");
    std::vector<uint8_t> composite(size_t(limit), 0);
    std::vector<int64_t> primes;
    for (int64_t i = 2; i < limit; ++i) {
        if (!composite[size_t(i)]) {
            primes.push_back(i);
            for (int64_t j = i * i; j < limit; j += i) composite[size_t(j)] = 1;
        }
    }
    return primes;
}

PrimeLangSpec PrimeLangSpec::make(int k) {
    if (k < 1) throw InvalidArgument("PrimeLangSpec: k must be >= 1");
    if (k > 8) throw ResourceLimit("PrimeLangSpec: k > 8 exceeds configured sieve budget");
    PrimeLangSpec spec;
    spec.k = k;
    int64_t limit = 1;
    for (int i = 0; i < k; ++i) limit *= 10;
    spec.primes = sieve_primes(limit);
    return spec;
}

std::pair<int64_t, int64_t> gen_prime_pair(const PrimeLangSpec& spec, Rng& rng) {
    size_t n = spec.primes.size();
    if (n < 2) throw InvalidArgument("gen_prime_pair: need at least two primes");
    for (;;) {
        size_t i = size_t(uniform_below(rng, n));
        size_t j = size_t(uniform_below(rng, n));
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        return {spec.primes[i], spec.primes[j]};
    }
}

std::string rev_digits(int64_t value, int width) {
    if (value < 0) throw InvalidArgument("rev_digits: value must be nonnegative");
    if (width < 1) throw InvalidArgument("rev_digits: width must be >= 1");
    int64_t cap = 1;
    for (int i = 0; i < width; ++i) cap *= 10;
    if (value >= cap)
        throw InvalidArgument("rev_digits: value " + std::to_string(value) +
                              " does not fit in " + std::to_string(width) + " digits");
    std::string s(size_t(width), '0');
    for (int i = width - 1; i >= 0; --i) {
        s[size_t(i)] = char('0' + value % 10);
        value /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

namespace {

bool is_listed_prime(int64_t x, const std::vector<int64_t>& primes) {
    return std::binary_search(primes.begin(), primes.end(), x);
}

void append_digits(Sentence& s, int64_t value, int width, const Vocab& v) {
    std::string d(size_t(width), '0');
    for (int i = width - 1; i >= 0; --i) {
        d[size_t(i)] = char('0' + value % 10);
        value /= 10;
    }
    for (char c : d) s.push_back(TokenId(v.digit0 + (c - '0')));
}

}  // namespace

Sentence format_prime_sentence(int64_t p, int64_t q, const PrimeLangSpec& spec, const Vocab& v) {
    if (!(p < q)) throw InvalidArgument("format_prime_sentence: requires p < q");
    if (!is_listed_prime(p, spec.primes) || !is_listed_prime(q, spec.primes))
        throw InvalidArgument("format_prime_sentence: p and q must be primes < 10^k");
    Sentence s;
    s.reserve(size_t(spec.sentence_length()));
    append_digits(s, p, spec.k, v);
    for (int i = 0; i < spec.times_reps; ++i) s.push_back(TokenId(v.times));
    append_digits(s, q, spec.k, v);
    for (int i = 0; i < spec.arrow_reps; ++i) s.push_back(TokenId(v.arrow));
    for (char c : rev_digits(p * q, 2 * spec.k)) s.push_back(TokenId(v.digit0 + (c - '0')));
    return s;
}

// ----------------------------- finite measures -----------------------------

namespace {

struct SentenceHash {
    size_t operator()(const Sentence& s) const {
        return size_t(fnv1a(s.data(), s.size() * sizeof(TokenId)));
    }
};

}  // namespace

void FiniteLanguage::validate() const {
    if (sentences.empty()) throw InvalidArgument("FiniteLanguage: empty support");
    if (sentences.size() != probabilities.size())
        throw InvalidArgument("FiniteLanguage: sentence/probability count mismatch");
    size_t len = sentences[0].size();
    double total = 0.0;
    std::unordered_set<Sentence, SentenceHash> seen;
    seen.reserve(sentences.size() * 2);
    for (size_t i = 0; i < sentences.size(); ++i) {
        if (sentences[i].size() != len)
            throw InvalidArgument("FiniteLanguage: sentences must share one length");
        if (probabilities[i] <= 0.0)
            throw InvalidArgument("FiniteLanguage: probabilities must be > 0");
        for (TokenId t : sentences[i])
            if (int(t) >= vocab_size)
                throw InvalidArgument("FiniteLanguage: token id exceeds vocab size");
        if (!seen.insert(sentences[i]).second)
            throw InvalidArgument("FiniteLanguage: sentences must be distinct");
        total += probabilities[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw InvalidArgument("FiniteLanguage: probabilities must sum to 1");
}

FiniteLanguage finite_language(std::vector<Sentence> sentences, std::vector<double> probs,
                               int vocab_size) {
    FiniteLanguage lang;
    lang.sentences = std::move(sentences);
    lang.probabilities = std::move(probs);
    lang.vocab_size = vocab_size;
    double total = 0.0;
    for (double p : lang.probabilities) total += p;
    if (total <= 0.0) throw InvalidArgument("finite_language: zero total mass");
    for (double& p : lang.probabilities) p /= total;
    lang.validate();
    return lang;
}

FiniteLanguage mult_toy_language() {
    Vocab v = mult_toy_vocab();
    std::vector<Sentence> sentences;
    sentences.reserve(81);
    for (int a = 1; a <= 9; ++a) {
        for (int b = 1; b <= 9; ++b) {
            int prod = a * b;
            Sentence s{TokenId(v.digit0 + a), TokenId(v.times), TokenId(v.digit0 + b),
                       TokenId(v.eq), TokenId(v.digit0 + prod / 10),
                       TokenId(v.digit0 + prod % 10)};
            sentences.push_back(std::move(s));
        }
    }
    return finite_language(std::move(sentences), std::vector<double>(81, 1.0 / 81.0), v.size());
}

FiniteLanguage linear_language_measure(const LinearLangSpec& spec, size_t support_cap) {
    spec.validate();
    Vocab v = linear_vocab();
    int m = spec.m;
    if (m > 30) throw ResourceLimit("linear_language_measure: m too large for enumeration");

    auto make_sentence = [&](uint64_t xbits, uint64_t ybits) {
        Sentence s;
        s.reserve(size_t(spec.sentence_length()));
        for (int i = 0; i < m; ++i) s.push_back(TokenId((xbits >> i) & 1 ? v.bit1 : v.bit0));
        for (int i = 0; i < spec.pad_count; ++i) s.push_back(TokenId(v.pad));
        for (int i = 0; i < m; ++i) s.push_back(TokenId((ybits >> i) & 1 ? v.bit1 : v.bit0));
        return s;
    };
    auto apply_matrix = [&](uint64_t xbits) {
        f2::F2Vec x(m);
        for (int i = 0; i < m; ++i) x.set(i, int((xbits >> i) & 1));
        f2::F2Vec y = f2::mat_vec_mul(spec.M, x);
        uint64_t ybits = 0;
        for (int i = 0; i < m; ++i) ybits |= uint64_t(y.get(i)) << i;
        return ybits;
    };

    if (spec.p == 0.0) {
        size_t count = size_t(1) << m;
        if (count > support_cap)
            throw ResourceLimit("linear_language_measure: support 2^" + std::to_string(m) +
                                " exceeds cap " + std::to_string(support_cap));
        std::vector<Sentence> sentences;
        sentences.reserve(count);
        for (uint64_t xbits = 0; xbits < count; ++xbits)
            sentences.push_back(make_sentence(xbits, apply_matrix(xbits)));
        return finite_language(std::move(sentences),
                               std::vector<double>(count, 1.0 / double(count)), v.size());
    }

    // Noisy case: mass over the joint (x,y) in F2^{2m}, noise convolved in
    // one bit position at a time. Joint index = xbits | (ybits << m).
    if (2 * m > 40 || (size_t(1) << (2 * m)) > support_cap)
        throw ResourceLimit("linear_language_measure: noisy support 2^" + std::to_string(2 * m) +
                            " exceeds cap " + std::to_string(support_cap));
    size_t joint = size_t(1) << (2 * m);
    std::vector<double> mass(joint, 0.0);
    double base = 1.0 / double(size_t(1) << m);
    for (uint64_t xbits = 0; xbits < (uint64_t(1) << m); ++xbits)
        mass[size_t(xbits | (apply_matrix(xbits) << m))] += base;

    int noise_lo = spec.noise_scope == NoiseScope::all ? 0 : m;
    for (int bit = noise_lo; bit < 2 * m; ++bit) {
        uint64_t flip = uint64_t(1) << bit;
        std::vector<double> next(joint);
        for (size_t z = 0; z < joint; ++z)
            next[z] = (1.0 - spec.p) * mass[z] + spec.p * mass[z ^ flip];
        mass.swap(next);
    }

    std::vector<Sentence> sentences;
    std::vector<double> probs;
    sentences.reserve(joint);
    probs.reserve(joint);
    for (size_t z = 0; z < joint; ++z) {
        if (mass[z] <= 0.0) continue;
        uint64_t xbits = z & ((uint64_t(1) << m) - 1);
        uint64_t ybits = z >> m;
        sentences.push_back(make_sentence(xbits, ybits));
        probs.push_back(mass[z]);
    }
    return finite_language(std::move(sentences), std::move(probs), v.size());
}

FiniteLanguage prime_language_measure(int k, size_t support_cap) {
    PrimeLangSpec spec = PrimeLangSpec::make(k);
    Vocab v = prime_vocab();
    size_t pi = spec.primes.size();
    size_t pairs = pi * (pi - 1) / 2;
    if (pairs > support_cap)
        throw ResourceLimit("prime_language_measure: " + std::to_string(pairs) +
                            " pairs exceed cap " + std::to_string(support_cap));
    std::vector<Sentence> sentences;
    sentences.reserve(pairs);
    for (size_t i = 0; i < pi; ++i)
        for (size_t j = i + 1; j < pi; ++j)
            sentences.push_back(format_prime_sentence(spec.primes[i], spec.primes[j], spec, v));
    return finite_language(std::move(sentences),
                           std::vector<double>(pairs, 1.0 / double(pairs)), v.size());
}

FiniteLanguage uniform_language(int vocab_size, int length, size_t support_cap) {
    if (vocab_size < 1 || length < 1)
        throw InvalidArgument("uniform_language: vocab_size and length must be >= 1");
    double count_d = std::pow(double(vocab_size), length);
    if (count_d > double(support_cap))
        throw ResourceLimit("uniform_language: V^n exceeds cap");
    size_t count = size_t(count_d + 0.5);
    std::vector<Sentence> sentences;
    sentences.reserve(count);
    Sentence s(size_t(length), 0);
    for (size_t idx = 0; idx < count; ++idx) {
        size_t rem = idx;
        for (int pos = length - 1; pos >= 0; --pos) {
            s[size_t(pos)] = TokenId(rem % size_t(vocab_size));
            rem /= size_t(vocab_size);
        }
        sentences.push_back(s);
    }
    return finite_language(std::move(sentences),
                           std::vector<double>(count, 1.0 / double(count)), vocab_size);
}

// ----------------------------- field layout -----------------------------

std::vector<FieldSpan> prime_field_spans(int k) {
    return {
        {"p", 0, k},
        {"times", k, k + 3},
        {"q", k + 3, 2 * k + 3},
        {"arrow", 2 * k + 3, 2 * k + 10},
        {"rev_pq", 2 * k + 10, 4 * k + 10},
    };
}

std::vector<FieldSpan> linear_field_spans(const LinearLangSpec& spec) {
    int m = spec.m;
    return {
        {"x", 0, m},
        {"pad", m, m + spec.pad_count},
        {"y", m + spec.pad_count, 2 * m + spec.pad_count},
    };
}

std::vector<FieldSpan> mult_toy_field_spans() {
    return {{"A", 0, 1}, {"times", 1, 2}, {"B", 2, 3}, {"eq", 3, 4}, {"C", 4, 5}, {"D", 5, 6}};
}

}  // namespace aot::lang
