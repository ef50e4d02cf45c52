#include "aot/datapipe.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "aot/shard.hpp"

namespace aot::pipe {

// ----------------------------- splitting -----------------------------

void SplitConfig::validate() const {
    if (n < 2) throw InvalidArgument("SplitConfig: n must be >= 2");
    int s = effective_stride();
    if (s < 1 || s > n - 1) throw InvalidArgument("SplitConfig: stride must be in [1, n-1]");
}

std::vector<Sentence> split_with_stride(const Sentence& tokens, const SplitConfig& cfg) {
    cfg.validate();
    size_t w = size_t(cfg.window());
    size_t stride = size_t(cfg.effective_stride());
    std::vector<Sentence> out;
    if (tokens.size() < w) return out;
    for (size_t start = 0; start + w <= tokens.size(); start += stride)
        out.emplace_back(tokens.begin() + std::ptrdiff_t(start),
                         tokens.begin() + std::ptrdiff_t(start + w));
    return out;
}

Sentence prepare_direction(const Sentence& s, Direction dir, TokenId bos_id) {
    Sentence out;
    out.reserve(s.size() + 1);
    out.push_back(bos_id);
    if (dir == Direction::fw)
        out.insert(out.end(), s.begin(), s.end());
    else
        out.insert(out.end(), s.rbegin(), s.rend());
    return out;
}

// ----------------------------- shuffling -----------------------------

std::pair<SentenceSet, SentenceSet> shuffle_split(std::vector<Sentence> sentences, uint64_t seed,
                                                  size_t n_validation) {
    if (n_validation >= sentences.size())
        throw InvalidArgument("shuffle_split: n_validation must be < sentence count");
    Rng rng = derive_rng(seed, /*stream=*/0);
    // Fisher-Yates, descending index; uniform_below keeps the permutation
    // identical across standard libraries (see kShuffleAlgorithm).
    for (size_t i = sentences.size(); i > 1; --i) {
        size_t j = size_t(uniform_below(rng, i));
        std::swap(sentences[i - 1], sentences[j]);
    }
    SentenceSet val;
    val.seed = seed;
    val.sentences.assign(sentences.begin(), sentences.begin() + std::ptrdiff_t(n_validation));
    SentenceSet train;
    train.seed = seed;
    train.sentences.assign(sentences.begin() + std::ptrdiff_t(n_validation), sentences.end());
    return {std::move(train), std::move(val)};
}

BatchIter::BatchIter(const SentenceSet& set, size_t batch_size, Direction dir, TokenId bos_id)
    : set_(set), batch_size_(batch_size), dir_(dir), bos_(bos_id) {
    if (batch_size_ < 1) throw InvalidArgument("BatchIter: batch_size must be >= 1");
    if (set_.sentences.empty()) throw InvalidArgument("BatchIter: empty sentence set");
}

size_t BatchIter::batches_per_epoch() const {
    return (set_.sentences.size() + batch_size_ - 1) / batch_size_;
}

std::vector<Sentence> BatchIter::next() {
    std::vector<Sentence> batch;
    size_t take = std::min(batch_size_, set_.sentences.size() - cursor_);
    batch.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        const Sentence& s = set_.sentences[cursor_ + i];
        checksum_ = fnv1a(s.data(), s.size() * sizeof(TokenId), checksum_);
        batch.push_back(prepare_direction(s, dir_, bos_));
    }
    cursor_ += take;
    if (cursor_ >= set_.sentences.size()) cursor_ = 0;
    return batch;
}

// ----------------------------- BPE -----------------------------

namespace {

// Merge every non-overlapping (a,b) occurrence left to right into `merged`.
void apply_merge(std::vector<int>& syms, int a, int b, int merged) {
    size_t out = 0;
    for (size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
            syms[out++] = merged;
            i += 2;
        } else {
            syms[out++] = syms[i++];
        }
    }
    syms.resize(out);
}

std::vector<std::string> corpus_chars(const std::string& corpus) {
    std::vector<uint32_t> points = utf8_decode(corpus);
    std::vector<std::string> chars;
    chars.reserve(points.size());
    for (uint32_t cp : points) chars.push_back(utf8_encode({cp}));
    return chars;
}

}  // namespace

BpeModel bpe_train(const std::string& corpus, int vocab_size) {
    if (corpus.empty()) throw InvalidArgument("bpe_train: empty corpus");
    std::vector<std::string> chars = corpus_chars(corpus);

    BpeModel model;
    model.vocab.push_back(kBosToken);
    model.bos_id = 0;
    std::map<std::string, int> alphabet;  // ordered -> deterministic ids
    for (const auto& c : chars) alphabet.emplace(c, 0);
    for (auto& [c, id] : alphabet) {
        id = model.vocab_size();
        model.vocab.push_back(c);
    }
    if (vocab_size < model.vocab_size())
        throw InvalidArgument("bpe_train: vocab_size " + std::to_string(vocab_size) +
                              " below alphabet size + BOS = " +
                              std::to_string(model.vocab_size()));

    std::vector<int> syms;
    syms.reserve(chars.size());
    for (const auto& c : chars) syms.push_back(alphabet[c]);

    while (model.vocab_size() < vocab_size) {
        // count adjacent pairs
        std::map<std::pair<int, int>, int64_t> counts;
        for (size_t i = 0; i + 1 < syms.size(); ++i)
            ++counts[{syms[i], syms[i + 1]}];
        // best = highest count; ties -> lexicographically smallest
        // (left string, right string) pair
        int64_t best_count = 0;
        std::pair<int, int> best{-1, -1};
        std::pair<std::string, std::string> best_key;
        for (const auto& [pr, count] : counts) {
            if (count < 2) continue;
            std::pair<std::string, std::string> key{model.vocab[size_t(pr.first)],
                                                    model.vocab[size_t(pr.second)]};
            if (count > best_count || (count == best_count && key < best_key)) {
                best_count = count;
                best = pr;
                best_key = key;
            }
        }
        if (best_count < 2) break;  // no pair repeats
        int merged = model.vocab_size();
        model.vocab.push_back(best_key.first + best_key.second);
        model.merges.push_back(best);
        apply_merge(syms, best.first, best.second, merged);
    }

    for (int i = 0; i < model.vocab_size(); ++i) model.token_ids[model.vocab[size_t(i)]] = i;
    return model;
}

std::vector<TokenId> bpe_encode(const BpeModel& model, const std::string& text) {
    std::vector<int> syms;
    for (const auto& c : corpus_chars(text)) {
        auto it = model.token_ids.find(c);
        if (it == model.token_ids.end())
            throw UnknownSymbol("bpe_encode: character '" + c + "' not in model alphabet");
        syms.push_back(it->second);
    }
    for (const auto& [a, b] : model.merges) {
        auto it = model.token_ids.find(model.vocab[size_t(a)] + model.vocab[size_t(b)]);
        if (it == model.token_ids.end())
            throw InvalidArgument("bpe_encode: model merge output missing from vocab");
        apply_merge(syms, a, b, it->second);
    }
    std::vector<TokenId> ids;
    ids.reserve(syms.size());
    for (int s : syms) ids.push_back(TokenId(s));
    return ids;
}

std::string bpe_decode(const BpeModel& model, const std::vector<TokenId>& ids) {
    std::string out;
    for (TokenId id : ids) {
        if (size_t(id) >= model.vocab.size())
            throw InvalidArgument("bpe_decode: id " + std::to_string(id) + " out of range");
        out += model.vocab[size_t(id)];
    }
    return out;
}

void save_bpe(const std::string& path, const BpeModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputMissing("save_bpe: cannot open " + path);
    os << model.vocab_size() << '\n';
    for (const auto& tok : model.vocab) os << shard::escape_token(tok) << '\n';
    for (const auto& [a, b] : model.merges)
        os << shard::escape_token(model.vocab[size_t(a)]) << ' '
           << shard::escape_token(model.vocab[size_t(b)]) << '\n';
}

BpeModel load_bpe(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputMissing("load_bpe: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("load_bpe: missing vocab size");
    int vocab_size = std::stoi(line);
    BpeModel model;
    for (int i = 0; i < vocab_size; ++i) {
        if (!std::getline(is, line)) throw InvalidArgument("load_bpe: truncated vocab");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        model.vocab.push_back(shard::unescape_token(line));
    }
    if (model.vocab.empty() || model.vocab[0] != kBosToken)
        throw InvalidArgument("load_bpe: vocab must start with BOS");
    for (int i = 0; i < vocab_size; ++i) model.token_ids[model.vocab[size_t(i)]] = i;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t sp = line.find(' ');
        if (sp == std::string::npos) throw InvalidArgument("load_bpe: malformed merge line");
        std::string left = shard::unescape_token(line.substr(0, sp));
        std::string right = shard::unescape_token(line.substr(sp + 1));
        auto li = model.token_ids.find(left);
        auto ri = model.token_ids.find(right);
        if (li == model.token_ids.end() || ri == model.token_ids.end())
            throw InvalidArgument("load_bpe: merge references unknown token");
        model.merges.emplace_back(li->second, ri->second);
    }
    return model;
}

// ----------------------------- char reversal -----------------------------

std::vector<uint32_t> utf8_decode(const std::string& text) {
    std::vector<uint32_t> points;
    points.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        uint32_t cp = 0;
        int extra = 0;
        if (c < 0x80) {
            cp = c;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1Fu;
            extra = 1;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0Fu;
            extra = 2;
        } else if ((c & 0xF8) == 0xF0) {
            cp = c & 0x07u;
            extra = 3;
        } else {
            throw InvalidArgument("utf8_decode: malformed byte at offset " + std::to_string(i));
        }
        if (extra > 0 && i + size_t(extra) >= text.size())
            throw InvalidArgument("utf8_decode: truncated sequence at offset " +
                                  std::to_string(i));
        for (int k = 1; k <= extra; ++k) {
            unsigned char cc = static_cast<unsigned char>(text[i + size_t(k)]);
            if ((cc & 0xC0) != 0x80)
                throw InvalidArgument("utf8_decode: bad continuation byte at offset " +
                                      std::to_string(i + size_t(k)));
            cp = (cp << 6) | (cc & 0x3Fu);
        }
        points.push_back(cp);
        i += size_t(extra) + 1;
    }
    return points;
}

std::string utf8_encode(const std::vector<uint32_t>& points) {
    std::string out;
    out.reserve(points.size());
    for (uint32_t cp : points) {
        if (cp < 0x80) {
            out += char(cp);
        } else if (cp < 0x800) {
            out += char(0xC0 | (cp >> 6));
            out += char(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += char(0xE0 | (cp >> 12));
            out += char(0x80 | ((cp >> 6) & 0x3F));
            out += char(0x80 | (cp & 0x3F));
        } else if (cp < 0x110000) {
            out += char(0xF0 | (cp >> 18));
            out += char(0x80 | ((cp >> 12) & 0x3F));
            out += char(0x80 | ((cp >> 6) & 0x3F));
            out += char(0x80 | (cp & 0x3F));
        } else {
            throw InvalidArgument("utf8_encode: code point out of range");
        }
    }
    return out;
}

std::string reverse_chars(const std::string& text) {
    std::vector<uint32_t> points = utf8_decode(text);
    std::reverse(points.begin(), points.end());
    return utf8_encode(points);
}

}  // namespace aot::pipe
