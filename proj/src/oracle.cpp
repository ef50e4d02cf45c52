#include "aot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace aot::oracle {

namespace {

void check_cap(const FiniteLanguage& lang, size_t cap) {
    lang.validate();
    if (lang.support_size() > cap)
        throw ResourceLimit("oracle: support size " + std::to_string(lang.support_size()) +
                            " exceeds enumeration cap " + std::to_string(cap));
}

FiniteLanguage reversed_language(const FiniteLanguage& lang) {
    FiniteLanguage rev = lang;
    for (auto& s : rev.sentences) std::reverse(s.begin(), s.end());
    return rev;
}

// Support sorted lexicographically; lcp[i] = common-prefix length between
// sorted sentence i and i-1. Prefix runs at any level are then contiguous.
struct SortedSupport {
    std::vector<int> order;   // sorted index -> sentence index
    std::vector<int> lcp;     // per sorted index
    const FiniteLanguage* lang;
};

SortedSupport sort_support(const FiniteLanguage& lang) {
    SortedSupport ss;
    ss.lang = &lang;
    ss.order.resize(lang.support_size());
    std::iota(ss.order.begin(), ss.order.end(), 0);
    std::sort(ss.order.begin(), ss.order.end(), [&](int a, int b) {
        return lang.sentences[size_t(a)] < lang.sentences[size_t(b)];
    });
    ss.lcp.assign(lang.support_size(), 0);
    int n = lang.length();
    for (size_t i = 1; i < ss.order.size(); ++i) {
        const Sentence& a = lang.sentences[size_t(ss.order[i - 1])];
        const Sentence& b = lang.sentences[size_t(ss.order[i])];
        int l = 0;
        while (l < n && a[size_t(l)] == b[size_t(l)]) ++l;
        ss.lcp[i] = l;
    }
    return ss;
}

// Mass of the level-l prefix run containing each sorted sentence.
std::vector<double> run_masses(const SortedSupport& ss, int level) {
    const auto& probs = ss.lang->probabilities;
    size_t count = ss.order.size();
    std::vector<double> mass(count, 0.0);
    size_t start = 0;
    while (start < count) {
        size_t end = start + 1;
        double total = probs[size_t(ss.order[start])];
        while (end < count && ss.lcp[end] >= level) {
            total += probs[size_t(ss.order[end])];
            ++end;
        }
        for (size_t i = start; i < end; ++i) mass[i] = total;
        start = end;
    }
    return mass;
}

// Forward per-position expected conditional entropies of a sorted support.
std::vector<double> forward_decomposition(const SortedSupport& ss) {
    const auto& probs = ss.lang->probabilities;
    int n = ss.lang->length();
    std::vector<double> per_position(size_t(n), 0.0);
    std::vector<double> prev = run_masses(ss, 0);  // all 1.0
    for (int i = 0; i < n; ++i) {
        std::vector<double> next = run_masses(ss, i + 1);
        double h = 0.0;
        for (size_t j = 0; j < ss.order.size(); ++j)
            h += probs[size_t(ss.order[j])] * (std::log(prev[j]) - std::log(next[j]));
        per_position[size_t(i)] = std::max(0.0, h);
        prev = std::move(next);
    }
    return per_position;
}

}  // namespace

EntropyDecomposition exact_decomposition(const FiniteLanguage& lang, Direction dir,
                                         size_t support_cap) {
    check_cap(lang, support_cap);
    EntropyDecomposition d;
    d.direction = dir;
    if (dir == Direction::fw) {
        d.per_position = forward_decomposition(sort_support(lang));
    } else {
        // BW on the original equals FW on the token-reversed language.
        FiniteLanguage rev = reversed_language(lang);
        d.per_position = forward_decomposition(sort_support(rev));
        std::reverse(d.per_position.begin(), d.per_position.end());
    }
    d.total = std::accumulate(d.per_position.begin(), d.per_position.end(), 0.0);
    return d;
}

std::vector<double> sentence_decomposition(const FiniteLanguage& lang, const Sentence& s,
                                           Direction dir, size_t support_cap) {
    check_cap(lang, support_cap);
    if (dir == Direction::bw) {
        FiniteLanguage rev = reversed_language(lang);
        Sentence rs(s.rbegin(), s.rend());
        auto nats = sentence_decomposition(rev, rs, Direction::fw, support_cap);
        std::reverse(nats.begin(), nats.end());
        return nats;
    }
    int n = lang.length();
    if (int(s.size()) != n) throw NotInSupport("sentence_decomposition: wrong length");
    SortedSupport ss = sort_support(lang);
    auto it = std::find(lang.sentences.begin(), lang.sentences.end(), s);
    if (it == lang.sentences.end())
        throw NotInSupport("sentence_decomposition: sentence has zero measure");
    int target = int(it - lang.sentences.begin());
    size_t pos = 0;
    while (ss.order[pos] != target) ++pos;

    std::vector<double> nats(size_t(n), 0.0);
    std::vector<double> prev = run_masses(ss, 0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> next = run_masses(ss, i + 1);
        nats[size_t(i)] = std::max(0.0, std::log(prev[pos]) - std::log(next[pos]));
        prev = std::move(next);
    }
    return nats;
}

ChainRuleReport chain_rule_check(const FiniteLanguage& lang, size_t support_cap) {
    ChainRuleReport r;
    r.h_fw_total = exact_decomposition(lang, Direction::fw, support_cap).total;
    r.h_bw_total = exact_decomposition(lang, Direction::bw, support_cap).total;
    r.difference = std::abs(r.h_fw_total - r.h_bw_total);
    return r;
}

double shannon_entropy(const FiniteLanguage& lang) {
    double h = 0.0;
    for (double p : lang.probabilities) h -= p * std::log(p);
    return h;
}

ModelConditionals true_conditionals(const FiniteLanguage& lang, Direction dir,
                                    size_t support_cap) {
    check_cap(lang, support_cap);
    int n = lang.length();
    int v = lang.vocab_size;
    ModelConditionals tables;
    tables.resize(size_t(n));
    for (int i = 0; i < n; ++i) {
        tables[size_t(i)].direction = dir;
        tables[size_t(i)].position = i;
    }
    // context mass and context+token mass accumulated per sentence
    for (int i = 0; i < n; ++i) {
        std::map<Sentence, double> ctx_mass;
        std::map<Sentence, std::vector<double>> tok_mass;
        for (size_t j = 0; j < lang.support_size(); ++j) {
            const Sentence& s = lang.sentences[j];
            Sentence ctx = dir == Direction::fw
                               ? Sentence(s.begin(), s.begin() + i)
                               : Sentence(s.begin() + i + 1, s.end());
            ctx_mass[ctx] += lang.probabilities[j];
            auto& row = tok_mass[ctx];
            if (row.empty()) row.assign(size_t(v), 0.0);
            row[size_t(s[size_t(i)])] += lang.probabilities[j];
        }
        for (auto& [ctx, row] : tok_mass) {
            double total = ctx_mass[ctx];
            for (double& x : row) x /= total;
            tables[size_t(i)].dist.emplace(ctx, std::move(row));
        }
    }
    return tables;
}

KlDecomposition kl_decomposition(const ModelConditionals& model, const FiniteLanguage& lang,
                                 Direction dir) {
    lang.validate();
    int n = lang.length();
    if (int(model.size()) != n)
        throw InvalidArgument("kl_decomposition: model must provide one table per position");
    for (const auto& table : model) {
        if (table.direction != dir)
            throw InvalidArgument("kl_decomposition: table direction mismatch");
        for (const auto& [ctx, row] : table.dist) {
            double total = std::accumulate(row.begin(), row.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-12)
                throw InvalidArgument("kl_decomposition: model distribution not normalized");
        }
    }
    double loss = 0.0;
    for (size_t j = 0; j < lang.support_size(); ++j) {
        const Sentence& s = lang.sentences[j];
        for (int i = 0; i < n; ++i) {
            Sentence ctx = dir == Direction::fw
                               ? Sentence(s.begin(), s.begin() + i)
                               : Sentence(s.begin() + i + 1, s.end());
            auto it = model[size_t(i)].dist.find(ctx);
            if (it == model[size_t(i)].dist.end())
                throw InfiniteLoss("kl_decomposition: model has no distribution for a supported "
                                   "context at position " +
                                   std::to_string(i));
            double q = it->second[size_t(s[size_t(i)])];
            if (q <= 0.0)
                throw InfiniteLoss("kl_decomposition: model assigns zero probability to a "
                                   "supported outcome at position " +
                                   std::to_string(i));
            loss -= lang.probabilities[j] * std::log(q);
        }
    }
    KlDecomposition out;
    out.expected_loss = loss;
    out.entropy = shannon_entropy(lang);
    out.d_kl = loss - out.entropy;
    if (out.d_kl < -1e-9)
        throw InternalConsistencyError("kl_decomposition: negative KL divergence");
    out.d_kl = std::max(0.0, out.d_kl);
    return out;
}

PrimeEntropyReport prime_entropy_report(int k) {
    if (k < 1) throw InvalidArgument("prime_entropy_report: k must be >= 1");
    lang::PrimeLangSpec spec = lang::PrimeLangSpec::make(k);
    PrimeEntropyReport r;
    r.k = k;
    r.pi = int64_t(spec.primes.size());
    double pi = double(r.pi);
    double pairs = pi * (pi - 1.0) / 2.0;
    r.ln_pi = std::log(pi);
    r.h_pair = std::log(pairs);
    for (int64_t i = 1; i < r.pi; ++i) {
        double p_i = double(r.pi - i) / pairs;  // i-th smallest prime as p
        r.h_p -= p_i * std::log(p_i);
        r.h_q_given_p += p_i * std::log(double(r.pi - i));  // q uniform above p
    }
    return r;
}

std::string decomposition_to_csv(const EntropyDecomposition& d) {
    std::ostringstream os;
    os << "position,direction,nats\n";
    os.precision(12);
    for (size_t i = 0; i < d.per_position.size(); ++i)
        os << i << ',' << to_string(d.direction) << ',' << d.per_position[i] << '\n';
    return os.str();
}

std::string prime_report_to_json(const PrimeEntropyReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\n"
                  "  \"k\": %d,\n"
                  "  \"pi\": %lld,\n"
                  "  \"ln_pi\": %.12g,\n"
                  "  \"H_p\": %.12g,\n"
                  "  \"H_q_given_p\": %.12g,\n"
                  "  \"H_pair\": %.12g\n"
                  "}\n",
                  r.k, static_cast<long long>(r.pi), r.ln_pi, r.h_p, r.h_q_given_p, r.h_pair);
    return std::string(buf);
}

double linear_entropy_floor(const lang::LinearLangSpec& spec) {
    spec.validate();
    double h = spec.m * std::log(2.0);
    if (spec.p > 0.0) {
        double hp = -spec.p * std::log(spec.p) - (1.0 - spec.p) * std::log(1.0 - spec.p);
        h += spec.m * hp;  // H(y-noise); lower bound on H(y | x tokens)
    }
    return h;
}

double prime_entropy_floor(int k) { return prime_entropy_report(k).h_pair; }

}  // namespace aot::oracle
