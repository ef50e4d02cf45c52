#pragma once

// Exact information-theoretic computations over explicit finite measures:
// per-position conditional entropies read forward or backward, per-sentence
// log-perplexity decompositions, the KL + entropy split of an expected loss,
// and the field-level entropy accounting of the prime-product language.
// Everything here is exhaustive enumeration; these are ground-truth oracles,
// never approximations.

#include <map>
#include <string>
#include <vector>

#include "aot/common.hpp"
#include "aot/langgen.hpp"

namespace aot::oracle {

using lang::FiniteLanguage;
using lang::Sentence;
using lang::TokenId;

struct EntropyDecomposition {
    Direction direction = Direction::fw;
    // expected conditional entropy per token position, indexed in natural
    // (forward) order regardless of direction
    std::vector<double> per_position;
    double total = 0.0;
};

// Conditional distributions of a measure at one position along a reading
// direction: context (prefix for FW, suffix for BW, in natural order) ->
// distribution over the vocabulary. Contexts are exactly those with
// positive measure.
struct ConditionalTable {
    Direction direction = Direction::fw;
    int position = 0;
    std::map<Sentence, std::vector<double>> dist;
};

// One table per position; positions in natural order.
using ModelConditionals = std::vector<ConditionalTable>;

// Expected -ln P(token | observed context) at every position, by exhaustive
// enumeration over the support. Throws on an empty language or a support
// larger than `support_cap`.
EntropyDecomposition exact_decomposition(const FiniteLanguage& lang, Direction dir,
                                         size_t support_cap = lang::kDefaultSupportCap);

// -ln of each true conditional probability along the direction for one
// sentence; positions reported in natural order. Throws NotInSupport if the
// sentence has zero measure.
std::vector<double> sentence_decomposition(const FiniteLanguage& lang, const Sentence& s,
                                           Direction dir,
                                           size_t support_cap = lang::kDefaultSupportCap);

struct ChainRuleReport {
    double h_fw_total = 0.0;
    double h_bw_total = 0.0;
    double difference = 0.0;  // |h_fw_total - h_bw_total|
};

// Both totals equal the Shannon entropy of the measure; the difference is a
// numerical-consistency diagnostic.
ChainRuleReport chain_rule_check(const FiniteLanguage& lang,
                                 size_t support_cap = lang::kDefaultSupportCap);

// Shannon entropy -sum p ln p of the measure itself.
double shannon_entropy(const FiniteLanguage& lang);

// True conditionals of the measure (the tables a perfect model would hold).
ModelConditionals true_conditionals(const FiniteLanguage& lang, Direction dir,
                                    size_t support_cap = lang::kDefaultSupportCap);

struct KlDecomposition {
    double expected_loss = 0.0;
    double d_kl = 0.0;
    double entropy = 0.0;
};

// Expected cross-entropy of a model's conditionals under the true measure,
// split as loss = D_KL + H. Throws InfiniteLoss if the model puts zero mass
// on a supported outcome.
KlDecomposition kl_decomposition(const ModelConditionals& model, const FiniteLanguage& lang,
                                 Direction dir);

struct PrimeEntropyReport {
    int k = 0;
    int64_t pi = 0;        // number of primes < 10^k
    double ln_pi = 0.0;    // ln pi
    double h_p = 0.0;      // entropy of the smaller prime
    double h_q_given_p = 0.0;
    double h_pair = 0.0;   // = ln C(pi, 2) exactly
};

// Field-level entropies of the prime-product language with the pair measure
// uniform over {p < q}: P(p = i-th prime) = (pi - i)/C, q uniform among the
// larger primes.
PrimeEntropyReport prime_entropy_report(int k);

// CSV: position,direction,nats
std::string decomposition_to_csv(const EntropyDecomposition& d);
std::string prime_report_to_json(const PrimeEntropyReport& r);

// Exact total sentence entropy (nats) for the p=0 linear language, and a
// sound lower bound for p>0 (uniform x plus the independent bit noise on
// the y segment); used as the information floor for training runs.
double linear_entropy_floor(const lang::LinearLangSpec& spec);

// Total sentence entropy of the prime language: ln C(pi,2).
double prime_entropy_floor(int k);

}  // namespace aot::oracle
