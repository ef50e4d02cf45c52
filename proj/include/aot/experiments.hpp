#pragma once

// Experiment specifications (JSON-round-trippable) and the three synthetic
// studies: the sparsity-vs-loss scan, the sparse-update fine-tuning
// comparison, and the prime-product language probe. Each experiment is a
// pure function of its spec; multi-run experiments may fan out over a job
// pool with per-run derived rng streams so results are schedule-free.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "aot/langgen.hpp"
#include "aot/oracle.hpp"
#include "aot/trainer.hpp"

namespace aot::exp {

// ----------------------------- spec -----------------------------

enum class LanguageKind { linear, primes, mult_toy };

struct LanguageSpec {
    LanguageKind kind = LanguageKind::linear;
    // linear
    int m = 0;
    uint64_t matrix_seed = 0;
    int matrix_nnz = 0;           // 0 -> identity-equivalent (nnz = m)
    std::string matrix_file;      // overrides matrix_seed/matrix_nnz when set
    double noise_p = 0.0;
    int pad_count = 7;
    lang::NoiseScope noise_scope = lang::NoiseScope::all;
    // primes
    int k = 0;
};

struct ModelSpec {
    std::string name = "nano";  // named size, or "custom"
    double dropout = 0.1;
    int context = 0;  // 0 -> fit the language exactly
    int mlp_ratio = 4;
    int d_embed = 0, n_heads = 0, n_layers = 0;  // used when name == "custom"
};

struct TrainingSpec {
    int batch_size = 64;
    long steps = 1000;
    double base_lr = 1e-4;
    long warmup_steps = 100;
    long restart_T0 = 0;  // 0 -> single cosine cycle spanning the run
    double restart_mult = 1.0;
    double floor_lr = 0.0;
    double weight_decay = 0.01;
    long eval_every = 0;
    long n_validation = 2048;
    long val_eval_cap = 2048;
    long log_every = 50;
};

struct SeedsSpec {
    uint64_t data = 1;
    uint64_t init = 2;
    uint64_t dropout = 3;
    std::vector<uint64_t> runs;  // multi-seed experiments
};

struct ScanSpec {
    std::vector<int> k_offsets;  // matrix nnz = m + k
};

struct UpdateSpec {
    std::vector<int> e_values{4, 6};
    long prior_steps = 3000;
    long fine_steps = 400;
    double fine_lr = 8e-6;
    long fine_warmup = 10;
};

struct ExperimentSpec {
    LanguageSpec language;
    ModelSpec model;
    TrainingSpec training;
    SeedsSpec seeds;
    std::vector<Direction> directions{Direction::fw, Direction::bw};
    ScanSpec scan;
    UpdateSpec update;
    std::string out;
};

// Strict parse: unknown keys anywhere are rejected.
ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& spec);
uint64_t spec_hash(const ExperimentSpec& spec);

// ----------------------------- language resolution -----------------------------

struct ResolvedLanguage {
    LanguageKind kind;
    lang::Vocab vocab;
    int payload_len = 0;
    double entropy_floor = 0.0;  // total nats per sentence (lower bound when noisy)
    std::optional<lang::LinearLangSpec> linear;
    std::optional<lang::PrimeLangSpec> primes;
    std::optional<lang::FiniteLanguage> toy;

    lang::Sentence sample(Rng& rng) const;
};

ResolvedLanguage resolve_language(const LanguageSpec& ls);

nn::TransformerConfig resolve_model(const ModelSpec& ms, int vocab_size, int needed_context);

// count sentences, sentence i drawn from derive_rng(seed, i); then
// Fisher-Yates shuffled and split with n_validation withheld.
std::pair<pipe::SentenceSet, pipe::SentenceSet> build_dataset(const ResolvedLanguage& rl,
                                                              size_t count, uint64_t seed,
                                                              size_t n_validation);

// ----------------------------- experiments -----------------------------

struct TrainPairResult {
    train::RunLog fw, bw;
    double entropy_floor = 0.0;
    int payload_len = 0;
};

TrainPairResult run_train_pair(const ExperimentSpec& spec);

struct ScanRun {
    int k_offset = 0;
    uint64_t seed = 0;
    Direction direction = Direction::fw;
    int realized_nnz = 0;
    double final_loss = 0.0;  // mean nats per predicted token
    train::RunLog log;
};

struct ScanResult {
    std::vector<ScanRun> runs;
    std::vector<std::pair<int, double>> mean_loss_by_k;  // first direction only
    double spearman_rho = 0.0;
    double p_value = 1.0;  // one-sided permutation test of rho > 0
};

ScanResult sparsity_scan_experiment(const ExperimentSpec& spec, int jobs = 1);

struct UpdateRun {
    int e = 0;
    uint64_t seed = 0;
    Direction direction = Direction::fw;
    double final_loss = 0.0;
    train::RunLog log;
};

struct UpdateCell {
    int e = 0;
    Direction direction = Direction::fw;
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

struct UpdateResult {
    std::vector<UpdateRun> runs;
    std::vector<UpdateCell> cells;
    train::RunLog prior_fw, prior_bw;
};

UpdateResult sparse_update_experiment(const ExperimentSpec& spec, int jobs = 1);

struct PrimeFieldRow {
    std::string field;
    double fw_nats = 0.0;  // summed over field positions, final validation
    double bw_nats = 0.0;
};

struct PrimeResult {
    TrainPairResult pair;
    std::vector<PrimeFieldRow> fields;
    oracle::PrimeEntropyReport report;
};

PrimeResult prime_experiment(const ExperimentSpec& spec, int jobs = 1);

// ----------------------------- statistics -----------------------------

double mean_of(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);
// Spearman rank correlation with average ranks on ties.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);
// One-sided permutation p-value for rho > 0; exact when n! <= 40320,
// otherwise 20000 random permutations with a fixed seed.
double spearman_permutation_pvalue(const std::vector<double>& x, const std::vector<double>& y);

// Runs fn(0..count-1) over `jobs` threads; results must be written to
// per-index slots so scheduling cannot affect outputs.
void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn);

}  // namespace aot::exp
