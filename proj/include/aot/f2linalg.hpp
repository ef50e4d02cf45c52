#pragma once

// Bit-exact linear algebra over GF(2). Matrices are square and bit-packed
// row-major (64 entries per word). Includes random sparse-invertible
// generation and invertibility-preserving perturbation, plus the
// inverse-sparsity scan used to study how inversion destroys sparsity.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aot/common.hpp"

namespace aot::f2 {

// Bit vector over GF(2), packed little-endian within 64-bit words.
class F2Vec {
   public:
    F2Vec() = default;
    explicit F2Vec(int n) : n_(n), w_((n + 63) / 64, 0) {
        if (n < 1) throw InvalidArgument("F2Vec: length must be >= 1");
    }

    static F2Vec from_string(const std::string& bits);  // e.g. "101"
    std::string to_string() const;

    int size() const { return n_; }
    int get(int i) const { return int((w_[size_t(i) >> 6] >> (i & 63)) & 1u); }
    void set(int i, int v) {
        uint64_t mask = 1ULL << (i & 63);
        if (v)
            w_[size_t(i) >> 6] |= mask;
        else
            w_[size_t(i) >> 6] &= ~mask;
    }

    const std::vector<uint64_t>& words() const { return w_; }
    bool operator==(const F2Vec& o) const { return n_ == o.n_ && w_ == o.w_; }

   private:
    int n_ = 0;
    std::vector<uint64_t> w_;
};

// Square bit matrix over GF(2).
class F2Matrix {
   public:
    F2Matrix() = default;
    explicit F2Matrix(int n);

    static F2Matrix identity(int n);
    static F2Matrix from_rows(const std::vector<std::string>& rows);  // "0"/"1" chars

    int dim() const { return n_; }
    int get(int r, int c) const {
        return int((w_[size_t(r) * wpr_ + (size_t(c) >> 6)] >> (c & 63)) & 1u);
    }
    void set(int r, int c, int v) {
        uint64_t mask = 1ULL << (c & 63);
        size_t idx = size_t(r) * wpr_ + (size_t(c) >> 6);
        if (v)
            w_[idx] |= mask;
        else
            w_[idx] &= ~mask;
    }
    void flip(int r, int c) { w_[size_t(r) * wpr_ + (size_t(c) >> 6)] ^= 1ULL << (c & 63); }

    bool operator==(const F2Matrix& o) const { return n_ == o.n_ && w_ == o.w_; }

    // Text serialization: first line n, then n lines of '0'/'1' characters.
    std::string serialize() const;
    static F2Matrix deserialize(const std::string& text);
    void save(const std::string& path) const;
    static F2Matrix load(const std::string& path);

   private:
    friend F2Vec mat_vec_mul(const F2Matrix&, const F2Vec&);
    friend F2Matrix mat_mul(const F2Matrix&, const F2Matrix&);
    friend F2Matrix invert(const F2Matrix&);
    friend bool is_invertible(const F2Matrix&);

    int n_ = 0;
    int wpr_ = 0;  // words per row
    std::vector<uint64_t> w_;
};

struct SparsityStats {
    int64_t nnz = 0;
    double sparsity = 0.0;  // fraction of zero entries, 1 - nnz/n^2
};

F2Matrix mat_identity(int n);

// y_i = XOR_j A_ij & x_j
F2Vec mat_vec_mul(const F2Matrix& a, const F2Vec& x);

F2Matrix mat_mul(const F2Matrix& a, const F2Matrix& b);

// Gauss-Jordan elimination with first-nonzero-row pivoting (deterministic).
// Throws SingularError carrying the achieved rank when rank < n.
F2Matrix invert(const F2Matrix& a);

bool is_invertible(const F2Matrix& a);

SparsityStats sparsity(const F2Matrix& a);

inline constexpr int kRetryBudget = 1000;

// Starts from the identity and flips k-n distinct positions chosen uniformly
// over the whole matrix (diagonal included, so realized nnz may be below k);
// resamples until the result is invertible. Throws GenerationFailure after
// kRetryBudget attempts.
F2Matrix gen_sparse_invertible(int n, int k, Rng& rng);

// Flips exactly e distinct entries of an invertible matrix, resampling the
// flip set until the result is invertible.
F2Matrix perturb_invertible(const F2Matrix& m, int e, Rng& rng);

struct ScanRow {
    int k = 0;
    double mean_nnz_inverse = 0.0;
    double std_nnz_inverse = 0.0;  // sample std (n-1 denominator)
    int trials = 0;
};

// For each k, generates `trials` sparse invertible matrices (per-trial rng
// derived from (seed, k, trial) so results are schedule-independent) and
// averages the nnz of their inverses.
std::vector<ScanRow> sparsity_scan(int n, const std::vector<int>& k_values, int trials,
                                   uint64_t seed);

// CSV: k,mean_nnz_inverse,std_nnz_inverse,trials
std::string scan_to_csv(const std::vector<ScanRow>& rows);

}  // namespace aot::f2
