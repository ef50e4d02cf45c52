#include "aot/f2linalg.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace aot::f2 {

F2Vec F2Vec::from_string(const std::string& bits) {
    if (bits.empty()) throw InvalidArgument("F2Vec::from_string: empty string");
    F2Vec v(int(bits.size()));
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1')
            v.set(int(i), 1);
        else if (bits[i] != '0')
            throw InvalidArgument("F2Vec::from_string: expected '0'/'1'");
    }
    return v;
}

std::string F2Vec::to_string() const {
    std::string s(size_t(n_), '0');
    for (int i = 0; i < n_; ++i)
        if (get(i)) s[size_t(i)] = '1';
    return s;
}

F2Matrix::F2Matrix(int n) : n_(n), wpr_((n + 63) / 64), w_(size_t(n) * size_t((n + 63) / 64), 0) {
    if (n < 1) throw InvalidArgument("F2Matrix: dimension must be >= 1");
}

F2Matrix F2Matrix::identity(int n) {
    F2Matrix m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1);
    return m;
}

F2Matrix F2Matrix::from_rows(const std::vector<std::string>& rows) {
    if (rows.empty()) throw InvalidArgument("F2Matrix::from_rows: no rows");
    int n = int(rows.size());
    F2Matrix m(n);
    for (int r = 0; r < n; ++r) {
        if (int(rows[size_t(r)].size()) != n)
            throw InvalidArgument("F2Matrix::from_rows: matrix must be square");
        for (int c = 0; c < n; ++c) {
            char ch = rows[size_t(r)][size_t(c)];
            if (ch == '1')
                m.set(r, c, 1);
            else if (ch != '0')
                throw InvalidArgument("F2Matrix::from_rows: expected '0'/'1'");
        }
    }
    return m;
}

std::string F2Matrix::serialize() const {
    std::ostringstream os;
    os << n_ << '\n';
    for (int r = 0; r < n_; ++r) {
        for (int c = 0; c < n_; ++c) os << (get(r, c) ? '1' : '0');
        os << '\n';
    }
    return os.str();
}

F2Matrix F2Matrix::deserialize(const std::string& text) {
    std::istringstream is(text);
    int n = 0;
    if (!(is >> n) || n < 1) throw InvalidArgument("F2Matrix::deserialize: bad dimension");
    std::vector<std::string> rows;
    std::string line;
    std::getline(is, line);  // eat newline after n
    while (int(rows.size()) < n && std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (int(rows.size()) != n) throw InvalidArgument("F2Matrix::deserialize: missing rows");
    return from_rows(rows);
}

void F2Matrix::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputMissing("cannot open for writing: " + path);
    os << serialize();
}

F2Matrix F2Matrix::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputMissing("cannot open matrix file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return deserialize(ss.str());
}

F2Matrix mat_identity(int n) {
    if (n < 1) throw InvalidArgument("mat_identity: dimension must be >= 1");
    return F2Matrix::identity(n);
}

F2Vec mat_vec_mul(const F2Matrix& a, const F2Vec& x) {
    if (x.size() != a.dim()) throw InvalidArgument("mat_vec_mul: dimension mismatch");
    F2Vec y(a.dim());
    const auto& xw = x.words();
    for (int r = 0; r < a.n_; ++r) {
        uint64_t acc = 0;
        const uint64_t* row = &a.w_[size_t(r) * a.wpr_];
        for (int w = 0; w < a.wpr_; ++w) acc ^= row[w] & xw[size_t(w)];
        y.set(r, std::popcount(acc) & 1);
    }
    return y;
}

F2Matrix mat_mul(const F2Matrix& a, const F2Matrix& b) {
    if (a.dim() != b.dim()) throw InvalidArgument("mat_mul: dimension mismatch");
    int n = a.dim();
    F2Matrix c(n);
    // c_row = XOR of b rows selected by bits of a_row
    for (int r = 0; r < n; ++r) {
        uint64_t* crow = &c.w_[size_t(r) * c.wpr_];
        for (int k = 0; k < n; ++k) {
            if (a.get(r, k)) {
                const uint64_t* brow = &b.w_[size_t(k) * b.wpr_];
                for (int w = 0; w < b.wpr_; ++w) crow[w] ^= brow[w];
            }
        }
    }
    return c;
}

F2Matrix invert(const F2Matrix& a) {
    int n = a.dim();
    F2Matrix left = a;                      // reduced to I
    F2Matrix right = F2Matrix::identity(n);  // accumulates A^-1
    int rank = 0;
    for (int col = 0; col < n; ++col) {
        // first row at or below `rank` with a 1 in this column
        int pivot = -1;
        for (int r = rank; r < n; ++r) {
            if (left.get(r, col)) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0) continue;
        if (pivot != rank) {
            for (int w = 0; w < left.wpr_; ++w)
                std::swap(left.w_[size_t(pivot) * left.wpr_ + w],
                          left.w_[size_t(rank) * left.wpr_ + w]);
            for (int w = 0; w < right.wpr_; ++w)
                std::swap(right.w_[size_t(pivot) * right.wpr_ + w],
                          right.w_[size_t(rank) * right.wpr_ + w]);
        }
        for (int r = 0; r < n; ++r) {
            if (r != rank && left.get(r, col)) {
                for (int w = 0; w < left.wpr_; ++w)
                    left.w_[size_t(r) * left.wpr_ + w] ^= left.w_[size_t(rank) * left.wpr_ + w];
                for (int w = 0; w < right.wpr_; ++w)
                    right.w_[size_t(r) * right.wpr_ + w] ^=
                        right.w_[size_t(rank) * right.wpr_ + w];
            }
        }
        ++rank;
    }
    if (rank < n)
        throw SingularError(rank, "invert: singular matrix, rank " + std::to_string(rank) +
                                      " < " + std::to_string(n));
    return right;
}

bool is_invertible(const F2Matrix& a) {
    // rank via forward elimination only
    F2Matrix m = a;
    int n = m.dim();
    int rank = 0;
    for (int col = 0; col < n && rank < n; ++col) {
        int pivot = -1;
        for (int r = rank; r < n; ++r) {
            if (m.get(r, col)) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0) return false;  // column with no pivot: rank deficient
        if (pivot != rank) {
            for (int w = 0; w < (n + 63) / 64; ++w)
                std::swap(m.w_[size_t(pivot) * m.wpr_ + w], m.w_[size_t(rank) * m.wpr_ + w]);
        }
        for (int r = rank + 1; r < n; ++r) {
            if (m.get(r, col)) {
                for (int w = 0; w < m.wpr_; ++w)
                    m.w_[size_t(r) * m.wpr_ + w] ^= m.w_[size_t(rank) * m.wpr_ + w];
            }
        }
        ++rank;
    }
    return rank == n;
}

SparsityStats sparsity(const F2Matrix& a) {
    int64_t nnz = 0;
    int n = a.dim();
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) nnz += a.get(r, c);
    SparsityStats s;
    s.nnz = nnz;
    s.sparsity = 1.0 - double(nnz) / (double(n) * double(n));
    return s;
}

namespace {

// k distinct positions in [0, n^2), sampled without replacement.
std::set<int64_t> sample_positions(int64_t universe, int64_t count, Rng& rng) {
    std::set<int64_t> picked;
    while (int64_t(picked.size()) < count)
        picked.insert(int64_t(uniform_below(rng, uint64_t(universe))));
    return picked;
}

}  // namespace

F2Matrix gen_sparse_invertible(int n, int k, Rng& rng) {
    if (n < 1) throw InvalidArgument("gen_sparse_invertible: dimension must be >= 1");
    if (k < n) throw InvalidArgument("gen_sparse_invertible: k must be >= n");
    int64_t flips = k - n;
    int64_t universe = int64_t(n) * int64_t(n);
    if (flips > universe)
        throw InvalidArgument("gen_sparse_invertible: k - n exceeds matrix size");
    for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
        F2Matrix m = F2Matrix::identity(n);
        for (int64_t pos : sample_positions(universe, flips, rng))
            m.flip(int(pos / n), int(pos % n));
        if (is_invertible(m)) return m;
    }
    throw GenerationFailure("gen_sparse_invertible: no invertible matrix after " +
                            std::to_string(kRetryBudget) + " attempts (n=" + std::to_string(n) +
                            ", k=" + std::to_string(k) + ")");
}

F2Matrix perturb_invertible(const F2Matrix& m, int e, Rng& rng) {
    int n = m.dim();
    int64_t universe = int64_t(n) * int64_t(n);
    if (e < 0 || int64_t(e) > universe)
        throw InvalidArgument("perturb_invertible: e must be in [0, n^2]");
    if (!is_invertible(m)) throw InvalidArgument("perturb_invertible: input must be invertible");
    if (e == 0) return m;
    for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
        F2Matrix p = m;
        for (int64_t pos : sample_positions(universe, e, rng))
            p.flip(int(pos / n), int(pos % n));
        if (is_invertible(p)) return p;
    }
    throw GenerationFailure("perturb_invertible: no invertible perturbation after " +
                            std::to_string(kRetryBudget) + " attempts (n=" + std::to_string(n) +
                            ", e=" + std::to_string(e) + ")");
}

std::vector<ScanRow> sparsity_scan(int n, const std::vector<int>& k_values, int trials,
                                   uint64_t seed) {
    if (trials < 1) throw InvalidArgument("sparsity_scan: trials must be >= 1");
    for (int k : k_values)
        if (k < n) throw InvalidArgument("sparsity_scan: all k must be >= n");
    std::vector<ScanRow> rows;
    rows.reserve(k_values.size());
    for (int k : k_values) {
        double sum = 0.0, sumsq = 0.0;
        for (int t = 0; t < trials; ++t) {
            Rng trial_rng = derive_rng(seed, uint64_t(k), uint64_t(t));
            F2Matrix m = gen_sparse_invertible(n, k, trial_rng);
            double nnz_inv = double(sparsity(invert(m)).nnz);
            sum += nnz_inv;
            sumsq += nnz_inv * nnz_inv;
        }
        ScanRow row;
        row.k = k;
        row.trials = trials;
        row.mean_nnz_inverse = sum / trials;
        double var = trials > 1 ? (sumsq - sum * sum / trials) / (trials - 1) : 0.0;
        row.std_nnz_inverse = std::sqrt(std::max(0.0, var));
        rows.push_back(row);
    }
    return rows;
}

std::string scan_to_csv(const std::vector<ScanRow>& rows) {
    std::ostringstream os;
    os << "k,mean_nnz_inverse,std_nnz_inverse,trials\n";
    os.precision(12);
    for (const auto& r : rows)
        os << r.k << ',' << r.mean_nnz_inverse << ',' << r.std_nnz_inverse << ',' << r.trials
           << '\n';
    return os.str();
}

}  // namespace aot::f2
