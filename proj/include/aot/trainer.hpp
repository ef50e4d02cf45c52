#pragma once

// Training protocol: AdamW with decoupled weight decay, warmup plus cosine
// annealing with warm restarts, and paired FW/BW runs that consume
// identical batch and dropout streams so the prediction order is the only
// difference between the two models.

#include <optional>
#include <string>
#include <vector>

#include "aot/common.hpp"
#include "aot/datapipe.hpp"
#include "aot/nn/transformer.hpp"

namespace aot::train {

// ----------------------------- optimizer -----------------------------

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // applied to rank-2 linear weights only
};

template <class T>
class AdamW {
   public:
    AdamW(std::vector<typename nn::TransformerParams<T>::NamedTensor> named, AdamWConfig hp)
        : hp_(hp) {
        for (auto& nt : named) {
            Slot s;
            s.tensor = nt.tensor;
            s.decay = nt.decay;
            s.m.assign(nt.tensor->val.size(), T(0));
            s.v.assign(nt.tensor->val.size(), T(0));
            slots_.push_back(std::move(s));
        }
    }

    // Decoupled decay first (param -= lr*wd*param), then the bias-corrected
    // adaptive step. Throws NumericFault on a non-finite gradient.
    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(hp_.beta1, double(t_));
        const double bc2 = 1.0 - std::pow(hp_.beta2, double(t_));
        for (auto& s : slots_) {
            s.tensor->ensure_grad();
            auto& val = s.tensor->val;
            auto& grad = s.tensor->grad;
            if (s.decay && hp_.weight_decay > 0.0)
                for (T& x : val) x -= T(lr * hp_.weight_decay) * x;
            for (size_t i = 0; i < val.size(); ++i) {
                double g = double(grad[i]);
                if (!std::isfinite(g)) throw NumericFault("adamw_step: non-finite gradient");
                double m = hp_.beta1 * double(s.m[i]) + (1.0 - hp_.beta1) * g;
                double v = hp_.beta2 * double(s.v[i]) + (1.0 - hp_.beta2) * g * g;
                s.m[i] = T(m);
                s.v[i] = T(v);
                double mhat = m / bc1;
                double vhat = v / bc2;
                val[i] -= T(lr * mhat / (std::sqrt(vhat) + hp_.eps));
            }
        }
    }

    void zero_grad() {
        for (auto& s : slots_) s.tensor->zero_grad();
    }
    int64_t step_count() const { return t_; }

   private:
    struct Slot {
        nn::Tensor<T>* tensor;
        bool decay;
        std::vector<T> m, v;
    };
    std::vector<Slot> slots_;
    AdamWConfig hp_;
    int64_t t_ = 0;
};

// ----------------------------- lr schedule -----------------------------

struct LrSchedule {
    double base_lr = 1e-4;
    long warmup_steps = 0;
    long restart_T0 = 0;       // first cosine cycle length; 0 = rest of the run
    double restart_mult = 1.0; // cycle length multiplier at each restart
    double floor_lr = 0.0;
    long total_steps = 0;      // needed to resolve restart_T0 == 0
};

// Linear ramp 0 -> base_lr over warmup_steps, then cosine decay within each
// restart cycle; lr jumps back to base_lr at every restart.
double lr_at(long step, const LrSchedule& sched);

// ----------------------------- run logs -----------------------------

struct LogRow {
    long step = 0;
    double lr = 0.0;
    std::string split;  // "train" or "val"
    double loss = 0.0;
    std::vector<double> per_position;  // natural sentence order; val rows only
};

struct RunLog {
    Direction direction = Direction::fw;
    uint64_t config_hash = 0;
    uint64_t seed_init = 0, seed_dropout = 0;
    std::vector<LogRow> rows;
    uint64_t batch_checksum = 0;
    uint64_t dropout_checksum = 0;

    const LogRow* last_val() const;
    double final_val_loss() const;  // mean nats per predicted token
    // CSV: step,lr,split,loss[,pos_0..pos_{n-1}]
    std::string to_csv() const;
    void save(const std::string& path) const;
};

// ----------------------------- training -----------------------------

struct RunConfig {
    nn::TransformerConfig model;
    Direction direction = Direction::fw;
    long steps = 0;
    int batch_size = 0;
    LrSchedule sched;
    AdamWConfig adamw;
    uint64_t seed_init = 0;
    uint64_t seed_dropout = 0;
    long eval_every = 0;      // 0 -> final eval only
    size_t val_eval_cap = 2048;
    long log_every = 50;
    double entropy_floor = 0.0;  // total nats per sentence; 0 = unknown
    uint64_t config_hash = 0;
    const nn::TransformerParams<float>* init_from = nullptr;  // fine-tuning
};

struct TrainOutcome {
    RunLog log;
    nn::TransformerParams<float> params;
};

// Trains one direction on the given split. Enforces the information floor:
// a validation loss below the oracle entropy signals a harness bug and
// throws InternalConsistencyError.
TrainOutcome run_training(const RunConfig& rc, const pipe::SentenceSet& train_set,
                          const pipe::SentenceSet& val_set, int bos_id);

struct PairOutcome {
    TrainOutcome fw;
    TrainOutcome bw;
};

// Runs FW and BW with identical init seed, batch stream and dropout stream,
// then verifies the stream checksums match across directions.
PairOutcome train_pair_runs(RunConfig rc, const pipe::SentenceSet& train_set,
                            const pipe::SentenceSet& val_set, int bos_id);

// Mean validation loss and per-position losses (natural order) without
// training; used for floors and summaries.
std::pair<double, std::vector<double>> evaluate(nn::TransformerParams<float>& params,
                                                const pipe::SentenceSet& val_set, int bos_id,
                                                Direction dir, size_t cap, int batch_size);

}  // namespace aot::train
