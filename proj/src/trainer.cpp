#include "aot/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aot::train {

double lr_at(long step, const LrSchedule& sched) {
    if (step < 0) throw InvalidArgument("lr_at: step must be >= 0");
    if (sched.base_lr <= 0.0) throw InvalidArgument("lr_at: base_lr must be > 0");
    if (step < sched.warmup_steps)
        return sched.base_lr * double(step) / double(sched.warmup_steps);
    long t = step - sched.warmup_steps;
    double cycle_len = sched.restart_T0 > 0
                           ? double(sched.restart_T0)
                           : double(std::max<long>(1, sched.total_steps - sched.warmup_steps));
    for (;;) {
        if (double(t) < cycle_len) break;
        t -= long(cycle_len);
        cycle_len *= std::max(1.0, sched.restart_mult);
    }
    double phase = double(t) / cycle_len;
    return sched.floor_lr +
           (sched.base_lr - sched.floor_lr) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * phase));
}

const LogRow* RunLog::last_val() const {
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
        if (it->split == "val") return &*it;
    return nullptr;
}

double RunLog::final_val_loss() const {
    const LogRow* row = last_val();
    if (!row) throw InvalidArgument("RunLog: no validation rows");
    return row->loss;
}

std::string RunLog::to_csv() const {
    std::ostringstream os;
    os << "# direction=" << to_string(direction) << " config_hash=" << config_hash
       << " seed_init=" << seed_init << " seed_dropout=" << seed_dropout
       << " batch_checksum=" << batch_checksum << " dropout_checksum=" << dropout_checksum
       << "\n";
    size_t max_pos = 0;
    for (const auto& r : rows) max_pos = std::max(max_pos, r.per_position.size());
    os << "step,lr,split,loss";
    for (size_t i = 0; i < max_pos; ++i) os << ",pos_" << i;
    os << "\n";
    os.precision(10);
    for (const auto& r : rows) {
        os << r.step << ',' << r.lr << ',' << r.split << ',' << r.loss;
        for (size_t i = 0; i < max_pos; ++i) {
            os << ',';
            if (i < r.per_position.size()) os << r.per_position[i];
        }
        os << "\n";
    }
    return os.str();
}

void RunLog::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputMissing("RunLog: cannot open for writing: " + path);
    os << to_csv();
}

namespace {

// Flattens prepared inputs into model ids and next-token targets; positions
// with t = n-1 predict nothing and are excluded via `rows`.
struct BatchTensors {
    std::vector<int> ids;      // B*n
    std::vector<int> rows;     // rows with a target
    std::vector<int> targets;  // aligned with rows
    int batch = 0;
    int n = 0;
};

BatchTensors flatten_batch(const std::vector<pipe::Sentence>& batch) {
    BatchTensors bt;
    bt.batch = int(batch.size());
    bt.n = int(batch.front().size());
    bt.ids.reserve(size_t(bt.batch) * size_t(bt.n));
    for (const auto& s : batch)
        for (auto t : s) bt.ids.push_back(int(t));
    bt.rows.reserve(size_t(bt.batch) * size_t(bt.n - 1));
    bt.targets.reserve(bt.rows.capacity());
    for (int b = 0; b < bt.batch; ++b) {
        for (int t = 0; t + 1 < bt.n; ++t) {
            bt.rows.push_back(b * bt.n + t);
            bt.targets.push_back(int(batch[size_t(b)][size_t(t + 1)]));
        }
    }
    return bt;
}

// Natural sentence position of prediction index t (prediction t fills
// payload position t in reading order).
int natural_position(Direction dir, int payload_len, int t) {
    return dir == Direction::fw ? t : payload_len - 1 - t;
}

struct EvalResult {
    double mean_loss = 0.0;
    std::vector<double> per_position;
};

EvalResult eval_pass(nn::TransformerParams<float>& params, const pipe::SentenceSet& val_set,
                     int bos_id, Direction dir, size_t cap, int batch_size) {
    if (val_set.sentences.empty()) throw InvalidArgument("evaluate: empty validation set");
    size_t use = std::min(cap, val_set.sentences.size());
    int payload_len = int(val_set.sentences.front().size());
    std::vector<double> pos_sum(size_t(payload_len), 0.0);
    double total = 0.0;
    size_t count = 0;
    Rng no_dropout(0);
    for (size_t start = 0; start < use; start += size_t(batch_size)) {
        size_t end = std::min(use, start + size_t(batch_size));
        std::vector<pipe::Sentence> batch;
        batch.reserve(end - start);
        for (size_t i = start; i < end; ++i)
            batch.push_back(
                pipe::prepare_direction(val_set.sentences[i], dir, pipe::TokenId(bos_id)));
        BatchTensors bt = flatten_batch(batch);
        nn::Tape<float> tape(/*grad_enabled=*/false);
        auto* logits = nn::transformer_forward(tape, params, bt.ids, bt.batch, bt.n,
                                               /*train=*/false, no_dropout);
        auto* picked = nn::gather_rows(tape, logits, bt.rows);
        auto ce = nn::cross_entropy_from_logits(tape, picked, bt.targets);
        int preds_per_sentence = bt.n - 1;
        for (int b = 0; b < bt.batch; ++b) {
            for (int t = 0; t < preds_per_sentence; ++t) {
                double l = double(ce.per_row[size_t(b * preds_per_sentence + t)]);
                pos_sum[size_t(natural_position(dir, payload_len, t))] += l;
                total += l;
            }
        }
        count += size_t(bt.batch);
    }
    EvalResult res;
    res.per_position.resize(size_t(payload_len));
    for (int i = 0; i < payload_len; ++i) res.per_position[size_t(i)] = pos_sum[size_t(i)] / double(count);
    res.mean_loss = total / (double(count) * double(payload_len));
    return res;
}

}  // namespace

std::pair<double, std::vector<double>> evaluate(nn::TransformerParams<float>& params,
                                                const pipe::SentenceSet& val_set, int bos_id,
                                                Direction dir, size_t cap, int batch_size) {
    EvalResult r = eval_pass(params, val_set, bos_id, dir, cap, batch_size);
    return {r.mean_loss, r.per_position};
}

TrainOutcome run_training(const RunConfig& rc, const pipe::SentenceSet& train_set,
                          const pipe::SentenceSet& val_set, int bos_id) {
    if (rc.steps < 1) throw InvalidArgument("run_training: steps must be >= 1");
    if (rc.batch_size < 1) throw InvalidArgument("run_training: batch_size must be >= 1");
    rc.model.validate();

    TrainOutcome out{.log = {}, .params = rc.init_from
                                    ? *rc.init_from
                                    : nn::init_params<float>(rc.model, rc.seed_init)};
    if (rc.init_from && rc.init_from->cfg.d_embed != rc.model.d_embed)
        throw InvalidArgument("run_training: init_from config mismatch");
    RunLog& log = out.log;
    log.direction = rc.direction;
    log.config_hash = rc.config_hash;
    log.seed_init = rc.seed_init;
    log.seed_dropout = rc.seed_dropout;

    int payload_len = int(train_set.sentences.front().size());
    double floor_per_token = rc.entropy_floor > 0.0 ? rc.entropy_floor / payload_len : 0.0;
    // validation estimates may dip slightly below the floor from sampling
    const double floor_tol = 0.02;

    AdamW<float> opt(out.params.named(), rc.adamw);
    pipe::BatchIter batches(train_set, size_t(rc.batch_size), rc.direction,
                            pipe::TokenId(bos_id));
    LrSchedule sched = rc.sched;
    if (sched.total_steps == 0) sched.total_steps = rc.steps;

    auto add_val_row = [&](long step, double lr) {
        EvalResult ev = eval_pass(out.params, val_set, bos_id, rc.direction, rc.val_eval_cap,
                                  rc.batch_size);
        if (floor_per_token > 0.0 && ev.mean_loss < floor_per_token - floor_tol)
            throw InternalConsistencyError(
                "run_training: validation loss " + std::to_string(ev.mean_loss) +
                " beats the oracle entropy floor " + std::to_string(floor_per_token) +
                " per token; harness bug");
        LogRow row{step, lr, "val", ev.mean_loss, std::move(ev.per_position)};
        log.rows.push_back(std::move(row));
    };

    for (long step = 0; step < rc.steps; ++step) {
        double lr = lr_at(step, sched);
        std::vector<pipe::Sentence> batch = batches.next();
        BatchTensors bt = flatten_batch(batch);

        Rng dropout_rng = derive_rng(rc.seed_dropout, uint64_t(step));
        nn::Tape<float> tape;
        auto* logits = nn::transformer_forward(tape, out.params, bt.ids, bt.batch, bt.n,
                                               /*train=*/true, dropout_rng);
        auto* picked = nn::gather_rows(tape, logits, bt.rows);
        auto ce = nn::cross_entropy_from_logits(tape, picked, bt.targets);
        double train_loss = double(ce.mean_loss->val[0]);
        if (!std::isfinite(train_loss))
            throw NumericFault("run_training: non-finite loss at step " + std::to_string(step));
        tape.backward(ce.mean_loss);
        opt.step(lr);
        opt.zero_grad();
        // state probe: same seed and same consumption pattern across
        // directions -> identical checksums
        log.dropout_checksum = fnv1a(&step, sizeof(step), log.dropout_checksum);
        uint64_t probe = dropout_rng();
        log.dropout_checksum = fnv1a(&probe, sizeof(probe), log.dropout_checksum);

        if (step % rc.log_every == 0 || step + 1 == rc.steps)
            log.rows.push_back(LogRow{step, lr, "train", train_loss, {}});
        if (rc.eval_every > 0 && (step + 1) % rc.eval_every == 0 && step + 1 != rc.steps)
            add_val_row(step + 1, lr);
    }
    add_val_row(rc.steps, lr_at(rc.steps - 1, sched));
    log.batch_checksum = batches.stream_checksum();
    return out;
}

PairOutcome train_pair_runs(RunConfig rc, const pipe::SentenceSet& train_set,
                            const pipe::SentenceSet& val_set, int bos_id) {
    rc.direction = Direction::fw;
    TrainOutcome fw = run_training(rc, train_set, val_set, bos_id);
    rc.direction = Direction::bw;
    TrainOutcome bw = run_training(rc, train_set, val_set, bos_id);
    if (fw.log.batch_checksum != bw.log.batch_checksum)
        throw InternalConsistencyError("train_pair: FW/BW batch streams differ");
    if (fw.log.dropout_checksum != bw.log.dropout_checksum)
        throw InternalConsistencyError("train_pair: FW/BW dropout streams differ");
    return PairOutcome{std::move(fw), std::move(bw)};
}

}  // namespace aot::train
