#include "fmlm/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fmlm/io.hpp"
#include "fmlm/rng.hpp"

namespace fmlm {

double learning_rate(const OptimizerSettings& opt, std::int64_t step,
                     std::int64_t total_steps) {
    const std::int64_t warmup = static_cast<std::int64_t>(
        std::ceil(opt.warmup_frac * static_cast<double>(total_steps)));
    const double min_lr = opt.peak_lr * opt.min_lr_frac;
    if (warmup > 0 && step < warmup)
        return opt.peak_lr * static_cast<double>(step + 1) /
               static_cast<double>(warmup);
    if (total_steps <= warmup) return opt.peak_lr;
    double progress = static_cast<double>(step - warmup) /
                      static_cast<double>(total_steps - warmup);
    progress = std::min(1.0, std::max(0.0, progress));
    return min_lr + 0.5 * (1.0 + std::cos(M_PI * progress)) * (opt.peak_lr - min_lr);
}

Trainer init_trainer(const RunSpec& spec) {
    Trainer trainer;
    trainer.model = init_model(spec.model, spec.seed);
    auto params = named_params(trainer.model.params);
    trainer.opt_m.reserve(params.size());
    trainer.opt_v.reserve(params.size());
    for (const auto& [name, m] : params) {
        trainer.opt_m.push_back(Mat::Zero(m->rows(), m->cols()));
        trainer.opt_v.push_back(Mat::Zero(m->rows(), m->cols()));
    }
    return trainer;
}

Trainer trainer_from_checkpoint(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.opt_m.empty())
        throw std::runtime_error("checkpoint has no optimizer moments: " + path);
    Trainer trainer;
    trainer.model = std::move(ckpt.state);
    trainer.opt_m = std::move(ckpt.opt_m);
    trainer.opt_v = std::move(ckpt.opt_v);
    trainer.step = ckpt.step;
    return trainer;
}

void save_trainer(const Trainer& trainer, const std::string& path) {
    Checkpoint ckpt;
    ckpt.state = trainer.model;
    ckpt.step = trainer.step;
    ckpt.opt_m = trainer.opt_m;
    ckpt.opt_v = trainer.opt_v;
    save_checkpoint(ckpt, path);
}

namespace {

std::uint64_t batch_fingerprint(const Batch& batch) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& row : batch.inputs)
        h = hash_combine(h, fnv1a64(row.data(), row.size() * sizeof(int)));
    return h;
}

bool is_decayed(const Mat& m) { return m.rows() > 1 && m.cols() > 1; }

}  // namespace

double trainer_step(Trainer& trainer, const RunSpec& spec,
                    const TokenStream& stream, const Split& split) {
    const auto& cfg = trainer.model.config;
    BatchPlan plan{spec.seed, spec.batch_size, cfg.context, spec.steps};
    Batch batch =
        sample_batch(plan, stream, split.train_begin, split.train_end, trainer.step);

    BiasCache biases;
    auto bias = biases.get(spec.condition, cfg.context, cfg.context);

    ModelParams grads = zero_like(trainer.model);
    double loss = 0.0;
    for (int b = 0; b < spec.batch_size; ++b)
        loss += loss_and_grads(trainer.model, batch.inputs[b], batch.targets[b],
                               bias, grads);
    loss /= static_cast<double>(spec.batch_size);
    if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << trainer.step << " (batch hash 0x"
            << std::hex << batch_fingerprint(batch) << ")";
        throw std::runtime_error(msg.str());
    }

    auto grad_ptrs = named_params(grads);
    const double scale = 1.0 / static_cast<double>(spec.batch_size);
    double sq_norm = 0.0;
    for (auto& [name, g] : grad_ptrs) {
        *g *= scale;
        sq_norm += g->squaredNorm();
    }
    if (spec.opt.grad_clip > 0.0) {
        double norm = std::sqrt(sq_norm);
        if (norm > spec.opt.grad_clip) {
            double clip = spec.opt.grad_clip / norm;
            for (auto& [name, g] : grad_ptrs) *g *= clip;
        }
    }

    const double lr = learning_rate(spec.opt, trainer.step, spec.steps);
    const std::int64_t t = trainer.step + 1;
    const double bc1 = 1.0 - std::pow(spec.opt.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(spec.opt.beta2, static_cast<double>(t));
    auto param_ptrs = named_params(trainer.model.params);
    for (std::size_t i = 0; i < param_ptrs.size(); ++i) {
        Mat& p = *param_ptrs[i].second;
        const Mat& g = *grad_ptrs[i].second;
        Mat& m = trainer.opt_m[i];
        Mat& v = trainer.opt_v[i];
        m = spec.opt.beta1 * m + (1.0 - spec.opt.beta1) * g;
        v = spec.opt.beta2 * v + (1.0 - spec.opt.beta2) * g.cwiseProduct(g);
        Mat m_hat = m / bc1;
        Mat v_hat = v / bc2;
        if (is_decayed(p)) p -= lr * spec.opt.weight_decay * p;
        p.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + 1e-8);
    }
    ++trainer.step;
    return loss;
}

double validation_loss(const ModelState& model, const Condition& cond,
                       const TokenStream& stream, const Split& split,
                       int eval_sequences) {
    const auto& cfg = model.config;
    const std::int64_t val_len = split.val_end - split.val_begin;
    if (val_len < cfg.context + 1)
        throw std::invalid_argument("validation split shorter than context+1");
    const std::int64_t max_offset = val_len - cfg.context - 1;
    const int n = std::max(1, eval_sequences);
    BiasCache biases;
    auto bias = biases.get(cond, cfg.context, cfg.context);
    double total = 0.0;
    // evenly spaced, condition-independent evaluation windows
    for (int k = 0; k < n; ++k) {
        std::int64_t offset =
            split.val_begin +
            (n == 1 ? 0 : max_offset * static_cast<std::int64_t>(k) / (n - 1));
        std::vector<int> in(cfg.context), tg(cfg.context);
        for (int t = 0; t < cfg.context; ++t) {
            in[t] = stream.ids[static_cast<std::size_t>(offset + t)];
            tg[t] = stream.ids[static_cast<std::size_t>(offset + t + 1)];
        }
        Mat logits = forward(model, in, bias);
        total += cross_entropy_loss(logits, tg);
    }
    return total / static_cast<double>(n);
}

RunResult train(const RunSpec& spec, const TokenStream& stream,
                const std::filesystem::path& run_dir) {
    const auto start_time = std::chrono::steady_clock::now();
    std::filesystem::create_directories(run_dir);
    const std::string ckpt_path = (run_dir / "checkpoint.bin").string();

    RunResult result;
    Trainer trainer;
    if (std::filesystem::exists(ckpt_path)) {
        trainer = trainer_from_checkpoint(ckpt_path);
        if (trainer.step >= spec.steps) {
            // already complete; report the stored final loss
            Split split = make_split(stream, spec.val_fraction);
            result.final_val_loss = validation_loss(
                trainer.model, spec.condition, stream, split, spec.eval_sequences);
            result.checkpoint_path = ckpt_path;
            return result;
        }
    } else {
        trainer = init_trainer(spec);
    }

    Split split = make_split(stream, spec.val_fraction);
    auto record = [&](double train_loss) {
        // step 0 measures the shared initialization itself (no bias), so
        // paired runs record bit-identical starting losses
        Condition eval_cond =
            trainer.step == 0 ? Condition(Perfect{}) : spec.condition;
        double vl = validation_loss(trainer.model, eval_cond, stream, split,
                                    spec.eval_sequences);
        result.curve.push_back({trainer.step, train_loss, vl});
    };
    if (trainer.step == 0) record(std::numeric_limits<double>::quiet_NaN());

    double last_train_loss = std::numeric_limits<double>::quiet_NaN();
    while (trainer.step < spec.steps) {
        last_train_loss = trainer_step(trainer, spec, stream, split);
        if (spec.eval_interval > 0 && trainer.step % spec.eval_interval == 0 &&
            trainer.step < spec.steps)
            record(last_train_loss);
        if (spec.checkpoint_interval > 0 &&
            trainer.step % spec.checkpoint_interval == 0)
            save_trainer(trainer, ckpt_path);
    }
    if (result.curve.empty() || result.curve.back().step != trainer.step)
        record(last_train_loss);
    save_trainer(trainer, ckpt_path);

    result.final_val_loss = result.curve.back().val_loss;
    result.checkpoint_path = ckpt_path;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
            .count();

    std::ostringstream csv;
    csv << "step,train_loss,val_loss\n";
    for (const auto& pt : result.curve)
        csv << pt.step << ',' << fmt_double(pt.train_loss) << ','
            << fmt_double(pt.val_loss) << '\n';
    atomic_write(run_dir / "losses.csv", csv.str());
    return result;
}

std::vector<GridCell> run_grid(const ExperimentGrid& grid, const TokenStream& stream,
                               const std::filesystem::path& grid_dir, int jobs) {
    if (grid.conditions.empty() || grid.seeds.empty())
        throw std::invalid_argument("run_grid: empty grid");
    std::filesystem::create_directories(grid_dir);

    std::vector<GridCell> cells;
    for (const auto& cond : grid.conditions)
        for (auto seed : grid.seeds) cells.push_back({cond, seed, {}});

    auto run_cell = [&](GridCell& cell) {
        RunSpec spec = grid.shared;
        spec.condition = cell.condition;
        spec.seed = cell.seed;
        const std::string name =
            condition_spec(cell.condition) + "_seed" + std::to_string(cell.seed);
        try {
            cell.result = train(spec, stream, grid_dir / name);
        } catch (const std::exception& e) {
            cell.result.failed = true;
            cell.result.error = e.what();
        }
    };

    if (jobs <= 1) {
        for (auto& cell : cells) run_cell(cell);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t idx;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= cells.size()) return;
                        idx = next++;
                    }
                    run_cell(cells[idx]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    atomic_write(grid_dir / "results.csv", results_csv(cells));
    return cells;
}

std::string results_csv(const std::vector<GridCell>& cells) {
    std::ostringstream out;
    out << "condition,E,alpha,seed,step,split,loss\n";
    for (const auto& cell : cells) {
        if (cell.result.failed) {
            out << condition_name(cell.condition) << ",,," << cell.seed
                << ",,failed," << csv_escape(cell.result.error) << '\n';
            continue;
        }
        std::string e_str, a_str;
        if (const auto* naive = std::get_if<Naive>(&cell.condition)) {
            e_str = "1";
            a_str = fmt_double(naive->alpha);
        } else if (const auto* fl = std::get_if<Fleeting>(&cell.condition)) {
            e_str = std::to_string(fl->buffer);
            a_str = fmt_double(fl->alpha);
        }
        auto row_prefix = [&](std::int64_t step) {
            out << condition_name(cell.condition) << ',' << e_str << ',' << a_str
                << ',' << cell.seed << ',' << step << ',';
        };
        for (const auto& pt : cell.result.curve) {
            if (std::isfinite(pt.train_loss)) {
                row_prefix(pt.step);
                out << "train," << fmt_double(pt.train_loss) << '\n';
            }
            row_prefix(pt.step);
            out << "val," << fmt_double(pt.val_loss) << '\n';
        }
        row_prefix(cell.result.curve.empty() ? 0
                                             : cell.result.curve.back().step);
        out << "final," << fmt_double(cell.result.final_val_loss) << '\n';
    }
    return out.str();
}

}  // namespace fmlm
