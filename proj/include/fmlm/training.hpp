#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fmlm/data.hpp"
#include "fmlm/model.hpp"

namespace fmlm {

// nanoGPT-style defaults: AdamW, warmup then cosine decay, clip 1.0,
// decay on matrix weights only.
struct OptimizerSettings {
    double peak_lr = 6e-4;
    double weight_decay = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double grad_clip = 1.0;
    double warmup_frac = 0.02;
    double min_lr_frac = 0.1;
};

struct RunSpec {
    ModelConfig model;
    Condition condition = Perfect{};
    std::uint64_t seed = 0;  // single source of randomness: init and data
    std::int64_t steps = 2000;
    int batch_size = 32;
    OptimizerSettings opt;
    std::int64_t eval_interval = 100;
    int eval_sequences = 8;
    double val_fraction = 0.02;
    std::int64_t checkpoint_interval = 0;  // 0 = final checkpoint only
};

struct LossPoint {
    std::int64_t step;
    double train_loss;  // NaN at step 0 (no batch consumed yet)
    double val_loss;
};

struct RunResult {
    double final_val_loss = 0.0;
    std::vector<LossPoint> curve;
    std::string checkpoint_path;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string error;
};

double learning_rate(const OptimizerSettings& opt, std::int64_t step,
                     std::int64_t total_steps);

// Mutable training state; checkpoints capture it exactly, so resuming
// from step k is bit-equivalent to an uninterrupted run.
struct Trainer {
    ModelState model;
    std::vector<Mat> opt_m, opt_v;  // aligned with named_params order
    std::int64_t step = 0;
};

Trainer init_trainer(const RunSpec& spec);
Trainer trainer_from_checkpoint(const std::string& path);
void save_trainer(const Trainer& trainer, const std::string& path);

// One optimizer update on the step'th deterministic batch; returns the
// batch's training loss. Aborts on non-finite loss.
double trainer_step(Trainer& trainer, const RunSpec& spec,
                    const TokenStream& stream, const Split& split);

double validation_loss(const ModelState& model, const Condition& cond,
                       const TokenStream& stream, const Split& split,
                       int eval_sequences);

// Full run: init (or resume from run_dir/checkpoint.bin), train to
// spec.steps, write losses.csv and the final checkpoint into run_dir.
RunResult train(const RunSpec& spec, const TokenStream& stream,
                const std::filesystem::path& run_dir);

struct ExperimentGrid {
    std::vector<Condition> conditions;
    std::vector<std::uint64_t> seeds;
    RunSpec shared;  // condition/seed fields are overwritten per cell
};

struct GridCell {
    Condition condition;
    std::uint64_t seed;
    RunResult result;
};

// Runs every (condition, seed) cell; cells are independent, so results
// do not depend on execution order. Partial failures are recorded, not
// fatal. Writes results.csv under grid_dir.
std::vector<GridCell> run_grid(const ExperimentGrid& grid, const TokenStream& stream,
                               const std::filesystem::path& grid_dir, int jobs = 1);

std::string results_csv(const std::vector<GridCell>& cells);

}  // namespace fmlm
