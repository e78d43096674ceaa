#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmlm/attention.hpp"
#include "fmlm/retention.hpp"

namespace fmlm {

struct ModelConfig {
    int layers = 6;
    int heads = 6;
    int width = 384;
    int vocab = 8000;
    int context = 256;
    bool use_biases = false;
    bool tie_embeddings = true;
    double dropout = 0.0;

    void validate() const;
    int head_dim() const { return width / heads; }
};

// All parameters are matrices; 1-D tensors (norm scales, biases) are
// stored as 1 x k rows. Tensors disabled by the config have size 0.
struct BlockParams {
    Mat ln1_w, ln1_b;
    Mat qkv_w, qkv_b;    // width x 3*width
    Mat proj_w, proj_b;  // width x width
    Mat ln2_w, ln2_b;
    Mat fc_w, fc_b;      // width x 4*width
    Mat fc2_w, fc2_b;    // 4*width x width
};

struct ModelParams {
    Mat wte;  // vocab x width
    Mat wpe;  // context x width
    std::vector<BlockParams> blocks;
    Mat lnf_w, lnf_b;
    Mat lm_head;  // vocab x width, empty when embeddings are tied
};

struct ModelState {
    ModelConfig config;
    std::uint64_t init_seed = 0;
    ModelParams params;
};

// Fixed-order enumeration of live parameter tensors; the same order is
// used by the optimizer, checkpoints, and parameter counting.
std::vector<std::pair<std::string, Mat*>> named_params(ModelParams& p);
std::vector<std::pair<std::string, const Mat*>> named_params(const ModelParams& p);

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed);
ModelParams zero_like(const ModelState& state);

// Closed-form trainable-parameter count for a config.
long param_count(const ModelConfig& cfg, bool exclude_position_embeddings);

// Thread-safe cache of bias matrices keyed by (cfg, seq_len).
class BiasCache {
public:
    // nullopt condition bias = no bias
    std::optional<BiasMatrix> get(const Condition& cond, int context, int seq_len);
};

// Logits for one token sequence, seq_len x vocab. The retention bias,
// when present, is applied in every layer and head.
Mat forward(const ModelState& state, std::span<const int> tokens,
            const std::optional<BiasMatrix>& bias);

// Mean next-token negative log-likelihood in nats.
double cross_entropy_loss(const Mat& logits, std::span<const int> targets);

// Loss plus parameter gradients for one (inputs, targets) sequence,
// accumulated into grads. Returns the sequence's mean loss in nats.
double loss_and_grads(const ModelState& state, std::span<const int> tokens,
                      std::span<const int> targets,
                      const std::optional<BiasMatrix>& bias, ModelParams& grads);

struct Sampling {
    bool greedy = true;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

// Autoregressive continuation; recomputes the forward pass each step
// and crops to the last `context` tokens once the window fills.
std::vector<int> generate(const ModelState& state, std::span<const int> prompt,
                          int max_tokens, const Sampling& sampling,
                          const Condition& cond);

// Checkpoint container: magic + JSON header + raw little-endian doubles.
// Holds config, seed, step, parameters, and optionally Adam moments, so
// resumed training is bit-equivalent to an uninterrupted run.
struct Checkpoint {
    ModelState state;
    std::int64_t step = 0;
    std::vector<Mat> opt_m, opt_v;  // aligned with named_params order; may be empty
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fmlm
