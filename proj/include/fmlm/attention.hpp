#pragma once

#include <optional>
#include <vector>

#include "fmlm/retention.hpp"

namespace fmlm {

// One attention head's inputs: seq_len x head_dim each.
struct AttentionInput {
    std::vector<Mat> q, k, v;  // one matrix per head
    int head_dim;
};

struct AttentionGrads {
    std::vector<Mat> dq, dk, dv;
};

// Cached forward intermediates for the backward pass.
struct AttentionCache {
    std::vector<Mat> probs;  // post-softmax, pre-bias attention rows per head
};

// Causal attention with a multiplicative post-softmax retention bias:
// out = (softmax(QK^T / sqrt(d_k)) ⊙ B) V. Rows are not renormalized
// after the product; with no bias this is standard causal attention.
// The bias, when present, must be seq_len x seq_len.
std::vector<Mat> fm_attention(const AttentionInput& input,
                              const std::optional<BiasMatrix>& bias,
                              AttentionCache* cache = nullptr);

// Gradients for Q, K, V. The bias is a constant and receives none.
AttentionGrads fm_attention_backward(const AttentionInput& input,
                                     const std::optional<BiasMatrix>& bias,
                                     const std::vector<Mat>& upstream);

}  // namespace fmlm
