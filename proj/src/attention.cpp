#include "fmlm/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace fmlm {

namespace {

void check_shapes(const AttentionInput& input,
                  const std::optional<BiasMatrix>& bias) {
    if (input.q.empty() || input.q.size() != input.k.size() ||
        input.q.size() != input.v.size())
        throw std::invalid_argument("attention: Q/K/V head counts differ");
    const long t = input.q[0].rows();
    const long hd = input.q[0].cols();
    if (hd != input.head_dim)
        throw std::invalid_argument("attention: head_dim mismatch");
    for (std::size_t h = 0; h < input.q.size(); ++h) {
        if (input.q[h].rows() != t || input.q[h].cols() != hd ||
            input.k[h].rows() != t || input.k[h].cols() != hd ||
            input.v[h].rows() != t || input.v[h].cols() != hd)
            throw std::invalid_argument("attention: Q/K/V shape mismatch");
    }
    if (bias && (bias->values.rows() != t || bias->values.cols() != t))
        throw std::invalid_argument("attention: bias dimensions do not match seq_len");
}

// softmax over the causal prefix [0, row] of each row; future positions
// get exactly zero weight
Mat causal_softmax(const Mat& scores) {
    const long t = scores.rows();
    Mat probs = Mat::Zero(t, t);
    for (long i = 0; i < t; ++i) {
        double m = scores(i, 0);
        for (long j = 1; j <= i; ++j) m = std::max(m, scores(i, j));
        double sum = 0.0;
        for (long j = 0; j <= i; ++j) {
            double e = std::exp(scores(i, j) - m);
            probs(i, j) = e;
            sum += e;
        }
        for (long j = 0; j <= i; ++j) probs(i, j) /= sum;
    }
    return probs;
}

}  // namespace

std::vector<Mat> fm_attention(const AttentionInput& input,
                              const std::optional<BiasMatrix>& bias,
                              AttentionCache* cache) {
    check_shapes(input, bias);
    const double scale = 1.0 / std::sqrt(static_cast<double>(input.head_dim));
    const std::size_t heads = input.q.size();
    std::vector<Mat> out(heads);
    if (cache) cache->probs.resize(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Mat scores = (input.q[h] * input.k[h].transpose()) * scale;
        Mat probs = causal_softmax(scores);
        Mat weights = bias ? Mat(probs.cwiseProduct(bias->values)) : probs;
        out[h] = weights * input.v[h];
        if (cache) cache->probs[h] = std::move(probs);
    }
    return out;
}

AttentionGrads fm_attention_backward(const AttentionInput& input,
                                     const std::optional<BiasMatrix>& bias,
                                     const std::vector<Mat>& upstream) {
    check_shapes(input, bias);
    const std::size_t heads = input.q.size();
    if (upstream.size() != heads)
        throw std::invalid_argument("attention: upstream head count mismatch");
    const long t = input.q[0].rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(input.head_dim));

    AttentionGrads grads;
    grads.dq.resize(heads);
    grads.dk.resize(heads);
    grads.dv.resize(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        if (upstream[h].rows() != t || upstream[h].cols() != input.head_dim)
            throw std::invalid_argument("attention: upstream shape mismatch");
        Mat scores = (input.q[h] * input.k[h].transpose()) * scale;
        Mat probs = causal_softmax(scores);
        Mat weights = bias ? Mat(probs.cwiseProduct(bias->values)) : probs;

        Mat d_weights = upstream[h] * input.v[h].transpose();
        grads.dv[h] = weights.transpose() * upstream[h];

        Mat d_probs = bias ? Mat(d_weights.cwiseProduct(bias->values)) : d_weights;
        // softmax backward per causal row: dS_ij = P_ij (dP_ij - <dP_i, P_i>)
        Mat d_scores = Mat::Zero(t, t);
        for (long i = 0; i < t; ++i) {
            double dot = 0.0;
            for (long j = 0; j <= i; ++j) dot += d_probs(i, j) * probs(i, j);
            for (long j = 0; j <= i; ++j)
                d_scores(i, j) = probs(i, j) * (d_probs(i, j) - dot);
        }
        grads.dq[h] = (d_scores * input.k[h]) * scale;
        grads.dk[h] = (d_scores.transpose() * input.q[h]) * scale;
    }
    return grads;
}

}  // namespace fmlm
