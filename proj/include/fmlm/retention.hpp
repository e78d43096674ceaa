#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace fmlm {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Parameters of the piecewise power-law retention curve: a buffer of E
// token distances with perfect retention, then decay over the rest of
// the n-token context at strength alpha (larger alpha = steeper decay).
struct RetentionConfig {
    int buffer;       // E, tokens with retention exactly 1
    double alpha;     // decay strength, > 0; larger = steeper decay
    int context;      // n, context window length in tokens

    void validate() const;
};

// Experimental conditions. Naive is fleeting memory with no echoic
// buffer beyond the current token (E = 1).
struct Perfect {};
struct Naive {
    double alpha;
};
struct Fleeting {
    double alpha;
    int buffer;
};
using Condition = std::variant<Perfect, Naive, Fleeting>;

std::string condition_name(const Condition& cond);
// "perfect" | "naive:<alpha>" | "fleeting:<alpha>:<E>"
std::string condition_spec(const Condition& cond);
Condition parse_condition(const std::string& spec);

// nullopt = no bias (Perfect condition)
std::optional<RetentionConfig> condition_to_retention(const Condition& cond,
                                                      int context);

// Retention at token distance d. Exactly 1 inside the buffer, exactly 0
// at d = n - 1, strictly decreasing in between.
double retention_value(int distance, const RetentionConfig& cfg);

// Lower-triangular seq_len x seq_len matrix with entry (i, j) equal to
// retention_value(i - j); strict upper triangle is zero.
struct BiasMatrix {
    Mat values;
    RetentionConfig config;
};

BiasMatrix build_bias_matrix(const RetentionConfig& cfg, int seq_len);

// columns: d,retention — for plotting retention curves
std::string retention_curve_csv(const RetentionConfig& cfg);

}  // namespace fmlm
