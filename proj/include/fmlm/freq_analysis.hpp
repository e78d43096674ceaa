#pragma once

#include <array>
#include <string>
#include <vector>

namespace fmlm {

struct ResidualRecord {
    std::string word;
    double log_freq = 0.0;
    double residual = 0.0;  // observed rt - predicted rt, ms
};

struct Quintile {
    double freq_lo = 0.0, freq_hi = 0.0;
    int n = 0;
    double mse = 0.0;
    double sse_under = 0.0;  // residual > 0: observed slower than predicted
    double sse_over = 0.0;
    double norm_under = 0.0;
    double norm_over = 0.0;
};

using QuintileReport = std::array<Quintile, 5>;

// Stable sort ascending by log_freq, split into 5 contiguous groups,
// larger groups first when n is not divisible by 5. Returns per-quintile
// index lists into the input order.
std::array<std::vector<int>, 5> quintile_partition(
    const std::vector<ResidualRecord>& records);

// MSE_q(a) - MSE_q(b) per quintile; both residual sets must cover the
// identical record list so the quintiles match.
std::array<double, 5> quintile_mse_diff(const std::vector<ResidualRecord>& a,
                                        const std::vector<ResidualRecord>& b);

// Per-quintile under/over SSE, normalized by the reference mean
// per-record squared error (from the Perfect-condition fit).
QuintileReport under_over_sse(const std::vector<ResidualRecord>& records,
                              double reference_mean_error);

std::vector<ResidualRecord> load_residuals_csv(const std::string& path);
std::string quintile_report_csv(const QuintileReport& report);

}  // namespace fmlm
