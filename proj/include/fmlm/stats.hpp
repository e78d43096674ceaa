#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fmlm {

struct PairedDiffs {
    std::vector<double> values;  // per-seed condition differences
    std::string metric;
    std::string units;
};

struct BootstrapResult {
    double mean = 0.0;
    double t_observed = 0.0;
    double p_value = 1.0;
    double ci_low = 0.0, ci_high = 0.0;
    std::int64_t n_boot = 0;
    std::uint64_t seed = 0;
};

// Bootstrap t-test against zero: center to zero mean, resample with
// replacement, compare t* tails to the observed t. Equal-tail p (two
// one-sided proportions, doubled, capped at 1) with the +1 correction,
// so p is never exactly 0. Resamples come from a counter-based stream
// keyed by (seed, bootstrap index).
BootstrapResult bootstrap_t_test(const PairedDiffs& diffs, std::int64_t n_boot,
                                 std::uint64_t seed);

// Percentile interval of bootstrap means.
std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                       double level, std::int64_t n_boot,
                                       std::uint64_t seed);

// "***" < 0.001, "**" < 0.01, "*" < 0.05, else "ns"
std::string star_code(double p);

// Caption-style reporting line: mean Δ, 95% CI [lo, hi], p.
std::string format_result(const BootstrapResult& r);

// Input CSV columns: metric,condition,seed,value. Within-seed diffs of
// cond_a - cond_b are computed here to prevent pairing mistakes.
PairedDiffs paired_diffs_from_csv(const std::string& path,
                                  const std::string& metric,
                                  const std::string& cond_a,
                                  const std::string& cond_b);

std::string bootstrap_result_json(const BootstrapResult& r,
                                  const std::string& metric);

}  // namespace fmlm
