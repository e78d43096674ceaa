#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "fmlm/model.hpp"
#include "fmlm/tokenizer.hpp"

namespace fmlm {

struct ReadingTimeRecord {
    std::string item;
    int position = 0;
    std::string word;
    std::string subject;
    double rt = 0.0;  // milliseconds
    int word_length = 0;
    double log_freq = 0.0;
    std::string pos_tag;
    double surprisal = 0.0;  // nats, attached after extraction
};

// Per-word surprisal (nats) over running text: sum of -ln P over each
// word's subword tokens. Long texts use a sliding window with stride
// context/2, so every scored token keeps at least context/2 tokens of
// history (except at the document start).
std::vector<double> word_surprisal(const ModelState& state, const Condition& cond,
                                   const BpeVocab& vocab, const std::string& text);

enum class Formula { Baseline, Full };

struct RegressionFit {
    std::vector<std::pair<std::string, double>> coefficients;
    Vec residuals;
    double log_likelihood = 0.0;  // Gaussian, at sigma^2 = SSE/n
    int n_observations = 0;
    std::string design;
};

// OLS on rt: word_length + log_freq + dummy intercepts for subject and
// POS; Full adds surprisal. Fixed-intercept stand-in for the
// random-intercept mixed model, which keeps the nested-LL comparison.
RegressionFit fit_linear(const std::vector<ReadingTimeRecord>& records,
                         Formula formula);

// LL(full) - LL(baseline); >= 0 by nesting
double delta_ll(const std::vector<ReadingTimeRecord>& records);

// Bundled coarse tagger (closed-class lexicon + suffix heuristics),
// used when the input file carries no POS column.
std::string coarse_pos_tag(const std::string& word);

struct FreqTable {
    std::unordered_map<std::string, long> counts;
    long total = 0;

    // add-one smoothed log unigram frequency
    double log_freq(const std::string& word) const;
};
FreqTable build_freq_table(const std::string& corpus_text);

struct RtColumnMap {
    std::string item = "item";
    std::string position = "zone";
    std::string word = "word";
    std::string subject = "subject";
    std::string rt = "rt";
    std::string word_length = "word_length";  // optional
    std::string log_freq = "log_freq";        // optional
    std::string pos = "pos";                  // optional
    std::string surprisal = "surprisal";      // optional
};

std::vector<ReadingTimeRecord> load_rt_csv(const std::string& path,
                                           const RtColumnMap& columns);

// {n, LL_baseline, LL_full, delta_ll, coefficients, ...}
std::string rt_report_json(const std::vector<ReadingTimeRecord>& records,
                           const std::string& pos_source);
// word,log_freq,residual rows from the full-model fit
std::string residuals_csv(const std::vector<ReadingTimeRecord>& records);

}  // namespace fmlm
