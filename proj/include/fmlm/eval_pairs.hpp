#pragma once

#include <string>
#include <vector>

#include "fmlm/model.hpp"
#include "fmlm/tokenizer.hpp"

namespace fmlm {

struct MinimalPair {
    std::string sentence_good;
    std::string sentence_bad;
    std::string subtask;     // UID field
    std::string phenomenon;  // linguistics_term field
};

struct PairVerdict {
    double logprob_good;
    double logprob_bad;
    bool correct;  // strict: ties count as incorrect
};

// Sum over positions of ln P(token | prefix), conditioning on a leading
// end-of-text marker.
double sentence_logprob(const ModelState& state, const Condition& cond,
                        const BpeVocab& vocab, const std::string& text);

struct SubtaskScore {
    std::string subtask;
    std::string phenomenon;
    int n;
    double accuracy;
};

struct PairScores {
    std::vector<SubtaskScore> subtasks;
    std::vector<std::pair<std::string, double>> phenomena;  // mean over subtasks
    double overall;  // unweighted mean of subtask accuracies
    std::vector<PairVerdict> verdicts;
    std::vector<std::string> warnings;
};

PairScores score_pairs(const ModelState& state, const Condition& cond,
                       const BpeVocab& vocab,
                       const std::vector<MinimalPair>& pairs);

// JSONL with fields sentence_good, sentence_bad, UID, linguistics_term
std::vector<MinimalPair> load_pairs_jsonl(const std::string& path);

// CSV: subtask,phenomenon,n,accuracy
std::string pair_scores_csv(const PairScores& scores);
// JSON summary with the overall score
std::string pair_scores_json(const PairScores& scores);

}  // namespace fmlm
