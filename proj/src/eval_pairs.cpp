#include "fmlm/eval_pairs.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fmlm/io.hpp"
#include "json.hpp"

namespace fmlm {

double sentence_logprob(const ModelState& state, const Condition& cond,
                        const BpeVocab& vocab, const std::string& text) {
    std::vector<int> tokens;
    tokens.push_back(vocab.eot_id);
    for (int id : encode(vocab, text)) tokens.push_back(id);
    if (tokens.size() < 2)
        throw std::invalid_argument("sentence_logprob: empty sentence");
    const auto& cfg = state.config;
    if (static_cast<int>(tokens.size()) > cfg.context)
        throw std::invalid_argument("sentence_logprob: sentence exceeds context: " +
                                    text);
    BiasCache biases;
    auto bias = biases.get(cond, cfg.context, static_cast<int>(tokens.size()));
    Mat logits = forward(state, tokens, bias);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const long row = static_cast<long>(i);
        double m = logits.row(row).maxCoeff();
        double lse = std::log((logits.row(row).array() - m).exp().sum()) + m;
        total += logits(row, tokens[i + 1]) - lse;
    }
    return total;
}

PairScores score_pairs(const ModelState& state, const Condition& cond,
                       const BpeVocab& vocab,
                       const std::vector<MinimalPair>& pairs) {
    PairScores out;
    out.verdicts.reserve(pairs.size());
    // subtask -> (phenomenon, correct, total); std::map keeps the
    // reduction order independent of pair order
    std::map<std::string, std::tuple<std::string, int, int>> by_subtask;
    for (const auto& pair : pairs) {
        if (pair.sentence_good.empty() || pair.sentence_bad.empty())
            throw std::invalid_argument("score_pairs: empty sentence in subtask " +
                                        pair.subtask);
        double lp_good, lp_bad;
        try {
            lp_good = sentence_logprob(state, cond, vocab, pair.sentence_good);
            lp_bad = sentence_logprob(state, cond, vocab, pair.sentence_bad);
        } catch (const std::exception& e) {
            throw std::runtime_error("score_pairs: subtask " + pair.subtask + ": " +
                                     e.what());
        }
        bool correct = lp_good > lp_bad;
        out.verdicts.push_back({lp_good, lp_bad, correct});
        auto& [phen, n_correct, n_total] = by_subtask[pair.subtask];
        phen = pair.phenomenon;
        if (correct) ++n_correct;
        ++n_total;
    }

    std::map<std::string, std::pair<double, int>> by_phenomenon;
    double acc_sum = 0.0;
    int n_subtasks = 0;
    for (const auto& [subtask, entry] : by_subtask) {
        const auto& [phen, n_correct, n_total] = entry;
        if (n_total == 0) {
            out.warnings.push_back("subtask " + subtask + " is empty; excluded");
            continue;
        }
        double acc = static_cast<double>(n_correct) / static_cast<double>(n_total);
        out.subtasks.push_back({subtask, phen, n_total, acc});
        acc_sum += acc;
        ++n_subtasks;
        auto& p = by_phenomenon[phen];
        p.first += acc;
        ++p.second;
    }
    if (n_subtasks == 0) throw std::invalid_argument("score_pairs: no pairs given");
    out.overall = acc_sum / static_cast<double>(n_subtasks);
    for (const auto& [phen, sum_n] : by_phenomenon)
        out.phenomena.emplace_back(phen, sum_n.first / sum_n.second);
    return out;
}

std::vector<MinimalPair> load_pairs_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pairs file: " + path);
    std::vector<MinimalPair> pairs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": bad JSON: " + e.what());
        }
        MinimalPair pair;
        pair.sentence_good = j.at("sentence_good");
        pair.sentence_bad = j.at("sentence_bad");
        pair.subtask = j.value("UID", "default");
        pair.phenomenon = j.value("linguistics_term", pair.subtask);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::string pair_scores_csv(const PairScores& scores) {
    std::ostringstream out;
    out << "subtask,phenomenon,n,accuracy\n";
    for (const auto& s : scores.subtasks)
        out << csv_escape(s.subtask) << ',' << csv_escape(s.phenomenon) << ','
            << s.n << ',' << fmt_double(s.accuracy) << '\n';
    return out.str();
}

std::string pair_scores_json(const PairScores& scores) {
    nlohmann::json j;
    j["overall"] = scores.overall;
    j["n_subtasks"] = scores.subtasks.size();
    nlohmann::json subtasks = nlohmann::json::object();
    for (const auto& s : scores.subtasks) subtasks[s.subtask] = s.accuracy;
    j["subtasks"] = subtasks;
    nlohmann::json phenomena = nlohmann::json::object();
    for (const auto& [phen, acc] : scores.phenomena) phenomena[phen] = acc;
    j["phenomena"] = phenomena;
    j["warnings"] = scores.warnings;
    return j.dump(2) + "\n";
}

}  // namespace fmlm
