#include "fmlm/surprisal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fmlm/io.hpp"
#include "json.hpp"

namespace fmlm {

std::vector<double> word_surprisal(const ModelState& state, const Condition& cond,
                                   const BpeVocab& vocab, const std::string& text) {
    WordAlignment align = align_words(vocab, text);
    if (align.spans.empty())
        throw std::invalid_argument("word_surprisal: no words in text");

    std::vector<int> tokens;
    tokens.reserve(align.tokens.size() + 1);
    tokens.push_back(vocab.eot_id);
    tokens.insert(tokens.end(), align.tokens.begin(), align.tokens.end());

    const auto& cfg = state.config;
    const long n = static_cast<long>(tokens.size());
    const int window = cfg.context;
    const int stride = std::max(1, window / 2);

    BiasCache biases;
    std::vector<double> token_surprisal(static_cast<std::size_t>(n), 0.0);
    long s = 0;
    for (;;) {
        const long e = std::min<long>(s + window, n);
        std::span<const int> chunk(tokens.data() + s, static_cast<std::size_t>(e - s));
        auto bias = biases.get(cond, cfg.context, static_cast<int>(e - s));
        Mat logits = forward(state, chunk, bias);
        const long first = (s == 0) ? 1 : s + stride;
        for (long p = first; p < e; ++p) {
            const long row = p - s - 1;
            double m = logits.row(row).maxCoeff();
            double lse = std::log((logits.row(row).array() - m).exp().sum()) + m;
            token_surprisal[static_cast<std::size_t>(p)] =
                lse - logits(row, tokens[static_cast<std::size_t>(p)]);
        }
        if (e == n) break;
        s += stride;
    }

    std::vector<double> result(align.words.size(), 0.0);
    for (const auto& span : align.spans) {
        double sum = 0.0;
        for (int t = span.first_token; t <= span.last_token; ++t)
            sum += token_surprisal[static_cast<std::size_t>(t + 1)];  // +1: eot prefix
        result[static_cast<std::size_t>(span.word_index)] = sum;
    }
    return result;
}

namespace {

constexpr double kVarianceFloor = 1e-12;

struct Design {
    Mat x;
    std::vector<std::string> names;
};

Design build_design(const std::vector<ReadingTimeRecord>& records, Formula formula) {
    std::set<std::string> subjects, tags;
    for (const auto& r : records) {
        subjects.insert(r.subject);
        tags.insert(r.pos_tag);
    }
    if (subjects.size() < 2)
        throw std::invalid_argument("fit_linear: need >= 2 distinct subjects");

    Design d;
    for (const auto& s : subjects) d.names.push_back("subject:" + s);
    // first POS level absorbed into the subject intercepts
    bool first = true;
    for (const auto& t : tags) {
        if (first) {
            first = false;
            continue;
        }
        d.names.push_back("pos:" + t);
    }
    d.names.push_back("word_length");
    d.names.push_back("log_freq");
    if (formula == Formula::Full) d.names.push_back("surprisal");

    const long n = static_cast<long>(records.size());
    const long k = static_cast<long>(d.names.size());
    d.x = Mat::Zero(n, k);
    std::unordered_map<std::string, long> col;
    for (long j = 0; j < k; ++j) col[d.names[static_cast<std::size_t>(j)]] = j;
    for (long i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        d.x(i, col.at("subject:" + r.subject)) = 1.0;
        auto it = col.find("pos:" + r.pos_tag);
        if (it != col.end()) d.x(i, it->second) = 1.0;
        d.x(i, col.at("word_length")) = r.word_length;
        d.x(i, col.at("log_freq")) = r.log_freq;
        if (formula == Formula::Full) d.x(i, col.at("surprisal")) = r.surprisal;
    }
    return d;
}

}  // namespace

RegressionFit fit_linear(const std::vector<ReadingTimeRecord>& records,
                         Formula formula) {
    if (records.empty()) throw std::invalid_argument("fit_linear: no records");
    for (const auto& r : records) {
        if (!(r.rt > 0.0))
            throw std::invalid_argument("fit_linear: non-positive rt for word " +
                                        r.word);
        if (r.word_length < 1)
            throw std::invalid_argument("fit_linear: word_length < 1 for word " +
                                        r.word);
    }
    Design design = build_design(records, formula);
    const long n = design.x.rows();
    const long k = design.x.cols();

    Vec y(n);
    for (long i = 0; i < n; ++i) y(i) = records[static_cast<std::size_t>(i)].rt;

    Eigen::ColPivHouseholderQR<Mat> qr(design.x);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        // name the columns the pivoting pushed past the rank boundary
        std::string collinear;
        auto perm = qr.colsPermutation().indices();
        for (long j = qr.rank(); j < k; ++j) {
            if (!collinear.empty()) collinear += ", ";
            collinear += design.names[static_cast<std::size_t>(perm(j))];
        }
        throw std::invalid_argument("fit_linear: rank-deficient design, collinear: " +
                                    collinear);
    }
    Vec beta = qr.solve(y);

    RegressionFit fit;
    fit.n_observations = static_cast<int>(n);
    fit.residuals = y - design.x * beta;
    for (long j = 0; j < k; ++j)
        fit.coefficients.emplace_back(design.names[static_cast<std::size_t>(j)],
                                      beta(j));
    double sse = fit.residuals.squaredNorm();
    double sigma2 = std::max(sse / static_cast<double>(n), kVarianceFloor);
    fit.log_likelihood = -0.5 * static_cast<double>(n) *
                         (std::log(2.0 * M_PI * sigma2) + 1.0);
    fit.design = formula == Formula::Full ? "full" : "baseline";
    return fit;
}

double delta_ll(const std::vector<ReadingTimeRecord>& records) {
    RegressionFit base = fit_linear(records, Formula::Baseline);
    RegressionFit full = fit_linear(records, Formula::Full);
    return full.log_likelihood - base.log_likelihood;
}

std::string coarse_pos_tag(const std::string& raw) {
    std::string word;
    for (char c : raw)
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'')
            word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (word.empty()) return "PUNCT";

    static const std::set<std::string> determiners = {
        "the", "a", "an", "this", "that", "these", "those", "every", "each",
        "some", "any", "no", "another"};
    static const std::set<std::string> pronouns = {
        "i",    "you",  "he",   "she",  "it",    "we",   "they", "me",  "him",
        "her",  "us",   "them", "my",   "your",  "his",  "its",  "our", "their",
        "mine", "hers", "ours", "theirs", "who", "whom", "what", "which",
        "himself", "herself", "itself", "myself", "yourself", "themselves"};
    static const std::set<std::string> prepositions = {
        "in",  "on",   "at",   "by",    "for",  "with", "about", "against",
        "between", "into", "through", "during", "before", "after", "above",
        "below", "to", "from", "up", "down", "of", "off", "over", "under"};
    static const std::set<std::string> conjunctions = {"and", "or",  "but",
                                                       "nor", "yet", "so",
                                                       "because", "although",
                                                       "while", "if", "when"};
    static const std::set<std::string> auxiliaries = {
        "is",   "am",  "are",  "was", "were", "be",    "been",  "being",
        "have", "has", "had",  "do",  "does", "did",   "will",  "would",
        "can",  "could", "shall", "should", "may", "might", "must", "not"};

    if (determiners.count(word)) return "DT";
    if (pronouns.count(word)) return "PRP";
    if (prepositions.count(word)) return "IN";
    if (conjunctions.count(word)) return "CC";
    if (auxiliaries.count(word)) return "AUX";
    if (std::isdigit(static_cast<unsigned char>(word[0]))) return "CD";

    auto ends_with = [&](const char* suffix) {
        std::size_t len = std::strlen(suffix);
        return word.size() > len && word.compare(word.size() - len, len, suffix) == 0;
    };
    if (ends_with("ly")) return "RB";
    if (ends_with("ing") || ends_with("ed")) return "VB";
    if (std::isupper(static_cast<unsigned char>(raw[0]))) return "NNP";
    if (ends_with("s")) return "NNS";
    return "NN";
}

double FreqTable::log_freq(const std::string& word) const {
    auto it = counts.find(word);
    long c = it == counts.end() ? 0 : it->second;
    long types = static_cast<long>(counts.size()) + 1;
    return std::log(static_cast<double>(c + 1)) -
           std::log(static_cast<double>(total + types));
}

FreqTable build_freq_table(const std::string& corpus_text) {
    FreqTable table;
    std::string word;
    auto flush = [&]() {
        if (!word.empty()) {
            ++table.counts[word];
            ++table.total;
            word.clear();
        }
    };
    for (char raw : corpus_text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c) || c == '\'' || c >= 0x80)
            word += static_cast<char>(std::tolower(c));
        else
            flush();
    }
    flush();
    return table;
}

std::vector<ReadingTimeRecord> load_rt_csv(const std::string& path,
                                           const RtColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reading-time file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty reading-time file: " + path);
    auto header = split_csv_line(line);
    std::unordered_map<std::string, int> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[header[i]] = static_cast<int>(i);

    auto require = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end())
            throw std::runtime_error(path + ": missing column '" + name + "'");
        return it->second;
    };
    const int c_item = require(columns.item);
    const int c_pos = require(columns.position);
    const int c_word = require(columns.word);
    const int c_subj = require(columns.subject);
    const int c_rt = require(columns.rt);
    const int c_len = col.count(columns.word_length) ? col[columns.word_length] : -1;
    const int c_freq = col.count(columns.log_freq) ? col[columns.log_freq] : -1;
    const int c_tag = col.count(columns.pos) ? col[columns.pos] : -1;
    const int c_surp = col.count(columns.surprisal) ? col[columns.surprisal] : -1;

    std::vector<ReadingTimeRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        auto get = [&](int idx) -> const std::string& {
            if (idx < 0 || idx >= static_cast<int>(fields.size()))
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": short row");
            return fields[static_cast<std::size_t>(idx)];
        };
        ReadingTimeRecord r;
        r.item = get(c_item);
        r.position = std::stoi(get(c_pos));
        r.word = get(c_word);
        r.subject = get(c_subj);
        r.rt = std::stod(get(c_rt));
        r.word_length = c_len >= 0 ? std::stoi(get(c_len))
                                   : static_cast<int>(r.word.size());
        if (c_freq >= 0) r.log_freq = std::stod(get(c_freq));
        if (c_tag >= 0) r.pos_tag = get(c_tag);
        if (c_surp >= 0) r.surprisal = std::stod(get(c_surp));
        records.push_back(std::move(r));
    }
    return records;
}

std::string rt_report_json(const std::vector<ReadingTimeRecord>& records,
                           const std::string& pos_source) {
    RegressionFit base = fit_linear(records, Formula::Baseline);
    RegressionFit full = fit_linear(records, Formula::Full);
    nlohmann::json j;
    j["n"] = records.size();
    j["LL_baseline"] = base.log_likelihood;
    j["LL_full"] = full.log_likelihood;
    j["delta_ll"] = full.log_likelihood - base.log_likelihood;
    j["pos_source"] = pos_source;
    j["note"] =
        "random intercepts approximated by dummy-coded fixed intercepts "
        "for subject and POS (OLS)";
    nlohmann::json coefs = nlohmann::json::object();
    for (const auto& [name, value] : full.coefficients) coefs[name] = value;
    j["coefficients"] = coefs;
    return j.dump(2) + "\n";
}

std::string residuals_csv(const std::vector<ReadingTimeRecord>& records) {
    RegressionFit full = fit_linear(records, Formula::Full);
    std::ostringstream out;
    out << "word,log_freq,residual\n";
    for (std::size_t i = 0; i < records.size(); ++i)
        out << csv_escape(records[i].word) << ','
            << fmt_double(records[i].log_freq) << ','
            << fmt_double(full.residuals(static_cast<long>(i))) << '\n';
    return out.str();
}

}  // namespace fmlm
