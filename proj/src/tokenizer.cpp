#include "fmlm/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fmlm/io.hpp"
#include "json.hpp"

namespace fmlm {

namespace {

enum class ByteClass { Space, Newline, Letter, Digit, Other };

ByteClass classify(unsigned char c) {
    if (c == ' ' || c == '\t') return ByteClass::Space;
    if (c == '\n' || c == '\r') return ByteClass::Newline;
    if (std::isalpha(c) || c >= 0x80) return ByteClass::Letter;  // UTF-8 tails count as letters
    if (std::isdigit(c)) return ByteClass::Digit;
    return ByteClass::Other;
}

// Split text into pre-tokenization chunks; merges never cross chunk
// boundaries. A single space is attached to the following chunk, the
// GPT-2 convention, so " the" becomes one unit.
std::vector<std::string> pre_tokenize(const std::string& text) {
    std::vector<std::string> chunks;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t start = i;
        ByteClass c0 = classify(static_cast<unsigned char>(text[i]));
        if (c0 == ByteClass::Space || c0 == ByteClass::Newline) {
            while (i < n) {
                ByteClass c = classify(static_cast<unsigned char>(text[i]));
                if (c != ByteClass::Space && c != ByteClass::Newline) break;
                ++i;
            }
            // hand the final single space to the next word
            if (i < n && text[i - 1] == ' ') {
                if (i - 1 > start) chunks.push_back(text.substr(start, i - 1 - start));
                start = i - 1;
                ByteClass c = classify(static_cast<unsigned char>(text[i]));
                ++i;
                while (i < n &&
                       classify(static_cast<unsigned char>(text[i])) == c)
                    ++i;
                chunks.push_back(text.substr(start, i - start));
            } else {
                chunks.push_back(text.substr(start, i - start));
            }
        } else {
            ++i;
            while (i < n && classify(static_cast<unsigned char>(text[i])) == c0) ++i;
            chunks.push_back(text.substr(start, i - start));
        }
    }
    return chunks;
}

BpeVocab base_vocab() {
    BpeVocab v;
    v.id_to_sym.reserve(kBpeBaseAlphabet);
    for (int b = 0; b < 256; ++b) {
        std::string s(1, static_cast<char>(b));
        v.sym_to_id[s] = b;
        v.id_to_sym.push_back(s);
    }
    v.id_to_sym.push_back("<|endoftext|>");
    v.sym_to_id["<|endoftext|>"] = 256;
    v.eot_id = 256;
    return v;
}

}  // namespace

BpeVocab train_bpe(const std::string& corpus, int vocab_size) {
    if (corpus.empty()) throw std::invalid_argument("train_bpe: empty corpus");
    if (vocab_size < kBpeBaseAlphabet)
        throw std::invalid_argument("train_bpe: vocab_size below base alphabet size");

    BpeVocab vocab = base_vocab();

    // aggregate identical chunks, keeping first-seen order
    std::vector<std::vector<std::string>> chunk_syms;
    std::vector<long> chunk_count;
    {
        std::unordered_map<std::string, std::size_t> index;
        for (auto& chunk : pre_tokenize(corpus)) {
            auto it = index.find(chunk);
            if (it != index.end()) {
                ++chunk_count[it->second];
                continue;
            }
            index.emplace(chunk, chunk_syms.size());
            std::vector<std::string> syms;
            syms.reserve(chunk.size());
            for (char c : chunk) syms.emplace_back(1, c);
            chunk_syms.push_back(std::move(syms));
            chunk_count.push_back(1);
        }
    }

    const int target_merges = vocab_size - kBpeBaseAlphabet;
    using Pair = std::pair<std::string, std::string>;
    for (int m = 0; m < target_merges; ++m) {
        std::map<Pair, long> counts;
        std::map<Pair, long> first_seen;
        long order = 0;
        for (std::size_t c = 0; c < chunk_syms.size(); ++c) {
            const auto& syms = chunk_syms[c];
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                Pair p{syms[i], syms[i + 1]};
                counts[p] += chunk_count[c];
                first_seen.try_emplace(p, order++);
                ++order;
            }
        }
        if (counts.empty()) break;
        Pair best;
        long best_count = -1, best_order = 0;
        for (const auto& [p, cnt] : counts) {
            long seen = first_seen[p];
            if (cnt > best_count || (cnt == best_count && seen < best_order)) {
                best = p;
                best_count = cnt;
                best_order = seen;
            }
        }
        std::string merged = best.first + best.second;
        vocab.merges.push_back(best);
        vocab.sym_to_id[merged] = vocab.size();
        vocab.id_to_sym.push_back(merged);
        // apply left-to-right, non-overlapping
        for (auto& syms : chunk_syms) {
            std::vector<std::string> out;
            out.reserve(syms.size());
            for (std::size_t i = 0; i < syms.size(); ++i) {
                if (i + 1 < syms.size() && syms[i] == best.first &&
                    syms[i + 1] == best.second) {
                    out.push_back(merged);
                    ++i;
                } else {
                    out.push_back(std::move(syms[i]));
                }
            }
            syms = std::move(out);
        }
    }
    return vocab;
}

namespace {

struct PairHash {
    std::size_t operator()(const std::pair<std::string, std::string>& p) const {
        return fnv1a64(p.first) * 31 ^ fnv1a64(p.second);
    }
};

std::vector<std::string> apply_merges(
    const BpeVocab& vocab, const std::string& chunk,
    const std::unordered_map<std::pair<std::string, std::string>, int, PairHash>&
        ranks) {
    std::vector<std::string> syms;
    syms.reserve(chunk.size());
    for (char c : chunk) syms.emplace_back(1, c);
    while (syms.size() > 1) {
        int best_rank = -1;
        std::size_t best_pos = 0;
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            auto it = ranks.find({syms[i], syms[i + 1]});
            if (it != ranks.end() && (best_rank < 0 || it->second < best_rank)) {
                best_rank = it->second;
                best_pos = i;
            }
        }
        if (best_rank < 0) break;
        syms[best_pos] = syms[best_pos] + syms[best_pos + 1];
        syms.erase(syms.begin() + static_cast<long>(best_pos) + 1);
    }
    return syms;
}

}  // namespace

std::vector<int> encode_with_spans(const BpeVocab& vocab, const std::string& text,
                                   std::vector<std::pair<int, int>>* spans) {
    std::unordered_map<std::pair<std::string, std::string>, int, PairHash> ranks;
    for (std::size_t i = 0; i < vocab.merges.size(); ++i)
        ranks.emplace(vocab.merges[i], static_cast<int>(i));

    std::vector<int> ids;
    if (spans) spans->clear();
    int offset = 0;
    for (const auto& chunk : pre_tokenize(text)) {
        for (const auto& sym : apply_merges(vocab, chunk, ranks)) {
            auto it = vocab.sym_to_id.find(sym);
            if (it == vocab.sym_to_id.end())
                throw std::logic_error("encode: symbol missing from vocab");
            ids.push_back(it->second);
            if (spans)
                spans->emplace_back(offset, offset + static_cast<int>(sym.size()));
            offset += static_cast<int>(sym.size());
        }
    }
    return ids;
}

std::vector<int> encode(const BpeVocab& vocab, const std::string& text) {
    return encode_with_spans(vocab, text, nullptr);
}

std::string decode(const BpeVocab& vocab, const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= vocab.size())
            throw std::invalid_argument("decode: unknown id " + std::to_string(id));
        if (id == vocab.eot_id) continue;  // document separator, not text
        out += vocab.id_to_sym[static_cast<std::size_t>(id)];
    }
    return out;
}

WordAlignment align_words(const BpeVocab& vocab, const std::string& text) {
    WordAlignment align;
    std::vector<std::pair<int, int>> spans;
    align.tokens = encode_with_spans(vocab, text, &spans);

    // whitespace-delimited words with byte ranges
    std::vector<std::pair<int, int>> word_ranges;
    const int n = static_cast<int>(text.size());
    int i = 0;
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        int start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        word_ranges.emplace_back(start, i);
        align.words.push_back(text.substr(start, i - start));
    }

    int word = 0;
    for (std::size_t t = 0; t < align.tokens.size(); ++t) {
        auto [s, e] = spans[t];
        int first_solid = -1;
        for (int b = s; b < e; ++b) {
            if (!std::isspace(static_cast<unsigned char>(text[b]))) {
                first_solid = b;
                break;
            }
        }
        if (first_solid < 0) continue;  // pure-whitespace token
        while (word < static_cast<int>(word_ranges.size()) &&
               first_solid >= word_ranges[word].second)
            ++word;
        if (word >= static_cast<int>(word_ranges.size())) break;
        if (!align.spans.empty() && align.spans.back().word_index == word) {
            align.spans.back().last_token = static_cast<int>(t);
        } else {
            align.spans.push_back({word, static_cast<int>(t), static_cast<int>(t)});
        }
    }
    return align;
}

namespace {

std::string escape_sym(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (c <= 0x20 || c >= 0x7f || c == '\\') {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\x%02x", c);
            out += buf;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string unescape_sym(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 3 < s.size() && s[i + 1] == 'x') {
            out += static_cast<char>(std::stoi(s.substr(i + 2, 2), nullptr, 16));
            i += 3;
        } else {
            out += s[i];
        }
    }
    return out;
}

}  // namespace

void save_vocab(const BpeVocab& vocab, const std::string& path_prefix) {
    std::ostringstream merges;
    for (const auto& [a, b] : vocab.merges)
        merges << escape_sym(a) << ' ' << escape_sym(b) << '\n';
    atomic_write(path_prefix + ".merges.txt", merges.str());

    nlohmann::json table;
    table["eot_id"] = vocab.eot_id;
    table["size"] = vocab.size();
    nlohmann::json syms = nlohmann::json::object();
    // only merged symbols need listing; bytes and eot are implicit
    for (int id = kBpeBaseAlphabet; id < vocab.size(); ++id)
        syms[escape_sym(vocab.id_to_sym[static_cast<std::size_t>(id)])] = id;
    table["symbols"] = syms;
    atomic_write(path_prefix + ".vocab.json", table.dump(2) + "\n");
}

BpeVocab load_vocab(const std::string& path_prefix) {
    BpeVocab vocab = base_vocab();
    std::istringstream in(read_file(path_prefix + ".merges.txt"));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto sp = line.find(' ');
        if (sp == std::string::npos)
            throw std::runtime_error("load_vocab: malformed merge line: " + line);
        std::string a = unescape_sym(line.substr(0, sp));
        std::string b = unescape_sym(line.substr(sp + 1));
        vocab.merges.emplace_back(a, b);
        std::string merged = a + b;
        vocab.sym_to_id[merged] = vocab.size();
        vocab.id_to_sym.push_back(merged);
    }
    auto table = nlohmann::json::parse(read_file(path_prefix + ".vocab.json"));
    if (table.at("size").get<int>() != vocab.size())
        throw std::runtime_error("load_vocab: id table size disagrees with merges");
    return vocab;
}

std::uint64_t vocab_hash(const BpeVocab& vocab) {
    std::string acc;
    for (const auto& [a, b] : vocab.merges) {
        acc += a;
        acc += '\x01';
        acc += b;
        acc += '\x02';
    }
    return fnv1a64(acc);
}

}  // namespace fmlm
