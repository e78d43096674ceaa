#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fmlm {

// Byte-level BPE: every byte is a base symbol, so any input round-trips
// losslessly. Id layout: [0, 256) raw bytes, 256 end-of-text, then one
// id per merge in training order.
struct BpeVocab {
    std::vector<std::pair<std::string, std::string>> merges;
    std::vector<std::string> id_to_sym;
    std::unordered_map<std::string, int> sym_to_id;
    int eot_id = 256;

    int size() const { return static_cast<int>(id_to_sym.size()); }
};

constexpr int kBpeBaseAlphabet = 257;  // 256 bytes + end-of-text

// Deterministic merge training: most frequent pair wins, ties broken by
// first appearance in the corpus scan order. Stops early if the corpus
// runs out of pairs before vocab_size is reached.
BpeVocab train_bpe(const std::string& corpus, int vocab_size);

std::vector<int> encode(const BpeVocab& vocab, const std::string& text);
// spans (byte_start, byte_end) of each emitted token, for word alignment
std::vector<int> encode_with_spans(const BpeVocab& vocab, const std::string& text,
                                   std::vector<std::pair<int, int>>* spans);
std::string decode(const BpeVocab& vocab, const std::vector<int>& ids);

struct WordSpan {
    int word_index;
    int first_token;
    int last_token;  // inclusive
};

struct WordAlignment {
    std::vector<std::string> words;  // whitespace-delimited
    std::vector<WordSpan> spans;     // one per word that received tokens
    std::vector<int> tokens;
};

// Whitespace word segmentation; each non-whitespace token is assigned to
// the word containing its first non-whitespace byte.
WordAlignment align_words(const BpeVocab& vocab, const std::string& text);

// merges as a text file (escaped bytes, one merge per line) plus a JSON
// id table
void save_vocab(const BpeVocab& vocab, const std::string& path_prefix);
BpeVocab load_vocab(const std::string& path_prefix);

std::uint64_t vocab_hash(const BpeVocab& vocab);

}  // namespace fmlm
