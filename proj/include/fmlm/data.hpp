#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fmlm/tokenizer.hpp"

namespace fmlm {

struct SourceEntry {
    std::string file;
    std::int64_t token_start;
    std::int64_t token_count;  // includes the trailing end-of-text separator
};

struct TokenStream {
    std::vector<std::uint16_t> ids;
    std::vector<SourceEntry> manifest;
    std::uint64_t vocab_hash = 0;
};

// Tokenizes every .txt/.train file in the directory (sorted by name),
// appending an end-of-text separator after each file.
TokenStream ingest(const std::filesystem::path& directory, const BpeVocab& vocab);

// flat little-endian u16 ids plus a JSON sidecar (vocab hash, length, manifest)
void save_token_cache(const TokenStream& stream, const std::filesystem::path& path);
TokenStream load_token_cache(const std::filesystem::path& path);

// Contiguous split: the final `val_fraction` of the stream is validation.
struct Split {
    std::int64_t train_begin, train_end;  // [begin, end)
    std::int64_t val_begin, val_end;
};
Split make_split(const TokenStream& stream, double val_fraction);

struct BatchPlan {
    std::uint64_t data_seed = 0;
    int batch_size = 32;
    int context = 256;
    std::int64_t steps = 0;
};

struct Batch {
    // batch_size rows of context ints each; targets are inputs shifted by one
    std::vector<std::vector<int>> inputs;
    std::vector<std::vector<int>> targets;
};

// Offsets come from a counter-based generator keyed by (data_seed, step,
// row), so step -> batch is a pure function and paired runs see
// identical data regardless of condition.
Batch sample_batch(const BatchPlan& plan, const TokenStream& stream,
                   std::int64_t begin, std::int64_t end, std::int64_t step);

}  // namespace fmlm
