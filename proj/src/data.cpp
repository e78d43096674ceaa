#include "fmlm/data.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "fmlm/io.hpp"
#include "fmlm/rng.hpp"
#include "json.hpp"

namespace fmlm {

TokenStream ingest(const std::filesystem::path& directory, const BpeVocab& vocab) {
    if (!std::filesystem::is_directory(directory))
        throw std::runtime_error("ingest: not a directory: " + directory.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext == ".txt" || ext == ".train") files.push_back(entry.path());
    }
    if (files.empty())
        throw std::runtime_error("ingest: no .txt/.train files in " +
                                 directory.string());
    std::sort(files.begin(), files.end());

    TokenStream stream;
    stream.vocab_hash = vocab_hash(vocab);
    for (const auto& file : files) {
        std::string text;
        try {
            text = read_file(file);
        } catch (const std::exception& e) {
            throw std::runtime_error("ingest: failed reading " + file.string() +
                                     ": " + e.what());
        }
        std::int64_t start = static_cast<std::int64_t>(stream.ids.size());
        for (int id : encode(vocab, text)) {
            if (id < 0 || id >= 65536)
                throw std::runtime_error("ingest: token id exceeds u16 range in " +
                                         file.string());
            stream.ids.push_back(static_cast<std::uint16_t>(id));
        }
        stream.ids.push_back(static_cast<std::uint16_t>(vocab.eot_id));
        stream.manifest.push_back(
            {file.filename().string(), start,
             static_cast<std::int64_t>(stream.ids.size()) - start});
    }
    return stream;
}

void save_token_cache(const TokenStream& stream, const std::filesystem::path& path) {
    atomic_write_bytes(path, stream.ids.data(),
                       stream.ids.size() * sizeof(std::uint16_t));
    nlohmann::json side;
    side["vocab_hash"] = stream.vocab_hash;
    side["length"] = stream.ids.size();
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& m : stream.manifest)
        manifest.push_back({{"file", m.file},
                            {"token_start", m.token_start},
                            {"token_count", m.token_count}});
    side["manifest"] = manifest;
    atomic_write(path.string() + ".json", side.dump(2) + "\n");
}

TokenStream load_token_cache(const std::filesystem::path& path) {
    TokenStream stream;
    std::string blob = read_file(path);
    if (blob.size() % 2 != 0)
        throw std::runtime_error("token cache: odd byte count in " + path.string());
    stream.ids.resize(blob.size() / 2);
    std::memcpy(stream.ids.data(), blob.data(), blob.size());
    auto side = nlohmann::json::parse(read_file(path.string() + ".json"));
    stream.vocab_hash = side.at("vocab_hash");
    if (side.at("length").get<std::size_t>() != stream.ids.size())
        throw std::runtime_error("token cache: sidecar length mismatch for " +
                                 path.string());
    for (const auto& m : side.at("manifest"))
        stream.manifest.push_back(
            {m.at("file"), m.at("token_start"), m.at("token_count")});
    return stream;
}

Split make_split(const TokenStream& stream, double val_fraction) {
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw std::invalid_argument("split: val_fraction must be in [0, 1)");
    const auto n = static_cast<std::int64_t>(stream.ids.size());
    std::int64_t val_len = static_cast<std::int64_t>(
        static_cast<double>(n) * val_fraction);
    if (val_fraction > 0.0 && val_len == 0 && n > 1) val_len = 1;
    return Split{0, n - val_len, n - val_len, n};
}

Batch sample_batch(const BatchPlan& plan, const TokenStream& stream,
                   std::int64_t begin, std::int64_t end, std::int64_t step) {
    if (step < 0 || (plan.steps > 0 && step >= plan.steps))
        throw std::invalid_argument("sample_batch: step out of range");
    const std::int64_t span = end - begin;
    if (span < plan.context + 1)
        throw std::invalid_argument(
            "sample_batch: stream segment shorter than context+1");
    const std::int64_t max_offset = span - plan.context - 1;
    Batch batch;
    batch.inputs.resize(plan.batch_size);
    batch.targets.resize(plan.batch_size);
    for (int b = 0; b < plan.batch_size; ++b) {
        std::uint64_t counter =
            hash_combine(static_cast<std::uint64_t>(step),
                         static_cast<std::uint64_t>(b));
        std::int64_t offset =
            begin + static_cast<std::int64_t>(
                        keyed_u64(plan.data_seed, counter) %
                        static_cast<std::uint64_t>(max_offset + 1));
        auto& in = batch.inputs[b];
        auto& tg = batch.targets[b];
        in.resize(plan.context);
        tg.resize(plan.context);
        for (int t = 0; t < plan.context; ++t) {
            in[t] = stream.ids[static_cast<std::size_t>(offset + t)];
            tg[t] = stream.ids[static_cast<std::size_t>(offset + t + 1)];
        }
    }
    return batch;
}

}  // namespace fmlm
