// fmlm: command-line entry point for tokenizer training, corpus
// ingestion, training grids, evaluations, analyses, statistics, and
// figure emission. Subcommands read an ExperimentManifest (JSON,
// versioned schema); flags override manifest fields one-for-one.
//
// Exit codes: 0 success, 1 runtime error, 2 invalid manifest or usage,
// 3 partial grid failure, 4 total grid failure.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fmlm/data.hpp"
#include "fmlm/eval_pairs.hpp"
#include "fmlm/freq_analysis.hpp"
#include "fmlm/io.hpp"
#include "fmlm/model.hpp"
#include "fmlm/retention.hpp"
#include "fmlm/stats.hpp"
#include "fmlm/surprisal.hpp"
#include "fmlm/svg.hpp"
#include "fmlm/tokenizer.hpp"
#include "fmlm/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fmlm;

namespace {

constexpr const char* kCodeVersion = "1.0.0";
constexpr int kSchemaVersion = 1;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitGridPartial = 3;
constexpr int kExitGridTotal = 4;

struct InvalidManifest : std::runtime_error {
    std::vector<std::string> violations;
    explicit InvalidManifest(std::vector<std::string> v)
        : std::runtime_error("invalid manifest"), violations(std::move(v)) {}
};

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016" PRIx64, v);
    return buf;
}

// Flag overrides; empty/negative means "not given".
struct Overrides {
    std::string manifest_path = "manifest.json";
    std::string out;
    int jobs = 1;
    std::int64_t seed = -1;
    std::string condition;
    std::int64_t steps = -1;
    std::string format;
    std::string checkpoint;
    std::string metric;
    std::string cond_a, cond_b;
};

struct Manifest {
    json doc;
    std::uint64_t hash = 0;
    fs::path base;  // directory of the manifest file; relative paths resolve here

    fs::path resolve(const std::string& p) const {
        fs::path path(p);
        return path.is_absolute() ? path : base / path;
    }
};

Manifest load_manifest(const std::string& path) {
    Manifest m;
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception&) {
        throw InvalidManifest({"manifest file not found: " + path});
    }
    try {
        m.doc = json::parse(text);
    } catch (const std::exception& e) {
        throw InvalidManifest({std::string("manifest is not valid JSON: ") + e.what()});
    }
    m.hash = fnv1a64(text);
    m.base = fs::absolute(path).parent_path();
    return m;
}

// Collects every violation instead of stopping at the first.
void validate_manifest(const Manifest& m, std::vector<std::string>& violations) {
    const json& d = m.doc;
    if (!d.is_object()) {
        violations.push_back("manifest root must be an object");
        return;
    }
    if (!d.contains("schema_version") || !d["schema_version"].is_number_integer())
        violations.push_back("missing integer field schema_version");
    else if (d["schema_version"] != kSchemaVersion)
        violations.push_back("unsupported schema_version " +
                             d["schema_version"].dump() + " (expected " +
                             std::to_string(kSchemaVersion) + ")");
    if (!d.contains("paths") || !d["paths"].is_object())
        violations.push_back("missing object field paths");
    if (d.contains("grid")) {
        const json& g = d["grid"];
        if (!g.contains("conditions") || !g["conditions"].is_array() ||
            g["conditions"].empty())
            violations.push_back("grid.conditions must be a non-empty array");
        else
            for (const auto& c : g["conditions"]) {
                try {
                    parse_condition(c.get<std::string>());
                } catch (const std::exception& e) {
                    violations.push_back("grid.conditions: " + std::string(e.what()));
                }
            }
        if (!g.contains("seeds") || !g["seeds"].is_array() || g["seeds"].empty())
            violations.push_back("grid.seeds must be a non-empty array");
    }
    if (d.contains("model")) {
        try {
            ModelConfig cfg;
            const json& mj = d["model"];
            cfg.layers = mj.value("layers", cfg.layers);
            cfg.heads = mj.value("heads", cfg.heads);
            cfg.width = mj.value("width", cfg.width);
            cfg.vocab = mj.value("vocab", cfg.vocab);
            cfg.context = mj.value("context", cfg.context);
            cfg.validate();
        } catch (const std::exception& e) {
            violations.push_back("model: " + std::string(e.what()));
        }
    }
}

void require_valid(const Manifest& m) {
    std::vector<std::string> violations;
    validate_manifest(m, violations);
    if (!violations.empty()) throw InvalidManifest(std::move(violations));
}

std::string path_field(const Manifest& m, const std::string& name,
                       const std::string& fallback = "") {
    if (m.doc.contains("paths") && m.doc["paths"].contains(name))
        return m.doc["paths"][name].get<std::string>();
    return fallback;
}

fs::path out_dir(const Manifest& m, const Overrides& ov) {
    if (!ov.out.empty()) return ov.out;
    std::string p = path_field(m, "out", "out");
    return m.resolve(p);
}

ModelConfig model_config(const Manifest& m) {
    ModelConfig cfg;
    if (m.doc.contains("model")) {
        const json& mj = m.doc["model"];
        cfg.layers = mj.value("layers", cfg.layers);
        cfg.heads = mj.value("heads", cfg.heads);
        cfg.width = mj.value("width", cfg.width);
        cfg.vocab = mj.value("vocab", cfg.vocab);
        cfg.context = mj.value("context", cfg.context);
    }
    cfg.validate();
    return cfg;
}

RunSpec run_spec(const Manifest& m, const Overrides& ov) {
    RunSpec spec;
    spec.model = model_config(m);
    if (m.doc.contains("training")) {
        const json& t = m.doc["training"];
        spec.steps = t.value("steps", spec.steps);
        spec.batch_size = t.value("batch_size", spec.batch_size);
        spec.eval_interval = t.value("eval_interval", spec.eval_interval);
        spec.eval_sequences = t.value("eval_sequences", spec.eval_sequences);
        spec.val_fraction = t.value("val_fraction", spec.val_fraction);
        spec.checkpoint_interval =
            t.value("checkpoint_interval", spec.checkpoint_interval);
    }
    if (m.doc.contains("optimizer")) {
        const json& o = m.doc["optimizer"];
        spec.opt.peak_lr = o.value("peak_lr", spec.opt.peak_lr);
        spec.opt.weight_decay = o.value("weight_decay", spec.opt.weight_decay);
        spec.opt.beta1 = o.value("beta1", spec.opt.beta1);
        spec.opt.beta2 = o.value("beta2", spec.opt.beta2);
        spec.opt.grad_clip = o.value("grad_clip", spec.opt.grad_clip);
        spec.opt.warmup_frac = o.value("warmup_frac", spec.opt.warmup_frac);
        spec.opt.min_lr_frac = o.value("min_lr_frac", spec.opt.min_lr_frac);
    }
    if (ov.steps >= 0) spec.steps = ov.steps;
    if (ov.seed >= 0) spec.seed = static_cast<std::uint64_t>(ov.seed);
    if (!ov.condition.empty()) spec.condition = parse_condition(ov.condition);
    return spec;
}

void write_provenance(const fs::path& dir, const Manifest& m,
                      std::optional<std::uint64_t> vocab_hash,
                      const std::vector<std::uint64_t>& seeds) {
    json p;
    p["manifest_hash"] = hex64(m.hash);
    p["vocab_hash"] = vocab_hash ? json(hex64(*vocab_hash)) : json(nullptr);
    p["code_version"] = kCodeVersion;
    p["seeds"] = seeds;
    fs::create_directories(dir);
    atomic_write(dir / "provenance.json", p.dump(2) + "\n");
}

std::string corpus_text(const Manifest& m) {
    fs::path dir = m.resolve(path_field(m, "corpus_dir", "corpus"));
    if (!fs::is_directory(dir))
        throw std::runtime_error("corpus_dir is not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext == ".txt" || ext == ".train") files.push_back(entry.path());
    }
    if (files.empty())
        throw std::runtime_error("no .txt/.train files in " + dir.string());
    std::sort(files.begin(), files.end());
    std::string text;
    for (const auto& f : files) text += read_file(f);
    return text;
}

fs::path vocab_prefix(const Manifest& m) {
    return m.resolve(path_field(m, "vocab", "out/vocab"));
}

fs::path token_cache_path(const Manifest& m) {
    return m.resolve(path_field(m, "token_cache", "out/tokens.bin"));
}

BpeVocab load_manifest_vocab(const Manifest& m) {
    return load_vocab(vocab_prefix(m).string());
}

ModelState load_model(const Manifest& m, const Overrides& ov) {
    std::string ckpt = ov.checkpoint;
    if (ckpt.empty() && m.doc.contains("eval"))
        ckpt = m.doc["eval"].value("checkpoint", "");
    if (ckpt.empty())
        throw std::runtime_error(
            "no checkpoint given (flag --checkpoint or manifest eval.checkpoint)");
    return load_checkpoint(m.resolve(ckpt).string()).state;
}

Condition eval_condition(const Manifest& m, const Overrides& ov) {
    if (!ov.condition.empty()) return parse_condition(ov.condition);
    if (m.doc.contains("eval") && m.doc["eval"].contains("condition"))
        return parse_condition(m.doc["eval"]["condition"].get<std::string>());
    return Perfect{};
}

// ---------------------------------------------------------------- tokenize

int cmd_tokenize(const Manifest& m, const Overrides& ov) {
    int vocab_size = 8000;
    if (m.doc.contains("tokenizer"))
        vocab_size = m.doc["tokenizer"].value("vocab_size", vocab_size);
    std::string text = corpus_text(m);
    BpeVocab vocab = train_bpe(text, vocab_size);

    fs::path prefix = vocab_prefix(m);
    fs::create_directories(prefix.parent_path());
    if (fs::exists(prefix.string() + ".merges.txt")) {
        try {
            if (vocab_hash(load_vocab(prefix.string())) == vocab_hash(vocab)) {
                std::cout << "tokenize: vocabulary up to date at " << prefix.string()
                          << "\n";
                return kExitOk;
            }
        } catch (const std::exception&) {
            // unreadable previous output: rewrite below
        }
    }
    save_vocab(vocab, prefix.string());
    write_provenance(prefix.parent_path(), m, vocab_hash(vocab), {});
    std::cout << "tokenize: " << vocab.size() << " symbols ("
              << vocab.merges.size() << " merges), hash "
              << hex64(vocab_hash(vocab)) << "\n";
    (void)ov;
    return kExitOk;
}

// ------------------------------------------------------------------ ingest

int cmd_ingest(const Manifest& m, const Overrides& ov) {
    BpeVocab vocab = load_manifest_vocab(m);
    fs::path dir = m.resolve(path_field(m, "corpus_dir", "corpus"));
    TokenStream stream = ingest(dir, vocab);
    fs::path cache = token_cache_path(m);
    fs::create_directories(cache.parent_path());
    save_token_cache(stream, cache);
    write_provenance(cache.parent_path(), m, stream.vocab_hash, {});
    std::cout << "ingest: " << stream.ids.size() << " tokens from "
              << stream.manifest.size() << " files -> " << cache.string() << "\n";
    (void)ov;
    return kExitOk;
}

TokenStream load_stream(const Manifest& m) {
    TokenStream stream = load_token_cache(token_cache_path(m));
    if (fs::exists(vocab_prefix(m).string() + ".merges.txt")) {
        BpeVocab vocab = load_manifest_vocab(m);
        if (vocab_hash(vocab) != stream.vocab_hash)
            throw std::runtime_error(
                "token cache was built with a different vocabulary");
    }
    return stream;
}

// ------------------------------------------------------------------- train

int cmd_train(const Manifest& m, const Overrides& ov) {
    RunSpec spec = run_spec(m, ov);
    TokenStream stream = load_stream(m);
    fs::path dir = ov.out.empty()
                       ? out_dir(m, ov) / "train" /
                             (condition_spec(spec.condition) + "_seed" +
                              std::to_string(spec.seed))
                       : fs::path(ov.out);
    RunResult res = train(spec, stream, dir);
    write_provenance(dir, m, stream.vocab_hash, {spec.seed});
    if (res.failed) {
        std::cerr << json{{"error", res.error}, {"command", "train"}}.dump() << "\n";
        return kExitError;
    }
    std::cout << "train: " << condition_spec(spec.condition) << " seed "
              << spec.seed << ", final val loss " << fmt_double(res.final_val_loss)
              << "\n";
    return kExitOk;
}

// -------------------------------------------------------------------- grid

int cmd_grid(const Manifest& m, const Overrides& ov) {
    if (!m.doc.contains("grid"))
        throw InvalidManifest({"grid subcommand requires a grid section"});
    ExperimentGrid grid;
    for (const auto& c : m.doc["grid"]["conditions"])
        grid.conditions.push_back(parse_condition(c.get<std::string>()));
    for (const auto& s : m.doc["grid"]["seeds"])
        grid.seeds.push_back(s.get<std::uint64_t>());
    grid.shared = run_spec(m, ov);

    TokenStream stream = load_stream(m);
    fs::path dir = ov.out.empty() ? out_dir(m, ov) / "grid" : fs::path(ov.out);
    auto cells = run_grid(grid, stream, dir, ov.jobs);
    write_provenance(dir, m, stream.vocab_hash, grid.seeds);

    int failed = 0;
    for (const auto& cell : cells) {
        if (cell.result.failed) {
            ++failed;
            std::cerr << json{{"error", cell.result.error},
                              {"command", "grid"},
                              {"condition", condition_spec(cell.condition)},
                              {"seed", cell.seed}}
                             .dump()
                      << "\n";
        }
    }
    std::cout << "grid: " << (cells.size() - static_cast<std::size_t>(failed))
              << "/" << cells.size() << " cells ok -> " << dir.string() << "\n";
    if (failed == 0) return kExitOk;
    return failed == static_cast<int>(cells.size()) ? kExitGridTotal
                                                    : kExitGridPartial;
}

// -------------------------------------------------------------- eval-pairs

int cmd_eval_pairs(const Manifest& m, const Overrides& ov) {
    ModelState state = load_model(m, ov);
    BpeVocab vocab = load_manifest_vocab(m);
    std::string pairs_path;
    if (m.doc.contains("eval")) pairs_path = m.doc["eval"].value("pairs", "");
    if (pairs_path.empty())
        throw std::runtime_error("manifest eval.pairs is required for eval-pairs");
    auto pairs = load_pairs_jsonl(m.resolve(pairs_path).string());
    Condition cond = eval_condition(m, ov);

    PairScores scores = score_pairs(state, cond, vocab, pairs);
    fs::path dir = out_dir(m, ov) / "eval";
    fs::create_directories(dir);
    atomic_write(dir / "pair_scores.csv", pair_scores_csv(scores));
    atomic_write(dir / "pair_scores.json", pair_scores_json(scores));
    write_provenance(dir, m, vocab_hash(vocab), {state.init_seed});
    for (const auto& w : scores.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "eval-pairs: " << condition_spec(cond) << " overall "
              << fmt_double(scores.overall) << " over " << scores.subtasks.size()
              << " subtasks\n";
    return kExitOk;
}

// --------------------------------------------------------------- surprisal

std::string augmented_rt_csv(const std::vector<ReadingTimeRecord>& records) {
    std::ostringstream out;
    out << "item,zone,word,subject,rt,word_length,log_freq,pos,surprisal\n";
    for (const auto& r : records)
        out << csv_escape(r.item) << ',' << r.position << ',' << csv_escape(r.word)
            << ',' << csv_escape(r.subject) << ',' << fmt_double(r.rt) << ','
            << r.word_length << ',' << fmt_double(r.log_freq) << ','
            << csv_escape(r.pos_tag) << ',' << fmt_double(r.surprisal) << '\n';
    return out.str();
}

int cmd_surprisal(const Manifest& m, const Overrides& ov) {
    ModelState state = load_model(m, ov);
    BpeVocab vocab = load_manifest_vocab(m);
    std::string rt_path;
    if (m.doc.contains("eval")) rt_path = m.doc["eval"].value("reading_times", "");
    if (rt_path.empty())
        throw std::runtime_error(
            "manifest eval.reading_times is required for surprisal");
    const std::string resolved = m.resolve(rt_path).string();
    auto records = load_rt_csv(resolved, RtColumnMap{});
    if (records.empty()) throw std::runtime_error("no reading-time rows in " + rt_path);

    // column presence decides whether frequencies and tags are derived
    const std::string rt_text = read_file(resolved);
    auto header = split_csv_line(rt_text.substr(0, rt_text.find('\n')));
    std::set<std::string> cols(header.begin(), header.end());
    const bool has_freq = cols.count("log_freq") > 0;
    const bool has_pos = cols.count("pos") > 0;

    std::optional<FreqTable> freq;
    if (!has_freq) freq = build_freq_table(corpus_text(m));

    Condition cond = eval_condition(m, ov);

    // one surprisal pass per item: join that item's words in position
    // order (first subject encountered defines the text)
    std::map<std::string, std::map<int, std::string>> item_words;
    for (const auto& r : records) item_words[r.item].emplace(r.position, r.word);
    std::map<std::string, std::map<int, double>> item_surprisal;
    for (const auto& [item, words] : item_words) {
        std::string text;
        for (const auto& [pos, word] : words) {
            if (!text.empty()) text += ' ';
            text += word;
        }
        auto surp = word_surprisal(state, cond, vocab, text);
        if (surp.size() != words.size())
            throw std::runtime_error("surprisal/word count mismatch for item " + item);
        std::size_t i = 0;
        for (const auto& [pos, word] : words)
            item_surprisal[item][pos] = surp[i++];
    }
    for (auto& r : records) {
        r.surprisal = item_surprisal.at(r.item).at(r.position);
        if (!has_freq) r.log_freq = freq->log_freq(r.word);
        if (!has_pos) r.pos_tag = coarse_pos_tag(r.word);
    }

    fs::path dir = out_dir(m, ov) / "rt";
    fs::create_directories(dir);
    atomic_write(dir / "rt_with_surprisal.csv", augmented_rt_csv(records));
    json meta;
    meta["condition"] = condition_spec(cond);
    meta["pos_source"] = has_pos ? "column" : "coarse_tagger";
    meta["freq_source"] = has_freq ? "column" : "corpus_unigram";
    meta["n"] = records.size();
    atomic_write(dir / "surprisal_meta.json", meta.dump(2) + "\n");
    write_provenance(dir, m, vocab_hash(vocab), {state.init_seed});
    std::cout << "surprisal: " << records.size() << " rows under "
              << condition_spec(cond) << " -> " << (dir / "rt_with_surprisal.csv")
              << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ rt-fit

int cmd_rt_fit(const Manifest& m, const Overrides& ov) {
    fs::path dir = out_dir(m, ov) / "rt";
    fs::path augmented = dir / "rt_with_surprisal.csv";
    if (!fs::exists(augmented))
        throw std::runtime_error("run the surprisal subcommand first: missing " +
                                 augmented.string());
    auto records = load_rt_csv(augmented.string(), RtColumnMap{});
    std::string pos_source = "column";
    fs::path meta_path = dir / "surprisal_meta.json";
    if (fs::exists(meta_path))
        pos_source = json::parse(read_file(meta_path)).value("pos_source", pos_source);

    atomic_write(dir / "rt_report.json", rt_report_json(records, pos_source));
    atomic_write(dir / "residuals.csv", residuals_csv(records));
    double dll = delta_ll(records);
    std::cout << "rt-fit: n = " << records.size() << ", delta LL = "
              << fmt_double(dll) << "\n";
    return kExitOk;
}

// --------------------------------------------------------- freq-analysis

int cmd_freq_analysis(const Manifest& m, const Overrides& ov) {
    fs::path dir = out_dir(m, ov) / "rt";
    fs::path residuals_path = dir / "residuals.csv";
    if (!fs::exists(residuals_path))
        throw std::runtime_error("run the rt-fit subcommand first: missing " +
                                 residuals_path.string());
    auto records = load_residuals_csv(residuals_path.string());

    // reference fit for normalization; defaults to the same residuals,
    // making the self-normalized report average to 1
    std::string ref_path;
    if (m.doc.contains("eval"))
        ref_path = m.doc["eval"].value("reference_residuals", "");
    auto reference =
        ref_path.empty() ? records
                         : load_residuals_csv(m.resolve(ref_path).string());
    double ref_sse = 0.0;
    for (const auto& r : reference) ref_sse += r.residual * r.residual;
    double ref_mean = ref_sse / static_cast<double>(reference.size());

    QuintileReport report = under_over_sse(records, ref_mean);
    atomic_write(dir / "quintile_report.csv", quintile_report_csv(report));
    std::cout << "freq-analysis: " << records.size()
              << " residuals, reference mean squared error "
              << fmt_double(ref_mean) << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------- stats

// Grid results.csv rows with split == "final" become metric rows named
// final_val_loss; already-metric-shaped files pass through unchanged.
std::string metrics_from_results(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty results CSV");
    auto header = split_csv_line(line);
    auto index_of = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    if (index_of("metric") >= 0 && index_of("value") >= 0) {
        std::string rest((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        return line + "\n" + rest;
    }
    const int c_cond = index_of("condition");
    const int c_seed = index_of("seed");
    const int c_split = index_of("split");
    const int c_loss = index_of("loss");
    if (c_cond < 0 || c_seed < 0 || c_split < 0 || c_loss < 0)
        throw std::runtime_error(
            "results CSV must have metric/value or condition/seed/split/loss "
            "columns");
    std::ostringstream out;
    out << "metric,condition,seed,value\n";
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields[static_cast<std::size_t>(c_split)] != "final") continue;
        out << "final_val_loss," << fields[static_cast<std::size_t>(c_cond)] << ','
            << fields[static_cast<std::size_t>(c_seed)] << ','
            << fields[static_cast<std::size_t>(c_loss)] << '\n';
    }
    return out.str();
}

struct StatsConfig {
    std::string metric = "final_val_loss";
    std::string cond_a, cond_b;
    std::int64_t n_boot = 10000;
    std::uint64_t seed = 1;
};

StatsConfig stats_config(const Manifest& m, const Overrides& ov) {
    StatsConfig cfg;
    if (m.doc.contains("stats")) {
        const json& s = m.doc["stats"];
        cfg.metric = s.value("metric", cfg.metric);
        cfg.cond_a = s.value("condition_a", cfg.cond_a);
        cfg.cond_b = s.value("condition_b", cfg.cond_b);
        cfg.n_boot = s.value("n_boot", cfg.n_boot);
        cfg.seed = s.value("seed", cfg.seed);
    }
    if (!ov.metric.empty()) cfg.metric = ov.metric;
    if (!ov.cond_a.empty()) cfg.cond_a = ov.cond_a;
    if (!ov.cond_b.empty()) cfg.cond_b = ov.cond_b;
    if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
    if (cfg.cond_a.empty() || cfg.cond_b.empty())
        throw std::runtime_error(
            "stats needs two conditions (manifest stats.condition_a/b or "
            "--cond-a/--cond-b)");
    return cfg;
}

int cmd_stats(const Manifest& m, const Overrides& ov) {
    StatsConfig cfg = stats_config(m, ov);
    fs::path base = out_dir(m, ov);
    fs::path results = base / "grid" / "results.csv";
    if (!fs::exists(results))
        throw std::runtime_error("missing results CSV: " + results.string());
    fs::path metrics = base / "metrics.csv";
    atomic_write(metrics, metrics_from_results(read_file(results)));

    PairedDiffs diffs =
        paired_diffs_from_csv(metrics.string(), cfg.metric, cfg.cond_a, cfg.cond_b);
    BootstrapResult r = bootstrap_t_test(diffs, cfg.n_boot, cfg.seed);
    atomic_write(base / ("stats_" + cfg.metric + ".json"),
                 bootstrap_result_json(r, cfg.metric));
    std::cout << "stats: " << cfg.metric << " " << cfg.cond_a << " - " << cfg.cond_b
              << ": " << format_result(r) << "\n";
    return kExitOk;
}

// -------------------------------------------------------------------- plot

std::vector<Series> retention_series(const Manifest& m) {
    int context = model_config(m).context;
    std::vector<Series> series;
    if (!m.doc.contains("grid")) return series;
    for (const auto& c : m.doc["grid"]["conditions"]) {
        Condition cond = parse_condition(c.get<std::string>());
        Series s;
        s.label = condition_spec(cond);
        auto cfg = condition_to_retention(cond, context);
        for (int d = 0; d < context; ++d) {
            s.x.push_back(d);
            s.y.push_back(cfg ? retention_value(d, *cfg) : 1.0);
        }
        series.push_back(std::move(s));
    }
    return series;
}

int cmd_plot(const Manifest& m, const Overrides& ov) {
    if (!ov.format.empty() && ov.format != "svg")
        throw std::runtime_error("plot supports --format svg only");
    fs::path dir = out_dir(m, ov) / "figures";
    fs::create_directories(dir);
    int figures = 0;

    auto series = retention_series(m);
    if (!series.empty()) {
        atomic_write(dir / "retention_curves.svg",
                     svg_line_chart("Retention by token distance", "distance d",
                                    "retention", series));
        ++figures;
    }

    fs::path results = out_dir(m, ov) / "grid" / "results.csv";
    StatsConfig cfg;
    bool have_contrast = true;
    try {
        cfg = stats_config(m, ov);
    } catch (const std::exception&) {
        have_contrast = false;
    }
    if (fs::exists(results) && have_contrast) {
        fs::path metrics = out_dir(m, ov) / "metrics.csv";
        atomic_write(metrics, metrics_from_results(read_file(results)));
        PairedDiffs diffs = paired_diffs_from_csv(metrics.string(), cfg.metric,
                                                  cfg.cond_a, cfg.cond_b);
        // rebuild the per-seed pairs for the slope chart
        std::map<std::uint64_t, std::map<std::string, double>> by_seed;
        {
            std::istringstream in(read_file(metrics));
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto f = split_csv_line(line);
                if (f[0] != cfg.metric) continue;
                by_seed[std::stoull(f[2])][f[1]] = std::stod(f[3]);
            }
        }
        std::vector<SlopePair> pairs;
        for (const auto& [seed, conds] : by_seed) {
            auto a = conds.find(cfg.cond_a);
            auto b = conds.find(cfg.cond_b);
            if (a != conds.end() && b != conds.end())
                pairs.push_back({b->second, a->second});
        }
        BootstrapResult r = bootstrap_t_test(diffs, cfg.n_boot, cfg.seed);
        atomic_write(dir / "paired_runs.svg",
                     svg_slope_chart(cfg.metric, cfg.cond_b, cfg.cond_a, pairs,
                                     format_result(r)));
        ++figures;
    }

    fs::path quintiles = out_dir(m, ov) / "rt" / "quintile_report.csv";
    if (fs::exists(quintiles)) {
        std::istringstream in(read_file(quintiles));
        std::string line;
        std::getline(in, line);
        std::vector<BarGroup> groups;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            groups.push_back(
                {"Q" + f[0], {std::stod(f[7]), std::stod(f[8])}});
        }
        atomic_write(dir / "quintile_sse.svg",
                     svg_bar_chart("Normalized under/over SSE by frequency quintile",
                                   {"under", "over"}, groups));
        ++figures;
    }

    std::cout << "plot: " << figures << " figures -> " << dir.string() << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ report

// Pure function of the run directory contents: aggregates whatever
// artifacts are present into one summary.
int cmd_report(const Manifest& m, const Overrides& ov) {
    fs::path base = out_dir(m, ov);
    json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["code_version"] = kCodeVersion;

    fs::path results = base / "grid" / "results.csv";
    if (fs::exists(results)) {
        std::string metrics_csv = metrics_from_results(read_file(results));
        atomic_write(base / "metrics.csv", metrics_csv);
        // loss table: condition -> seed -> final val loss
        json losses = json::object();
        std::istringstream in(metrics_csv);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            if (f[0] != "final_val_loss") continue;
            losses[f[1]][f[2]] = std::stod(f[3]);
        }
        summary["final_val_loss"] = losses;

        bool have_contrast = true;
        StatsConfig cfg;
        try {
            cfg = stats_config(m, ov);
        } catch (const std::exception&) {
            have_contrast = false;
        }
        if (have_contrast) {
            try {
                PairedDiffs diffs = paired_diffs_from_csv(
                    (base / "metrics.csv").string(), cfg.metric, cfg.cond_a,
                    cfg.cond_b);
                BootstrapResult r = bootstrap_t_test(diffs, cfg.n_boot, cfg.seed);
                json st;
                st["metric"] = cfg.metric;
                st["contrast"] = cfg.cond_a + " - " + cfg.cond_b;
                st["mean"] = r.mean;
                st["ci"] = {r.ci_low, r.ci_high};
                st["p"] = r.p_value;
                st["stars"] = star_code(r.p_value);
                st["formatted"] = format_result(r);
                summary["stats"] = st;
            } catch (const std::exception& e) {
                summary["stats"] = {{"error", e.what()}};
            }
        }
    }

    fs::path pair_scores = base / "eval" / "pair_scores.json";
    if (fs::exists(pair_scores))
        summary["minimal_pairs"] = json::parse(read_file(pair_scores));

    fs::path rt_report = base / "rt" / "rt_report.json";
    if (fs::exists(rt_report))
        summary["reading_times"] = json::parse(read_file(rt_report));

    fs::path quintiles = base / "rt" / "quintile_report.csv";
    if (fs::exists(quintiles)) {
        json rows = json::array();
        std::istringstream in(read_file(quintiles));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            rows.push_back({{"quintile", std::stoi(f[0])},
                            {"n", std::stoi(f[3])},
                            {"mse", std::stod(f[4])},
                            {"norm_under", std::stod(f[7])},
                            {"norm_over", std::stod(f[8])}});
        }
        summary["quintiles"] = rows;
    }

    fs::path dir = base / "report";
    fs::create_directories(dir);
    atomic_write(dir / "summary.json", summary.dump(2) + "\n");
    cmd_plot(m, ov);
    std::cout << "report: -> " << (dir / "summary.json") << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fleeting-memory language model toolkit"};
    app.require_subcommand(1);

    Overrides ov;
    app.add_option("--manifest", ov.manifest_path, "experiment manifest (JSON)");
    app.add_option("--out", ov.out, "output directory override");
    app.add_option("--jobs", ov.jobs, "parallel grid cells");
    app.add_option("--seed", ov.seed, "seed override");
    app.add_option("--condition", ov.condition,
                   "condition spec: perfect | naive:A | fleeting:A:E");
    app.add_option("--steps", ov.steps, "training steps override");
    app.add_option("--format", ov.format, "output format (csv, json, svg)");
    app.add_option("--checkpoint", ov.checkpoint, "model checkpoint path");
    app.add_option("--metric", ov.metric, "metric name for stats");
    app.add_option("--cond-a", ov.cond_a, "stats contrast: first condition");
    app.add_option("--cond-b", ov.cond_b, "stats contrast: second condition");

    std::map<std::string, int (*)(const Manifest&, const Overrides&)> commands = {
        {"tokenize", cmd_tokenize},   {"ingest", cmd_ingest},
        {"train", cmd_train},         {"grid", cmd_grid},
        {"eval-pairs", cmd_eval_pairs}, {"surprisal", cmd_surprisal},
        {"rt-fit", cmd_rt_fit},       {"freq-analysis", cmd_freq_analysis},
        {"stats", cmd_stats},         {"plot", cmd_plot},
        {"report", cmd_report},
    };
    for (const auto& [name, fn] : commands) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        Manifest manifest = load_manifest(ov.manifest_path);
        require_valid(manifest);
        return commands.at(cmd)(manifest, ov);
    } catch (const InvalidManifest& e) {
        json err;
        err["error"] = "invalid manifest";
        err["command"] = cmd;
        err["violations"] = e.violations;
        std::cerr << err.dump(2) << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"command", cmd}}.dump() << "\n";
        return kExitError;
    }
}
