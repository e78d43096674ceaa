#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "fmlm/model.hpp"
#include "fmlm/rng.hpp"

using namespace fmlm;

namespace {

// Brute-force parameter count: enumerate live tensors and sum their sizes.
long count_by_enumeration(const ModelConfig& cfg, bool exclude_wpe) {
    ModelState s = init_model(cfg, 1);
    long total = 0;
    for (const auto& [name, m] : named_params(s.params)) {
        if (exclude_wpe && name == "wpe") continue;
        total += static_cast<long>(m->size());
    }
    return total;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.width = 8;
    cfg.vocab = 11;
    cfg.context = 6;
    return cfg;
}

// Independent tiny decoder forward pass written with explicit loops:
// pre-norm blocks, causal softmax attention with an optional
// multiplicative bias, exact GELU, tied unembedding.
std::vector<std::vector<double>> reference_forward(
    const ModelState& state, const std::vector<int>& tokens,
    const std::optional<BiasMatrix>& bias) {
    const ModelConfig& c = state.config;
    const int t = static_cast<int>(tokens.size());
    const int w = c.width;
    const int hd = c.head_dim();

    auto layer_norm = [&](std::vector<std::vector<double>>& x, const Mat& g) {
        for (auto& row : x) {
            double mean = 0.0;
            for (double v : row) mean += v;
            mean /= w;
            double var = 0.0;
            for (double v : row) var += (v - mean) * (v - mean);
            var /= w;
            double inv = 1.0 / std::sqrt(var + 1e-5);
            for (int j = 0; j < w; ++j) row[j] = (row[j] - mean) * inv * g(0, j);
        }
    };

    std::vector<std::vector<double>> x(t, std::vector<double>(w));
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < w; ++j)
            x[i][j] = state.params.wte(tokens[i], j) + state.params.wpe(i, j);

    for (int l = 0; l < c.layers; ++l) {
        const BlockParams& b = state.params.blocks[static_cast<std::size_t>(l)];
        auto normed = x;
        layer_norm(normed, b.ln1_w);
        // qkv projection: width x 3*width, laid out [q | k | v]
        std::vector<std::vector<double>> qkv(t, std::vector<double>(3 * w, 0.0));
        for (int i = 0; i < t; ++i)
            for (int o = 0; o < 3 * w; ++o)
                for (int j = 0; j < w; ++j) qkv[i][o] += normed[i][j] * b.qkv_w(j, o);
        std::vector<std::vector<double>> att_out(t, std::vector<double>(w, 0.0));
        for (int h = 0; h < c.heads; ++h) {
            for (int i = 0; i < t; ++i) {
                std::vector<double> scores(static_cast<std::size_t>(i + 1));
                double m = -1e300;
                for (int j2 = 0; j2 <= i; ++j2) {
                    double s = 0.0;
                    for (int d = 0; d < hd; ++d)
                        s += qkv[i][h * hd + d] * qkv[j2][w + h * hd + d];
                    s /= std::sqrt(static_cast<double>(hd));
                    scores[static_cast<std::size_t>(j2)] = s;
                    m = std::max(m, s);
                }
                double z = 0.0;
                for (int j2 = 0; j2 <= i; ++j2) z += std::exp(scores[j2] - m);
                for (int j2 = 0; j2 <= i; ++j2) {
                    double p = std::exp(scores[j2] - m) / z;
                    if (bias) p *= bias->values(i, j2);
                    for (int d = 0; d < hd; ++d)
                        att_out[i][h * hd + d] += p * qkv[j2][2 * w + h * hd + d];
                }
            }
        }
        for (int i = 0; i < t; ++i)
            for (int o = 0; o < w; ++o) {
                double s = 0.0;
                for (int j = 0; j < w; ++j) s += att_out[i][j] * b.proj_w(j, o);
                x[i][o] += s;
            }
        normed = x;
        layer_norm(normed, b.ln2_w);
        std::vector<std::vector<double>> hmid(t, std::vector<double>(4 * w, 0.0));
        for (int i = 0; i < t; ++i)
            for (int o = 0; o < 4 * w; ++o) {
                double s = 0.0;
                for (int j = 0; j < w; ++j) s += normed[i][j] * b.fc_w(j, o);
                hmid[i][o] = 0.5 * s * (1.0 + std::erf(s / std::sqrt(2.0)));
            }
        for (int i = 0; i < t; ++i)
            for (int o = 0; o < w; ++o) {
                double s = 0.0;
                for (int j = 0; j < 4 * w; ++j) s += hmid[i][j] * b.fc2_w(j, o);
                x[i][o] += s;
            }
    }
    layer_norm(x, state.params.lnf_w);
    std::vector<std::vector<double>> logits(
        t, std::vector<double>(static_cast<std::size_t>(c.vocab), 0.0));
    for (int i = 0; i < t; ++i)
        for (int vtok = 0; vtok < c.vocab; ++vtok)
            for (int j = 0; j < w; ++j)
                logits[i][static_cast<std::size_t>(vtok)] +=
                    x[i][j] * state.params.wte(vtok, j);
    return logits;
}

}  // namespace

TEST_CASE("parameter count matches the closed form for the default config") {
    ModelConfig cfg;
    CHECK(param_count(cfg, true) == 13693824L);
    CHECK(count_by_enumeration(cfg, true) == 13693824L);
    // untying adds a second vocab x width matrix
    ModelConfig untied = cfg;
    untied.tie_embeddings = false;
    CHECK(param_count(untied, true) == 13693824L + 8000L * 384L);
    // counting positions adds context x width
    CHECK(param_count(cfg, false) == 13693824L + 256L * 384L);
}

TEST_CASE("parameter count equals enumeration across random configs") {
    Rng rng(19);
    for (int trial = 0; trial < 8; ++trial) {
        ModelConfig cfg;
        cfg.layers = 1 + static_cast<int>(rng.next_below(3));
        cfg.heads = 1 + static_cast<int>(rng.next_below(2));
        cfg.width = cfg.heads * (4 + static_cast<int>(rng.next_below(4)));
        cfg.vocab = 7 + static_cast<int>(rng.next_below(40));
        cfg.context = 4 + static_cast<int>(rng.next_below(8));
        cfg.use_biases = rng.next_below(2) == 0;
        cfg.tie_embeddings = rng.next_below(2) == 0;
        for (bool excl : {true, false})
            CHECK(param_count(cfg, excl) == count_by_enumeration(cfg, excl));
    }
}

TEST_CASE("initialization is deterministic in the seed") {
    auto a = init_model(tiny_config(), 42);
    auto b = init_model(tiny_config(), 42);
    auto c = init_model(tiny_config(), 43);
    auto na = named_params(a.params);
    auto nb = named_params(b.params);
    auto nc = named_params(c.params);
    REQUIRE(na.size() == nb.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < na.size(); ++i) {
        CHECK(*na[i].second == *nb[i].second);
        if (*na[i].second != *nc[i].second) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("norm scales start at one and weights look like std 0.02 draws") {
    auto s = init_model(ModelConfig{}, 7);
    CHECK((s.params.lnf_w.array() == 1.0).all());
    CHECK((s.params.blocks[0].ln1_w.array() == 1.0).all());
    const Mat& wte = s.params.wte;
    double mean = wte.mean();
    double sd = std::sqrt((wte.array() - mean).square().mean());
    CHECK(std::abs(mean) < 1e-3);
    CHECK(sd == doctest::Approx(0.02).epsilon(0.05));
    // residual projections are scaled down by sqrt(2 * layers)
    const Mat& proj = s.params.blocks[0].proj_w;
    double psd = std::sqrt((proj.array() - proj.mean()).square().mean());
    CHECK(psd == doctest::Approx(0.02 / std::sqrt(12.0)).epsilon(0.05));
}

TEST_CASE("fresh model loss is near ln(vocab)") {
    ModelConfig cfg;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.width = 32;
    cfg.vocab = 8000;
    cfg.context = 32;
    auto s = init_model(cfg, 123);
    Rng rng(9);
    std::vector<int> toks(32), targets(32);
    for (auto& v : toks) v = static_cast<int>(rng.next_below(8000));
    for (auto& v : targets) v = static_cast<int>(rng.next_below(8000));
    Mat logits = forward(s, toks, std::nullopt);
    double loss = cross_entropy_loss(logits, targets);
    CHECK(loss == doctest::Approx(std::log(8000.0)).epsilon(0.2 / std::log(8000.0)));
}

TEST_CASE("forward matches an independent loop-level reference") {
    auto s = init_model(tiny_config(), 314);
    std::vector<int> toks{3, 1, 4, 1, 5};
    BiasCache cache;
    for (const Condition& cond :
         {Condition{Perfect{}}, Condition{Naive{3.0}}, Condition{Fleeting{3.0, 2}}}) {
        auto bias = cache.get(cond, s.config.context, static_cast<int>(toks.size()));
        Mat logits = forward(s, toks, bias);
        auto ref = reference_forward(s, toks, bias);
        for (int i = 0; i < 5; ++i)
            for (int vtok = 0; vtok < s.config.vocab; ++vtok)
                CHECK(std::abs(logits(i, vtok) - ref[i][vtok]) < 1e-9);
    }
}

TEST_CASE("retention bias changes logits, causally") {
    auto s = init_model(tiny_config(), 99);
    std::vector<int> toks{2, 7, 0, 9, 5, 1};
    BiasCache cache;
    auto none = cache.get(Perfect{}, s.config.context, 6);
    auto fleet = cache.get(Fleeting{3.0, 2}, s.config.context, 6);
    CHECK(!none.has_value());
    Mat a = forward(s, toks, none);
    Mat b = forward(s, toks, fleet);
    // position 0 and 1 are inside the buffer at every layer: unchanged
    CHECK((a.topRows(2) - b.topRows(2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.bottomRows(1) - b.bottomRows(1)).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("prefix truncation consistency") {
    auto s = init_model(tiny_config(), 55);
    std::vector<int> toks{1, 2, 3, 4, 5, 6};
    BiasCache cache;
    auto bias6 = cache.get(Fleeting{2.0, 1}, s.config.context, 6);
    auto bias4 = cache.get(Fleeting{2.0, 1}, s.config.context, 4);
    Mat full = forward(s, toks, bias6);
    std::vector<int> pre(toks.begin(), toks.begin() + 4);
    Mat part = forward(s, pre, bias4);
    CHECK((full.topRows(4) - part).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cross entropy matches a long-double oracle") {
    Rng rng(77);
    Mat logits(4, 6);
    for (long i = 0; i < 4; ++i)
        for (long j = 0; j < 6; ++j) logits(i, j) = rng.next_normal() * 3.0;
    std::vector<int> targets{5, 0, 2, 2};
    long double total = 0.0L;
    for (int i = 0; i < 4; ++i) {
        long double z = 0.0L;
        for (int j = 0; j < 6; ++j) z += std::exp(static_cast<long double>(logits(i, j)));
        total += std::log(z) - static_cast<long double>(logits(i, targets[static_cast<std::size_t>(i)]));
    }
    double want = static_cast<double>(total / 4.0L);
    CHECK(std::abs(cross_entropy_loss(logits, targets) - want) < 1e-10);
}

TEST_CASE("cross entropy is shift invariant and handles extreme logits") {
    Mat logits(2, 3);
    logits << 1000.0, 999.0, 998.0, -1000.0, -1000.5, -1001.0;
    std::vector<int> targets{0, 1};
    double loss = cross_entropy_loss(logits, targets);
    CHECK(std::isfinite(loss));
    Mat shifted = logits.array() + 12.5;
    CHECK(cross_entropy_loss(shifted, targets) == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("loss_and_grads gradients match central finite differences") {
    ModelConfig cfg = tiny_config();
    cfg.layers = 1;
    cfg.width = 4;
    cfg.heads = 2;
    cfg.vocab = 5;
    auto s = init_model(cfg, 2024);
    // amplify weights so gradients are well away from rounding noise
    for (auto& [name, m] : named_params(s.params))
        if (name.find("ln") == std::string::npos) *m *= 8.0;
    std::vector<int> toks{0, 3, 1, 2};
    std::vector<int> targets{3, 1, 2, 4};
    BiasCache cache;
    auto bias = cache.get(Fleeting{3.0, 1}, cfg.context, 4);

    ModelParams grads = zero_like(s);
    loss_and_grads(s, toks, targets, bias, grads);

    const double step = 1e-4;
    auto names = named_params(s.params);
    auto gnames = named_params(grads);
    int checked = 0;
    for (std::size_t p = 0; p < names.size(); ++p) {
        Mat& m = *names[p].second;
        const Mat& g = *gnames[p].second;
        Rng pick(1000 + p);
        long n = m.size();
        for (int rep = 0; rep < 6 && rep < n; ++rep) {
            long idx = static_cast<long>(pick.next_below(static_cast<std::uint64_t>(n)));
            double saved = m(idx / m.cols(), idx % m.cols());
            auto eval = [&](double v) {
                m(idx / m.cols(), idx % m.cols()) = v;
                Mat logits = forward(s, toks, bias);
                return cross_entropy_loss(logits, targets);
            };
            double hi = eval(saved + step);
            double lo = eval(saved - step);
            m(idx / m.cols(), idx % m.cols()) = saved;
            double fd = (hi - lo) / (2.0 * step);
            double denom = std::max({std::abs(fd), std::abs(g(idx / m.cols(), idx % m.cols())), 1e-3});
            CHECK(std::abs(fd - g(idx / m.cols(), idx % m.cols())) / denom < 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 30);
}

TEST_CASE("loss_and_grads returns the forward loss and accumulates") {
    auto s = init_model(tiny_config(), 31);
    std::vector<int> toks{1, 2, 3};
    std::vector<int> targets{2, 3, 4};
    Mat logits = forward(s, toks, std::nullopt);
    double direct = cross_entropy_loss(logits, targets);
    ModelParams grads = zero_like(s);
    double l1 = loss_and_grads(s, toks, targets, std::nullopt, grads);
    CHECK(l1 == doctest::Approx(direct).epsilon(1e-12));
    Mat first = grads.wte;
    loss_and_grads(s, toks, targets, std::nullopt, grads);
    CHECK((grads.wte - 2.0 * first).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("generation is deterministic and respects the window") {
    ModelConfig cfg = tiny_config();
    auto s = init_model(cfg, 8);
    std::vector<int> prompt{1, 2};
    Sampling greedy;
    auto a = generate(s, prompt, 10, greedy, Fleeting{3.0, 2});
    auto b = generate(s, prompt, 10, greedy, Fleeting{3.0, 2});
    CHECK(a == b);
    CHECK(a.size() == prompt.size() + 10);
    for (int tok : a) {
        CHECK(tok >= 0);
        CHECK(tok < cfg.vocab);
    }
    Sampling temp;
    temp.greedy = false;
    temp.temperature = 1.3;
    temp.seed = 5;
    auto c = generate(s, prompt, 10, temp, Perfect{});
    auto d = generate(s, prompt, 10, temp, Perfect{});
    CHECK(c == d);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    auto s = init_model(tiny_config(), 64);
    Checkpoint ckpt;
    ckpt.state = s;
    ckpt.step = 17;
    for (const auto& [name, m] : named_params(s.params)) {
        ckpt.opt_m.push_back(Mat::Constant(m->rows(), m->cols(), 0.25));
        ckpt.opt_v.push_back(Mat::Constant(m->rows(), m->cols(), 1e-9));
    }
    auto path = std::filesystem::temp_directory_path() / "fmlm_test_ckpt.bin";
    save_checkpoint(ckpt, path.string());
    Checkpoint back = load_checkpoint(path.string());
    std::filesystem::remove(path);

    CHECK(back.step == 17);
    CHECK(back.state.init_seed == 64);
    CHECK(back.state.config.width == s.config.width);
    auto na = named_params(s.params);
    auto nb = named_params(back.state.params);
    REQUIRE(na.size() == nb.size());
    for (std::size_t i = 0; i < na.size(); ++i) {
        CHECK(na[i].first == nb[i].first);
        CHECK(*na[i].second == *nb[i].second);
    }
    REQUIRE(back.opt_m.size() == ckpt.opt_m.size());
    for (std::size_t i = 0; i < back.opt_m.size(); ++i) {
        CHECK(back.opt_m[i] == ckpt.opt_m[i]);
        CHECK(back.opt_v[i] == ckpt.opt_v[i]);
    }
}

TEST_CASE("config validation rejects bad shapes") {
    ModelConfig cfg;
    cfg.heads = 5;  // 5 does not divide width 384
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    ModelConfig neg;
    neg.layers = 0;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}
