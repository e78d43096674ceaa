#include "fmlm/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

#include "fmlm/io.hpp"
#include "fmlm/rng.hpp"
#include "json.hpp"

namespace fmlm {

void ModelConfig::validate() const {
    if (layers <= 0 || heads <= 0 || width <= 0 || vocab <= 0 || context <= 0)
        throw std::invalid_argument("model config: dimensions must be positive");
    if (width % heads != 0)
        throw std::invalid_argument("model config: width must be divisible by heads");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("model config: dropout must be in [0, 1)");
}

namespace {

constexpr double kLnEps = 1e-5;

void push(std::vector<std::pair<std::string, Mat*>>& out, const std::string& name,
          Mat& m) {
    if (m.size() > 0) out.emplace_back(name, &m);
}

}  // namespace

std::vector<std::pair<std::string, Mat*>> named_params(ModelParams& p) {
    std::vector<std::pair<std::string, Mat*>> out;
    push(out, "wte", p.wte);
    push(out, "wpe", p.wpe);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        auto& b = p.blocks[i];
        const std::string pre = "block." + std::to_string(i) + ".";
        push(out, pre + "ln1.w", b.ln1_w);
        push(out, pre + "ln1.b", b.ln1_b);
        push(out, pre + "qkv.w", b.qkv_w);
        push(out, pre + "qkv.b", b.qkv_b);
        push(out, pre + "proj.w", b.proj_w);
        push(out, pre + "proj.b", b.proj_b);
        push(out, pre + "ln2.w", b.ln2_w);
        push(out, pre + "ln2.b", b.ln2_b);
        push(out, pre + "fc.w", b.fc_w);
        push(out, pre + "fc.b", b.fc_b);
        push(out, pre + "fc2.w", b.fc2_w);
        push(out, pre + "fc2.b", b.fc2_b);
    }
    push(out, "lnf.w", p.lnf_w);
    push(out, "lnf.b", p.lnf_b);
    push(out, "lm_head", p.lm_head);
    return out;
}

std::vector<std::pair<std::string, const Mat*>> named_params(const ModelParams& p) {
    auto mut = named_params(const_cast<ModelParams&>(p));
    std::vector<std::pair<std::string, const Mat*>> out;
    out.reserve(mut.size());
    for (auto& [n, m] : mut) out.emplace_back(n, m);
    return out;
}

long param_count(const ModelConfig& cfg, bool exclude_position_embeddings) {
    cfg.validate();
    const long w = cfg.width;
    const long bias = cfg.use_biases ? 1 : 0;
    auto lin = [&](long in, long out) { return in * out + bias * out; };
    const long ln = w + bias * w;
    const long per_layer =
        2 * ln + lin(w, 3 * w) + lin(w, w) + lin(w, 4 * w) + lin(4 * w, w);
    long total = static_cast<long>(cfg.vocab) * w + cfg.layers * per_layer + ln;
    if (!exclude_position_embeddings) total += static_cast<long>(cfg.context) * w;
    if (!cfg.tie_embeddings) total += static_cast<long>(cfg.vocab) * w;
    return total;
}

namespace {

void fill_normal(Mat& m, Rng& rng, double std) {
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) m(i, j) = rng.next_normal() * std;
}

}  // namespace

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelState state;
    state.config = cfg;
    state.init_seed = seed;
    auto& p = state.params;
    const int w = cfg.width;

    Rng rng(seed);
    const double std0 = 0.02;
    // residual projections get the usual 1/sqrt(2*layers) shrink
    const double std_resid = std0 / std::sqrt(2.0 * cfg.layers);

    p.wte = Mat(cfg.vocab, w);
    fill_normal(p.wte, rng, std0);
    p.wpe = Mat(cfg.context, w);
    fill_normal(p.wpe, rng, std0);

    p.blocks.resize(cfg.layers);
    for (auto& b : p.blocks) {
        b.ln1_w = Mat::Ones(1, w);
        b.qkv_w = Mat(w, 3 * w);
        fill_normal(b.qkv_w, rng, std0);
        b.proj_w = Mat(w, w);
        fill_normal(b.proj_w, rng, std_resid);
        b.ln2_w = Mat::Ones(1, w);
        b.fc_w = Mat(w, 4 * w);
        fill_normal(b.fc_w, rng, std0);
        b.fc2_w = Mat(4 * w, w);
        fill_normal(b.fc2_w, rng, std_resid);
        if (cfg.use_biases) {
            b.ln1_b = Mat::Zero(1, w);
            b.qkv_b = Mat::Zero(1, 3 * w);
            b.proj_b = Mat::Zero(1, w);
            b.ln2_b = Mat::Zero(1, w);
            b.fc_b = Mat::Zero(1, 4 * w);
            b.fc2_b = Mat::Zero(1, w);
        }
    }
    p.lnf_w = Mat::Ones(1, w);
    if (cfg.use_biases) p.lnf_b = Mat::Zero(1, w);
    if (!cfg.tie_embeddings) {
        p.lm_head = Mat(cfg.vocab, w);
        fill_normal(p.lm_head, rng, std0);
    }
    return state;
}

ModelParams zero_like(const ModelState& state) {
    ModelParams g;
    g.blocks.resize(state.params.blocks.size());
    auto zero = [](const Mat& m) { return Mat::Zero(m.rows(), m.cols()).eval(); };
    g.wte = zero(state.params.wte);
    g.wpe = zero(state.params.wpe);
    for (std::size_t i = 0; i < g.blocks.size(); ++i) {
        const auto& b = state.params.blocks[i];
        auto& o = g.blocks[i];
        o.ln1_w = zero(b.ln1_w);
        o.qkv_w = zero(b.qkv_w);
        o.proj_w = zero(b.proj_w);
        o.ln2_w = zero(b.ln2_w);
        o.fc_w = zero(b.fc_w);
        o.fc2_w = zero(b.fc2_w);
        if (b.ln1_b.size()) o.ln1_b = zero(b.ln1_b);
        if (b.qkv_b.size()) o.qkv_b = zero(b.qkv_b);
        if (b.proj_b.size()) o.proj_b = zero(b.proj_b);
        if (b.ln2_b.size()) o.ln2_b = zero(b.ln2_b);
        if (b.fc_b.size()) o.fc_b = zero(b.fc_b);
        if (b.fc2_b.size()) o.fc2_b = zero(b.fc2_b);
    }
    g.lnf_w = zero(state.params.lnf_w);
    if (state.params.lnf_b.size()) g.lnf_b = zero(state.params.lnf_b);
    if (state.params.lm_head.size()) g.lm_head = zero(state.params.lm_head);
    return g;
}

std::optional<BiasMatrix> BiasCache::get(const Condition& cond, int context,
                                         int seq_len) {
    auto cfg = condition_to_retention(cond, context);
    if (!cfg) return std::nullopt;
    using Key = std::tuple<int, double, int, int>;
    static std::map<Key, BiasMatrix> cache;
    static std::mutex mu;
    Key key{cfg->buffer, cfg->alpha, cfg->context, seq_len};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, build_bias_matrix(*cfg, seq_len)).first;
    return it->second;
}

namespace {

struct LnCache {
    Mat xhat;  // normalized input
    Vec rstd;  // per-row reciprocal std
};

Mat layernorm_forward(const Mat& x, const Mat& w, const Mat& b, LnCache* cache) {
    const long t = x.rows(), d = x.cols();
    Mat y(t, d);
    Mat xhat(t, d);
    Vec rstd(t);
    for (long i = 0; i < t; ++i) {
        double mu = x.row(i).mean();
        double var = (x.row(i).array() - mu).square().mean();
        double rs = 1.0 / std::sqrt(var + kLnEps);
        xhat.row(i) = (x.row(i).array() - mu) * rs;
        rstd(i) = rs;
    }
    for (long i = 0; i < t; ++i) {
        y.row(i) = xhat.row(i).cwiseProduct(w.row(0));
        if (b.size()) y.row(i) += b.row(0);
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return y;
}

Mat layernorm_backward(const Mat& dy, const LnCache& c, const Mat& w, Mat& dw,
                       Mat* db) {
    const long t = dy.rows(), d = dy.cols();
    Mat dx(t, d);
    for (long i = 0; i < t; ++i) {
        Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(w.row(0));
        double m1 = dxhat.mean();
        double m2 = dxhat.cwiseProduct(c.xhat.row(i)).mean();
        dx.row(i) =
            (dxhat.array() - m1 - c.xhat.row(i).array() * m2) * c.rstd(i);
        dw.row(0) += dy.row(i).cwiseProduct(c.xhat.row(i));
        if (db) db->row(0) += dy.row(i);
    }
    return dx;
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad_scalar(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779399461;
    return cdf + x * pdf;
}

struct BlockCache {
    Mat x_in;
    LnCache ln1;
    Mat a;       // ln1 output
    Mat qkv;
    AttentionCache attn;
    Mat att;     // concatenated head outputs
    Mat x_mid;   // after attention residual
    LnCache ln2;
    Mat a2;      // ln2 output
    Mat h;       // fc pre-activation
    Mat g;       // gelu output
};

struct ForwardCache {
    Mat x0;
    std::vector<BlockCache> blocks;
    LnCache lnf;
    Mat lnf_out;
};

AttentionInput split_heads(const Mat& qkv, int heads, int width) {
    const int hd = width / heads;
    const long t = qkv.rows();
    AttentionInput in;
    in.head_dim = hd;
    in.q.resize(heads);
    in.k.resize(heads);
    in.v.resize(heads);
    for (int h = 0; h < heads; ++h) {
        in.q[h] = qkv.block(0, h * hd, t, hd);
        in.k[h] = qkv.block(0, width + h * hd, t, hd);
        in.v[h] = qkv.block(0, 2 * width + h * hd, t, hd);
    }
    return in;
}

Mat forward_impl(const ModelState& state, std::span<const int> tokens,
                 const std::optional<BiasMatrix>& bias, ForwardCache* cache) {
    const auto& cfg = state.config;
    const auto& p = state.params;
    const long t = static_cast<long>(tokens.size());
    if (t == 0) throw std::invalid_argument("forward: empty token sequence");
    if (t > cfg.context)
        throw std::invalid_argument("forward: sequence longer than context window");
    for (int id : tokens)
        if (id < 0 || id >= cfg.vocab)
            throw std::invalid_argument("forward: token id out of range");
    if (bias && bias->values.rows() != t)
        throw std::invalid_argument("forward: bias does not match seq_len");

    Mat x(t, cfg.width);
    for (long i = 0; i < t; ++i)
        x.row(i) = p.wte.row(tokens[i]) + p.wpe.row(i);
    if (cache) {
        cache->x0 = x;
        cache->blocks.resize(cfg.layers);
    }

    for (int l = 0; l < cfg.layers; ++l) {
        const auto& b = p.blocks[l];
        BlockCache* bc = cache ? &cache->blocks[l] : nullptr;
        if (bc) bc->x_in = x;

        Mat a = layernorm_forward(x, b.ln1_w, b.ln1_b, bc ? &bc->ln1 : nullptr);
        Mat qkv = a * b.qkv_w;
        if (b.qkv_b.size()) qkv.rowwise() += b.qkv_b.row(0);
        AttentionInput ain = split_heads(qkv, cfg.heads, cfg.width);
        std::vector<Mat> heads_out =
            fm_attention(ain, bias, bc ? &bc->attn : nullptr);
        Mat att(t, cfg.width);
        const int hd = cfg.head_dim();
        for (int h = 0; h < cfg.heads; ++h)
            att.block(0, h * hd, t, hd) = heads_out[h];
        Mat y = att * b.proj_w;
        if (b.proj_b.size()) y.rowwise() += b.proj_b.row(0);
        if (bc) {
            bc->a = std::move(a);
            bc->qkv = std::move(qkv);
            bc->att = att;
        }
        x += y;
        if (bc) bc->x_mid = x;

        Mat a2 = layernorm_forward(x, b.ln2_w, b.ln2_b, bc ? &bc->ln2 : nullptr);
        Mat h = a2 * b.fc_w;
        if (b.fc_b.size()) h.rowwise() += b.fc_b.row(0);
        Mat g = h.unaryExpr([](double v) { return gelu_scalar(v); });
        Mat m = g * b.fc2_w;
        if (b.fc2_b.size()) m.rowwise() += b.fc2_b.row(0);
        if (bc) {
            bc->a2 = std::move(a2);
            bc->h = std::move(h);
            bc->g = std::move(g);
        }
        x += m;
    }

    Mat lnf_out =
        layernorm_forward(x, p.lnf_w, p.lnf_b, cache ? &cache->lnf : nullptr);
    const Mat& emb = cfg.tie_embeddings ? p.wte : p.lm_head;
    Mat logits = lnf_out * emb.transpose();
    if (cache) cache->lnf_out = std::move(lnf_out);
    return logits;
}

}  // namespace

Mat forward(const ModelState& state, std::span<const int> tokens,
            const std::optional<BiasMatrix>& bias) {
    return forward_impl(state, tokens, bias, nullptr);
}

double cross_entropy_loss(const Mat& logits, std::span<const int> targets) {
    if (logits.rows() != static_cast<long>(targets.size()))
        throw std::invalid_argument("cross_entropy: logits/targets length mismatch");
    double total = 0.0;
    for (long i = 0; i < logits.rows(); ++i) {
        int tgt = targets[i];
        if (tgt < 0 || tgt >= logits.cols())
            throw std::invalid_argument("cross_entropy: target out of range");
        double m = logits.row(i).maxCoeff();
        double lse = std::log((logits.row(i).array() - m).exp().sum()) + m;
        total += lse - logits(i, tgt);
    }
    return total / static_cast<double>(logits.rows());
}

double loss_and_grads(const ModelState& state, std::span<const int> tokens,
                      std::span<const int> targets,
                      const std::optional<BiasMatrix>& bias, ModelParams& grads) {
    if (tokens.size() != targets.size())
        throw std::invalid_argument("loss_and_grads: tokens/targets length mismatch");
    const auto& cfg = state.config;
    const auto& p = state.params;
    const long t = static_cast<long>(tokens.size());

    ForwardCache cache;
    Mat logits = forward_impl(state, tokens, bias, &cache);

    // loss and dlogits in one pass
    double loss = 0.0;
    Mat dlogits(t, cfg.vocab);
    const double inv_t = 1.0 / static_cast<double>(t);
    for (long i = 0; i < t; ++i) {
        int tgt = targets[i];
        if (tgt < 0 || tgt >= cfg.vocab)
            throw std::invalid_argument("loss_and_grads: target out of range");
        double m = logits.row(i).maxCoeff();
        Eigen::RowVectorXd ex = (logits.row(i).array() - m).exp();
        double sum = ex.sum();
        loss += std::log(sum) + m - logits(i, tgt);
        dlogits.row(i) = ex * (inv_t / sum);
        dlogits(i, tgt) -= inv_t;
    }
    loss *= inv_t;

    const Mat& emb = cfg.tie_embeddings ? p.wte : p.lm_head;
    Mat& demb = cfg.tie_embeddings ? grads.wte : grads.lm_head;
    Mat dlnf_out = dlogits * emb;
    demb += dlogits.transpose() * cache.lnf_out;

    Mat dx = layernorm_backward(dlnf_out, cache.lnf, p.lnf_w, grads.lnf_w,
                                p.lnf_b.size() ? &grads.lnf_b : nullptr);

    const int hd = cfg.head_dim();
    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& b = p.blocks[l];
        auto& gb = grads.blocks[l];
        const BlockCache& bc = cache.blocks[l];

        // MLP branch
        Mat dm = dx;  // gradient flowing into the residual add
        Mat dg = dm * b.fc2_w.transpose();
        gb.fc2_w += bc.g.transpose() * dm;
        if (b.fc2_b.size()) gb.fc2_b.row(0) += dm.colwise().sum();
        Mat dh = dg.cwiseProduct(
            bc.h.unaryExpr([](double v) { return gelu_grad_scalar(v); }));
        Mat da2 = dh * b.fc_w.transpose();
        gb.fc_w += bc.a2.transpose() * dh;
        if (b.fc_b.size()) gb.fc_b.row(0) += dh.colwise().sum();
        Mat dx_mid = layernorm_backward(da2, bc.ln2, b.ln2_w, gb.ln2_w,
                                        b.ln2_b.size() ? &gb.ln2_b : nullptr);
        dx += dx_mid;  // residual path

        // attention branch
        Mat dy = dx;
        Mat datt = dy * b.proj_w.transpose();
        gb.proj_w += bc.att.transpose() * dy;
        if (b.proj_b.size()) gb.proj_b.row(0) += dy.colwise().sum();

        AttentionInput ain = split_heads(bc.qkv, cfg.heads, cfg.width);
        std::vector<Mat> upstream(cfg.heads);
        for (int h = 0; h < cfg.heads; ++h)
            upstream[h] = datt.block(0, h * hd, t, hd);
        AttentionGrads ag = fm_attention_backward(ain, bias, upstream);
        Mat dqkv(t, 3 * cfg.width);
        for (int h = 0; h < cfg.heads; ++h) {
            dqkv.block(0, h * hd, t, hd) = ag.dq[h];
            dqkv.block(0, cfg.width + h * hd, t, hd) = ag.dk[h];
            dqkv.block(0, 2 * cfg.width + h * hd, t, hd) = ag.dv[h];
        }
        Mat da = dqkv * b.qkv_w.transpose();
        gb.qkv_w += bc.a.transpose() * dqkv;
        if (b.qkv_b.size()) gb.qkv_b.row(0) += dqkv.colwise().sum();
        Mat dx_in = layernorm_backward(da, bc.ln1, b.ln1_w, gb.ln1_w,
                                       b.ln1_b.size() ? &gb.ln1_b : nullptr);
        dx += dx_in;
    }

    // embeddings
    for (long i = 0; i < t; ++i) {
        grads.wte.row(tokens[i]) += dx.row(i);
        grads.wpe.row(i) += dx.row(i);
    }
    return loss;
}

std::vector<int> generate(const ModelState& state, std::span<const int> prompt,
                          int max_tokens, const Sampling& sampling,
                          const Condition& cond) {
    if (prompt.empty()) throw std::invalid_argument("generate: prompt is empty");
    const auto& cfg = state.config;
    if (static_cast<int>(prompt.size()) > cfg.context)
        throw std::invalid_argument("generate: prompt exceeds context window");
    std::vector<int> seq(prompt.begin(), prompt.end());
    BiasCache biases;
    Rng rng(sampling.seed);
    for (int step = 0; step < max_tokens; ++step) {
        const int start =
            std::max(0, static_cast<int>(seq.size()) - cfg.context);
        std::span<const int> window(seq.data() + start, seq.size() - start);
        auto bias = biases.get(cond, cfg.context, static_cast<int>(window.size()));
        Mat logits = forward(state, window, bias);
        Eigen::RowVectorXd last = logits.row(logits.rows() - 1);
        int next = 0;
        if (sampling.greedy) {
            last.maxCoeff(&next);
        } else {
            Eigen::RowVectorXd scaled = last / sampling.temperature;
            double m = scaled.maxCoeff();
            Eigen::RowVectorXd probs = (scaled.array() - m).exp();
            probs /= probs.sum();
            double u = rng.next_double();
            double acc = 0.0;
            next = cfg.vocab - 1;
            for (int i = 0; i < cfg.vocab; ++i) {
                acc += probs(i);
                if (u < acc) {
                    next = i;
                    break;
                }
            }
        }
        seq.push_back(next);
    }
    return seq;
}

namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
    return json{{"layers", c.layers},     {"heads", c.heads},
                {"width", c.width},       {"vocab", c.vocab},
                {"context", c.context},   {"use_biases", c.use_biases},
                {"tie_embeddings", c.tie_embeddings}, {"dropout", c.dropout}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.layers = j.at("layers");
    c.heads = j.at("heads");
    c.width = j.at("width");
    c.vocab = j.at("vocab");
    c.context = j.at("context");
    c.use_biases = j.at("use_biases");
    c.tie_embeddings = j.at("tie_embeddings");
    c.dropout = j.at("dropout");
    return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const auto params = named_params(ckpt.state.params);
    json header;
    header["version"] = 1;
    header["config"] = config_to_json(ckpt.state.config);
    header["init_seed"] = ckpt.state.init_seed;
    header["step"] = ckpt.step;
    header["has_moments"] = !ckpt.opt_m.empty();
    json tensors = json::array();
    for (const auto& [name, m] : params)
        tensors.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    header["tensors"] = tensors;
    std::string head = header.dump();

    std::string blob;
    blob.reserve(16 + head.size());
    blob += "FMLMCKPT";
    std::uint64_t hlen = head.size();
    blob.append(reinterpret_cast<const char*>(&hlen), 8);
    blob += head;
    auto append_mat = [&blob](const Mat& m) {
        blob.append(reinterpret_cast<const char*>(m.data()),
                    static_cast<std::size_t>(m.size()) * sizeof(double));
    };
    for (const auto& [name, m] : params) append_mat(*m);
    if (!ckpt.opt_m.empty()) {
        if (ckpt.opt_m.size() != params.size() || ckpt.opt_v.size() != params.size())
            throw std::invalid_argument("checkpoint: moment count mismatch");
        for (const auto& m : ckpt.opt_m) append_mat(m);
        for (const auto& v : ckpt.opt_v) append_mat(v);
    }
    atomic_write(path, blob);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::string blob = read_file(path);
    if (blob.size() < 16 || blob.compare(0, 8, "FMLMCKPT") != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint64_t hlen;
    std::memcpy(&hlen, blob.data() + 8, 8);
    if (blob.size() < 16 + hlen)
        throw std::runtime_error("checkpoint: truncated header in " + path);
    json header = json::parse(blob.substr(16, hlen));

    Checkpoint ckpt;
    ckpt.state.config = config_from_json(header.at("config"));
    ckpt.state.init_seed = header.at("init_seed");
    ckpt.step = header.at("step");
    // rebuild tensor structure from the config, then overwrite values
    ckpt.state = init_model(ckpt.state.config, ckpt.state.init_seed);
    ckpt.step = header.at("step");
    auto params = named_params(ckpt.state.params);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != params.size())
        throw std::runtime_error("checkpoint: tensor list mismatch in " + path);
    std::size_t off = 16 + hlen;
    auto read_mat = [&](Mat& m) {
        std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
        if (off + bytes > blob.size())
            throw std::runtime_error("checkpoint: truncated data in " + path);
        std::memcpy(m.data(), blob.data() + off, bytes);
        off += bytes;
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& tj = tensors[i];
        if (tj.at("name") != params[i].first ||
            tj.at("rows") != params[i].second->rows() ||
            tj.at("cols") != params[i].second->cols())
            throw std::runtime_error("checkpoint: tensor shape mismatch for " +
                                     params[i].first);
        read_mat(*params[i].second);
    }
    if (header.at("has_moments").get<bool>()) {
        ckpt.opt_m.resize(params.size());
        ckpt.opt_v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            ckpt.opt_m[i] = Mat::Zero(params[i].second->rows(), params[i].second->cols());
            read_mat(ckpt.opt_m[i]);
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            ckpt.opt_v[i] = Mat::Zero(params[i].second->rows(), params[i].second->cols());
            read_mat(ckpt.opt_v[i]);
        }
    }
    return ckpt;
}

}  // namespace fmlm
