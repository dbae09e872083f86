#include "tokgain/lm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "tokgain/corpus.hpp"
#include "tokgain/error.hpp"
#include "tokgain/optim.hpp"
#include "tokgain/rng.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

std::size_t LmModel::param_count() const {
    const std::size_t V = vocab_size;
    const std::size_t k = context;
    const std::size_t d = dim;
    return V * d + k * d * d + d * V + V;
}

LmModel LmModel::zeros(std::uint32_t vocab_size, std::uint32_t context,
                       std::uint32_t dim) {
    if (vocab_size < 2) throw input_error("model vocabulary must hold at least 2 ids");
    if (context < 1) throw input_error("context length must be at least 1");
    if (dim < 1) throw input_error("embedding width must be at least 1");
    LmModel m;
    m.vocab_size = vocab_size;
    m.context = context;
    m.dim = dim;
    m.params.assign(m.param_count(), 0.0);
    return m;
}

LmModel LmModel::random_init(std::uint32_t vocab_size, std::uint32_t context,
                             std::uint32_t dim, std::uint64_t seed) {
    LmModel m = zeros(vocab_size, context, dim);
    Rng rng(seed);
    for (double& p : m.params) p = rng.uniform(-0.1, 0.1);
    return m;
}

std::span<double> LmModel::embed() {
    return {params.data(), static_cast<std::size_t>(vocab_size) * dim};
}
std::span<double> LmModel::ctx_proj() {
    return {params.data() + static_cast<std::size_t>(vocab_size) * dim,
            static_cast<std::size_t>(context) * dim * dim};
}
std::span<double> LmModel::out_proj() {
    return {params.data() + static_cast<std::size_t>(vocab_size) * dim +
                static_cast<std::size_t>(context) * dim * dim,
            static_cast<std::size_t>(dim) * vocab_size};
}
std::span<double> LmModel::out_bias() {
    return {params.data() + param_count() - vocab_size,
            static_cast<std::size_t>(vocab_size)};
}
std::span<const double> LmModel::embed() const {
    return {params.data(), static_cast<std::size_t>(vocab_size) * dim};
}
std::span<const double> LmModel::ctx_proj() const {
    return {params.data() + static_cast<std::size_t>(vocab_size) * dim,
            static_cast<std::size_t>(context) * dim * dim};
}
std::span<const double> LmModel::out_proj() const {
    return {params.data() + static_cast<std::size_t>(vocab_size) * dim +
                static_cast<std::size_t>(context) * dim * dim,
            static_cast<std::size_t>(dim) * vocab_size};
}
std::span<const double> LmModel::out_bias() const {
    return {params.data() + param_count() - vocab_size,
            static_cast<std::size_t>(vocab_size)};
}

namespace {

void check_model(const LmModel& m) {
    if (m.params.size() != m.param_count()) {
        throw invariant_error("model parameter vector has the wrong size");
    }
}

struct Workspace {
    std::vector<double> h0;   // k*d gathered embeddings
    std::vector<double> ctx;  // d activations
    std::vector<double> prob; // V softmax
    std::vector<double> dctx; // d
    std::vector<double> dh0;  // k*d

    explicit Workspace(const LmModel& m)
        : h0(static_cast<std::size_t>(m.context) * m.dim),
          ctx(m.dim),
          prob(m.vocab_size),
          dctx(m.dim),
          dh0(static_cast<std::size_t>(m.context) * m.dim) {}
};

// Gathers the k-slot history ending just before position p, BOS-padded.
void gather_history(const LmModel& m, std::span<const TokenId> seq, std::size_t p,
                    std::span<TokenId> out) {
    const std::size_t k = m.context;
    for (std::size_t s = 0; s < k; ++s) {
        std::ptrdiff_t idx =
            static_cast<std::ptrdiff_t>(p) - static_cast<std::ptrdiff_t>(k) +
            static_cast<std::ptrdiff_t>(s);
        out[s] = idx >= 0 ? seq[static_cast<std::size_t>(idx)] : m.bos();
    }
}

// Forward pass for one history; fills ws.h0, ws.ctx and ws.prob, returns
// the log normalizer offset needed for log-probabilities.
void forward(const LmModel& m, std::span<const TokenId> history, Workspace& ws) {
    const std::size_t k = m.context;
    const std::size_t d = m.dim;
    const std::size_t V = m.vocab_size;
    auto embed = m.embed();
    auto ctxp = m.ctx_proj();
    auto outp = m.out_proj();
    auto bias = m.out_bias();

    for (std::size_t s = 0; s < k; ++s) {
        TokenId id = history[s];
        if (id > V) throw invariant_error("history id " + std::to_string(id) + " out of range");
        if (id == m.bos()) {
            std::fill_n(ws.h0.begin() + s * d, d, 0.0);
        } else {
            std::copy_n(embed.begin() + static_cast<std::size_t>(id) * d, d,
                        ws.h0.begin() + s * d);
        }
    }
    for (std::size_t j = 0; j < d; ++j) ws.ctx[j] = 0.0;
    for (std::size_t i = 0; i < k * d; ++i) {
        const double h = ws.h0[i];
        if (h == 0.0) continue;
        const double* row = ctxp.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) ws.ctx[j] += row[j] * h;
    }
    for (std::size_t j = 0; j < d; ++j) ws.ctx[j] = std::tanh(ws.ctx[j]);

    for (std::size_t v = 0; v < V; ++v) ws.prob[v] = bias[v];
    for (std::size_t j = 0; j < d; ++j) {
        const double c = ws.ctx[j];
        if (c == 0.0) continue;
        const double* row = outp.data() + j * V;
        for (std::size_t v = 0; v < V; ++v) ws.prob[v] += row[v] * c;
    }
    double mx = ws.prob[0];
    for (std::size_t v = 1; v < V; ++v) mx = std::max(mx, ws.prob[v]);
    double z = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
        ws.prob[v] = std::exp(ws.prob[v] - mx);
        z += ws.prob[v];
    }
    const double inv_z = 1.0 / z;
    for (std::size_t v = 0; v < V; ++v) ws.prob[v] *= inv_z;
}

} // namespace

std::vector<double> logits(const LmModel& model, std::span<const TokenId> history) {
    check_model(model);
    if (history.size() != model.context) {
        throw invariant_error("history must hold exactly " +
                              std::to_string(model.context) + " ids");
    }
    const std::size_t d = model.dim;
    const std::size_t V = model.vocab_size;
    Workspace ws(model);
    // Reuse the forward gather/projection, then rebuild raw logits.
    for (std::size_t s = 0; s < model.context; ++s) {
        TokenId id = history[s];
        if (id > model.vocab_size) {
            throw invariant_error("history id " + std::to_string(id) + " out of range");
        }
    }
    forward(model, history, ws);
    // forward() normalized the scores; recompute them unnormalized here.
    std::vector<double> out(V);
    auto outp = model.out_proj();
    auto bias = model.out_bias();
    for (std::size_t v = 0; v < V; ++v) out[v] = bias[v];
    for (std::size_t j = 0; j < d; ++j) {
        const double c = ws.ctx[j];
        for (std::size_t v = 0; v < V; ++v) out[v] += outp[j * V + v] * c;
    }
    return out;
}

double lm_loss_grad(const LmModel& model, std::span<const TokenId> seq,
                    std::span<const std::size_t> positions, std::span<double> grad) {
    check_model(model);
    if (seq.empty()) throw input_error("loss requires a non-empty sequence");
    if (positions.empty()) throw input_error("loss requires at least one position");
    for (TokenId id : seq) {
        if (id >= model.vocab_size) {
            throw input_error("token id " + std::to_string(id) +
                              " is outside the model vocabulary");
        }
    }
    for (std::size_t p : positions) {
        if (p >= seq.size()) {
            throw input_error("masked position " + std::to_string(p) +
                              " is outside the sequence");
        }
    }
    const bool with_grad = !grad.empty();
    if (with_grad) {
        if (grad.size() != model.param_count()) {
            throw invariant_error("gradient size does not match parameter count");
        }
        std::fill(grad.begin(), grad.end(), 0.0);
    }

    const std::size_t k = model.context;
    const std::size_t d = model.dim;
    const std::size_t V = model.vocab_size;
    const std::size_t embed_off = 0;
    const std::size_t ctx_off = static_cast<std::size_t>(V) * d;
    const std::size_t out_off = ctx_off + k * d * d;
    const std::size_t bias_off = out_off + d * V;

    Workspace ws(model);
    std::vector<TokenId> history(k);
    auto ctxp = model.ctx_proj();
    auto outp = model.out_proj();

    const double inv_n = 1.0 / static_cast<double>(positions.size());
    double loss = 0.0;
    for (std::size_t p : positions) {
        gather_history(model, seq, p, history);
        forward(model, history, ws);
        const TokenId target = seq[p];
        const double pt = ws.prob[target];
        loss -= std::log(std::max(pt, 1e-300));
        if (!with_grad) continue;

        // dlogit = (softmax - onehot) / n
        for (std::size_t j = 0; j < d; ++j) ws.dctx[j] = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
            double dl = ws.prob[v] * inv_n;
            if (v == target) dl -= inv_n;
            if (dl == 0.0) continue;
            grad[bias_off + v] += dl;
            for (std::size_t j = 0; j < d; ++j) {
                grad[out_off + j * V + v] += ws.ctx[j] * dl;
                ws.dctx[j] += outp[j * V + v] * dl;
            }
        }
        for (std::size_t i = 0; i < k * d; ++i) ws.dh0[i] = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dpre = ws.dctx[j] * (1.0 - ws.ctx[j] * ws.ctx[j]);
            if (dpre == 0.0) continue;
            for (std::size_t i = 0; i < k * d; ++i) {
                grad[ctx_off + i * d + j] += ws.h0[i] * dpre;
                ws.dh0[i] += ctxp[i * d + j] * dpre;
            }
        }
        for (std::size_t s = 0; s < k; ++s) {
            const TokenId id = history[s];
            if (id == model.bos()) continue;
            double* row = grad.data() + embed_off + static_cast<std::size_t>(id) * d;
            for (std::size_t t = 0; t < d; ++t) row[t] += ws.dh0[s * d + t];
        }
    }
    return loss * inv_n;
}

double clm_loss(const LmModel& model, std::span<const TokenId> seq) {
    std::vector<std::size_t> all(seq.size());
    std::iota(all.begin(), all.end(), 0);
    return lm_loss_grad(model, seq, all, {});
}

double dap_loss(const LmModel& model, std::span<const TokenId> seq,
                const std::vector<std::size_t>& mask_positions) {
    std::vector<std::size_t> mask = mask_positions;
    std::sort(mask.begin(), mask.end());
    if (std::adjacent_find(mask.begin(), mask.end()) != mask.end()) {
        throw input_error("masked positions must be distinct");
    }
    return lm_loss_grad(model, seq, mask, {});
}

TrainReport train_lm(LmModel& model, const Corpus& corpus, const Tokenizer& tok,
                     const LmTrainConfig& cfg, const std::string& label) {
    check_model(model);
    if (cfg.epochs < 1) throw input_error("training needs at least one epoch");
    if (tok.total_vocab_size() > model.vocab_size) {
        throw input_error("tokenizer yields " + std::to_string(tok.total_vocab_size()) +
                          " ids but the model vocabulary holds " +
                          std::to_string(model.vocab_size));
    }

    std::vector<TokenId> ids;
    for (const std::string& doc : corpus.documents) {
        std::vector<TokenId> enc = tok.encode(doc);
        ids.insert(ids.end(), enc.begin(), enc.end());
    }
    const std::size_t W = static_cast<std::size_t>(model.context) + 1;
    if (ids.size() < W) {
        throw input_error("corpus encodes to " + std::to_string(ids.size()) +
                          " tokens; training needs at least " + std::to_string(W));
    }
    const std::size_t windows = ids.size() / W;

    std::vector<std::size_t> positions;
    const std::size_t mask_start = cfg.mask == MaskMode::full ? 0 : W / 2;
    for (std::size_t p = mask_start; p < W; ++p) positions.push_back(p);

    TrainReport report;
    report.tokenizer_label = label;
    report.epochs = cfg.epochs;
    report.windows_per_epoch = windows;
    report.window_len = static_cast<std::uint32_t>(W);
    report.total_tokens =
        static_cast<std::uint64_t>(cfg.epochs) * windows * static_cast<std::uint64_t>(W);
    report.losses.reserve(static_cast<std::size_t>(cfg.epochs) * windows);

    std::vector<std::size_t> order(windows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed);
    AdamState opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    std::vector<double> grad(model.param_count());

    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint32_t e = 0; e < cfg.epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t w : order) {
            std::span<const TokenId> window(ids.data() + w * W, W);
            const double loss = lm_loss_grad(model, window, positions, grad);
            opt.step(model.params, grad);
            report.losses.push_back(loss);
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

    const std::size_t tail = std::min<std::size_t>(report.losses.size(), 50);
    double acc = 0.0;
    for (std::size_t i = report.losses.size() - tail; i < report.losses.size(); ++i) {
        acc += report.losses[i];
    }
    report.final_ma_loss = acc / static_cast<double>(tail);
    return report;
}

ComparisonStats compare_runs(const TrainReport& a, const TrainReport& b) {
    if (a.total_tokens == 0 || a.wall_seconds <= 0.0 || a.final_ma_loss == 0.0) {
        throw input_error("reference run lacks the totals needed for comparison");
    }
    ComparisonStats s;
    s.label_a = a.tokenizer_label;
    s.label_b = b.tokenizer_label;
    s.tokens_delta_pct = 100.0 *
                         (static_cast<double>(b.total_tokens) -
                          static_cast<double>(a.total_tokens)) /
                         static_cast<double>(a.total_tokens);
    s.time_delta_pct = 100.0 * (b.wall_seconds - a.wall_seconds) / a.wall_seconds;
    s.final_loss_delta_pct =
        100.0 * (b.final_ma_loss - a.final_ma_loss) / a.final_ma_loss;
    return s;
}

void write_train_report(const TrainReport& report, const std::filesystem::path& path) {
    nlohmann::json j;
    j["tokenizer_label"] = report.tokenizer_label;
    j["epochs"] = report.epochs;
    j["window_len"] = report.window_len;
    j["windows_per_epoch"] = report.windows_per_epoch;
    j["total_tokens"] = report.total_tokens;
    j["wall_seconds"] = report.wall_seconds;
    j["final_ma_loss"] = report.final_ma_loss;
    j["losses"] = report.losses;
    write_text_file(path, j.dump(2) + "\n");
}

TrainReport read_train_report(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw input_error("malformed train report " + path.string() + ": " + e.what());
    }
    TrainReport r;
    try {
        r.tokenizer_label = j.at("tokenizer_label").get<std::string>();
        r.epochs = j.at("epochs").get<std::uint32_t>();
        r.window_len = j.at("window_len").get<std::uint32_t>();
        r.windows_per_epoch = j.at("windows_per_epoch").get<std::uint64_t>();
        r.total_tokens = j.at("total_tokens").get<std::uint64_t>();
        r.wall_seconds = j.at("wall_seconds").get<double>();
        r.final_ma_loss = j.at("final_ma_loss").get<double>();
        r.losses = j.at("losses").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw input_error("train report " + path.string() + " is malformed: " + e.what());
    }
    return r;
}

void write_loss_curve(const TrainReport& report, const std::filesystem::path& path) {
    std::string out = "step,loss\n";
    for (std::size_t i = 0; i < report.losses.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(report.losses[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

void write_comparison(const ComparisonStats& stats, const std::filesystem::path& path) {
    nlohmann::json j;
    j["run_a"] = stats.label_a;
    j["run_b"] = stats.label_b;
    j["tokens_delta_pct"] = stats.tokens_delta_pct;
    j["time_delta_pct"] = stats.time_delta_pct;
    j["final_loss_delta_pct"] = stats.final_loss_delta_pct;
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace tokgain
