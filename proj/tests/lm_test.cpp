#include <cmath>
#include <numeric>

#include "doctest.h"
#include "json.hpp"

#include "tokgain/corpus.hpp"
#include "tokgain/error.hpp"
#include "tokgain/fixtures.hpp"
#include "tokgain/lm.hpp"
#include "tokgain/rng.hpp"

#include "test_support.hpp"

using namespace tokgain;
using doctest::Approx;

namespace {

std::vector<TokenId> random_seq(Rng& rng, std::size_t len, std::uint32_t vocab) {
    std::vector<TokenId> seq(len);
    for (auto& t : seq) t = static_cast<TokenId>(rng.below(vocab));
    return seq;
}

} // namespace

TEST_SUITE("lm") {

TEST_CASE("a zero model predicts uniformly, so its loss is ln V") {
    for (std::uint32_t v : {2u, 7u, 300u}) {
        LmModel m = LmModel::zeros(v, 3, 4);
        std::vector<TokenId> seq = {0, 1, v - 1, 1, 0};
        CHECK(clm_loss(m, seq) == Approx(std::log(static_cast<double>(v))).epsilon(1e-12));
    }
}

TEST_CASE("logits respect the layout and the zero begin marker") {
    LmModel m = LmModel::zeros(3, 2, 2);
    // embed rows: id0=(1,0), id1=(0,2), id2=(0,0)
    m.embed()[0] = 1.0;
    m.embed()[3] = 2.0;
    // ctx_proj: identity on the first two of the four concat dims
    m.ctx_proj()[0] = 1.0;           // concat[0] -> h[0]
    m.ctx_proj()[2 * 2 + 1] = 1.0;   // concat[2] -> h[1]
    // out_proj: d x V, row-major; h[0] feeds logit0, h[1] feeds logit2
    m.out_proj()[0] = 1.0;
    m.out_proj()[1 * 3 + 2] = 1.0;
    m.out_bias()[1] = 0.5;

    std::vector<TokenId> hist = {0, 1};
    std::vector<double> l = logits(m, hist);
    REQUIRE(l.size() == 3);
    CHECK(l[0] == Approx(std::tanh(1.0)).epsilon(1e-15));
    CHECK(l[1] == Approx(0.5).epsilon(1e-15));
    CHECK(l[2] == 0.0); // concat[2] is id1's first dim, which is 0

    // begin-of-sequence rows contribute nothing
    std::vector<TokenId> padded = {m.bos(), m.bos()};
    std::vector<double> lp = logits(m, padded);
    CHECK(lp[0] == 0.0);
    CHECK(lp[1] == Approx(0.5).epsilon(1e-15));
    CHECK(lp[2] == 0.0);
}

TEST_CASE("logits validate history length and id range") {
    LmModel m = LmModel::zeros(4, 2, 2);
    std::vector<TokenId> short_hist = {0};
    CHECK_THROWS_AS(logits(m, short_hist), invariant_error);
    std::vector<TokenId> bad = {0, 9};
    CHECK_THROWS_AS(logits(m, bad), invariant_error);
}

TEST_CASE("full-mask windowed loss equals the plain causal loss") {
    Rng rng(41);
    LmModel m = LmModel::random_init(12, 3, 4, 7);
    std::vector<TokenId> seq = random_seq(rng, 40, 12);
    std::vector<std::size_t> all(seq.size());
    std::iota(all.begin(), all.end(), 0);
    CHECK(dap_loss(m, seq, all) == Approx(clm_loss(m, seq)).epsilon(1e-12));
}

TEST_CASE("masked loss covers only the chosen positions") {
    LmModel m = LmModel::random_init(9, 2, 3, 11);
    std::vector<TokenId> seq = {1, 2, 3, 4, 5, 6};
    double manual = 0.0;
    for (std::size_t pos : {3u, 5u}) {
        std::vector<TokenId> hist;
        for (std::size_t back = 2; back >= 1; --back) {
            hist.push_back(pos >= back ? seq[pos - back] : m.bos());
        }
        std::vector<double> l = logits(m, hist);
        double mx = *std::max_element(l.begin(), l.end());
        double z = 0.0;
        for (double v : l) z += std::exp(v - mx);
        manual += mx + std::log(z) - l[seq[pos]];
    }
    manual /= 2.0;
    CHECK(dap_loss(m, seq, {3, 5}) == Approx(manual).epsilon(1e-12));
}

TEST_CASE("dap_loss validates its mask") {
    LmModel m = LmModel::zeros(4, 2, 2);
    std::vector<TokenId> seq = {0, 1, 2};
    CHECK_THROWS_AS(dap_loss(m, seq, {}), input_error);
    CHECK_THROWS_AS(dap_loss(m, seq, {3}), input_error);
    CHECK_THROWS_AS(dap_loss(m, seq, {1, 1}), input_error);
}

TEST_CASE("loss rejects sequences with out-of-vocabulary ids") {
    LmModel m = LmModel::zeros(4, 2, 2);
    std::vector<TokenId> seq = {0, 4};
    CHECK_THROWS_AS(clm_loss(m, seq), input_error);
    std::vector<TokenId> empty;
    CHECK_THROWS_AS(clm_loss(m, empty), input_error);
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(99);
    for (int trial = 0; trial < 4; ++trial) {
        std::uint32_t v = 5 + 3 * static_cast<std::uint32_t>(trial);
        std::uint32_t k = 1 + static_cast<std::uint32_t>(trial % 3);
        LmModel m = LmModel::random_init(v, k, 4, 100 + trial);
        std::vector<TokenId> seq = random_seq(rng, 12, v);
        std::vector<std::size_t> positions = {0, 3, 7, 11};
        std::vector<double> grad(m.param_count());
        double base = lm_loss_grad(m, seq, positions, grad);
        CHECK(base > 0.0);

        const double h = 1e-6;
        for (std::size_t i = 0; i < m.param_count(); i += 7) {
            LmModel p = m;
            p.params[i] += h;
            double up = lm_loss_grad(p, seq, positions, {});
            p.params[i] = m.params[i] - h;
            double dn = lm_loss_grad(p, seq, positions, {});
            double fd = (up - dn) / (2.0 * h);
            double tol = 1e-4 * std::max({1.0, std::abs(fd), std::abs(grad[i])});
            CHECK(std::abs(grad[i] - fd) <= tol);
        }
    }
}

TEST_CASE("training lowers the moving-average loss on a small corpus") {
    Corpus corpus = make_corpus(fixtures::generate_general_text(51, 12000));
    Tokenizer tok = Tokenizer::train_bpe((corpus), 300);
    LmModel m = LmModel::random_init(tok.total_vocab_size(), 4, 8, 1);

    LmTrainConfig cfg;
    cfg.epochs = 2;
    cfg.lr = 5e-3;
    cfg.seed = 17;
    TrainReport rep = train_lm(m, corpus, tok, cfg, "baseline");

    CHECK(rep.tokenizer_label == "baseline");
    CHECK(rep.window_len == 5);
    CHECK(rep.epochs == 2);
    REQUIRE(rep.losses.size() == rep.windows_per_epoch * 2);
    CHECK(rep.total_tokens == rep.losses.size() * 5);
    CHECK(rep.final_ma_loss < rep.losses.front());
    double tail = 0.0;
    std::size_t n = std::min<std::size_t>(50, rep.losses.size());
    for (std::size_t i = rep.losses.size() - n; i < rep.losses.size(); ++i) {
        tail += rep.losses[i];
    }
    CHECK(rep.final_ma_loss == Approx(tail / static_cast<double>(n)).epsilon(1e-12));
    CHECK(rep.wall_seconds > 0.0);
}

TEST_CASE("training is deterministic for a fixed seed") {
    Corpus corpus = make_corpus(fixtures::generate_general_text(52, 6000));
    Tokenizer tok = Tokenizer::train_bpe((corpus), 280);
    LmTrainConfig cfg;
    cfg.epochs = 1;
    cfg.seed = 3;

    LmModel a = LmModel::random_init(tok.total_vocab_size(), 3, 6, 9);
    LmModel b = LmModel::random_init(tok.total_vocab_size(), 3, 6, 9);
    TrainReport ra = train_lm(a, corpus, tok, cfg, "x");
    TrainReport rb = train_lm(b, corpus, tok, cfg, "x");
    REQUIRE(ra.losses.size() == rb.losses.size());
    for (std::size_t i = 0; i < ra.losses.size(); ++i) CHECK(ra.losses[i] == rb.losses[i]);
    for (std::size_t i = 0; i < a.params.size(); ++i) CHECK(a.params[i] == b.params[i]);
}

TEST_CASE("second-half masking trains on later window positions only") {
    Corpus corpus = make_corpus(fixtures::generate_general_text(53, 6000));
    Tokenizer tok = Tokenizer::train_bpe((corpus), 280);
    LmTrainConfig cfg;
    cfg.epochs = 1;
    cfg.seed = 3;
    cfg.mask = MaskMode::second_half;
    LmModel m = LmModel::random_init(tok.total_vocab_size(), 3, 6, 9);
    TrainReport rep = train_lm(m, corpus, tok, cfg, "masked");
    CHECK(rep.losses.size() == rep.windows_per_epoch);
    // same schedule as the full mask, different loss values
    LmModel f = LmModel::random_init(tok.total_vocab_size(), 3, 6, 9);
    cfg.mask = MaskMode::full;
    TrainReport full = train_lm(f, corpus, tok, cfg, "full");
    CHECK(full.losses[0] != rep.losses[0]);
}

TEST_CASE("training demands a corpus of at least one window") {
    Corpus corpus = make_corpus({"ab"});
    Tokenizer tok = Tokenizer::train_bpe((corpus), 257);
    LmModel m = LmModel::zeros(tok.total_vocab_size(), 7, 4);
    LmTrainConfig cfg;
    CHECK_THROWS_WITH_AS(train_lm(m, corpus, tok, cfg, "x"),
                         doctest::Contains("at least"), input_error);
}

TEST_CASE("training rejects a tokenizer wider than the model") {
    Corpus corpus = make_corpus({"abc abc abc abc"});
    Tokenizer tok = Tokenizer::train_bpe((corpus), 258);
    LmModel m = LmModel::zeros(100, 2, 4);
    LmTrainConfig cfg;
    CHECK_THROWS_AS(train_lm(m, corpus, tok, cfg, "x"), input_error);
}

TEST_CASE("comparing a run against itself yields zero deltas") {
    TrainReport r;
    r.tokenizer_label = "a";
    r.total_tokens = 1000;
    r.wall_seconds = 2.0;
    r.final_ma_loss = 1.5;
    ComparisonStats c = compare_runs(r, r);
    CHECK(c.tokens_delta_pct == 0.0);
    CHECK(c.time_delta_pct == 0.0);
    CHECK(c.final_loss_delta_pct == 0.0);
}

TEST_CASE("comparison reports percentage deltas relative to the first run") {
    TrainReport a;
    a.tokenizer_label = "baseline";
    a.total_tokens = 1000;
    a.wall_seconds = 4.0;
    a.final_ma_loss = 2.0;
    TrainReport b;
    b.tokenizer_label = "augmented";
    b.total_tokens = 800;
    b.wall_seconds = 3.0;
    b.final_ma_loss = 1.5;
    ComparisonStats c = compare_runs(a, b);
    CHECK(c.label_a == "baseline");
    CHECK(c.label_b == "augmented");
    CHECK(c.tokens_delta_pct == Approx(-20.0).epsilon(1e-12));
    CHECK(c.time_delta_pct == Approx(-25.0).epsilon(1e-12));
    CHECK(c.final_loss_delta_pct == Approx(-25.0).epsilon(1e-12));

    TrainReport zero;
    CHECK_THROWS_AS(compare_runs(zero, b), input_error);
}

TEST_CASE("train reports and loss curves round-trip through files") {
    testsup::TempDir tmp("lmrep");
    TrainReport r;
    r.tokenizer_label = "baseline";
    r.losses = {2.5, 2.25, 2.0};
    r.total_tokens = 15;
    r.wall_seconds = 0.125;
    r.epochs = 1;
    r.windows_per_epoch = 3;
    r.window_len = 5;
    r.final_ma_loss = 2.25;
    write_train_report(r, tmp.file("r.json"));
    TrainReport back = read_train_report(tmp.file("r.json"));
    CHECK(back.tokenizer_label == r.tokenizer_label);
    CHECK(back.losses == r.losses);
    CHECK(back.total_tokens == r.total_tokens);
    CHECK(back.wall_seconds == r.wall_seconds);
    CHECK(back.epochs == r.epochs);
    CHECK(back.windows_per_epoch == r.windows_per_epoch);
    CHECK(back.window_len == r.window_len);
    CHECK(back.final_ma_loss == r.final_ma_loss);

    write_loss_curve(r, tmp.file("c.csv"));
    CHECK(read_text_file(tmp.file("c.csv")) ==
          "step,loss\n0,2.5\n1,2.25\n2,2\n");

    ComparisonStats c = compare_runs(r, r);
    write_comparison(c, tmp.file("cmp.json"));
    nlohmann::json j = nlohmann::json::parse(read_text_file(tmp.file("cmp.json")));
    CHECK(j.at("run_a") == "baseline");
    CHECK(j.at("tokens_delta_pct") == 0.0);
}

} // TEST_SUITE
