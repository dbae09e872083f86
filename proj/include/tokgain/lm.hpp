#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tokgain/tokenizer.hpp"

namespace tokgain {

struct Corpus;

// Fixed-context feedforward next-token model:
//   logits = Wo * tanh(Wc * concat(k embedding rows)) + bias.
// Id vocab_size is the reserved begin-of-sequence pad; its embedding is an
// implicit zero row, so the table stays vocab_size x dim.
struct LmModel {
    std::uint32_t vocab_size = 0; // V
    std::uint32_t context = 0;    // k
    std::uint32_t dim = 0;        // d
    // [embed (V x d) | ctx_proj (k*d x d) | out_proj (d x V) | out_bias (V)]
    std::vector<double> params;

    static LmModel zeros(std::uint32_t vocab_size, std::uint32_t context,
                         std::uint32_t dim);
    static LmModel random_init(std::uint32_t vocab_size, std::uint32_t context,
                               std::uint32_t dim, std::uint64_t seed);

    TokenId bos() const { return vocab_size; }
    std::size_t param_count() const;

    std::span<double> embed();
    std::span<double> ctx_proj();
    std::span<double> out_proj();
    std::span<double> out_bias();
    std::span<const double> embed() const;
    std::span<const double> ctx_proj() const;
    std::span<const double> out_proj() const;
    std::span<const double> out_bias() const;
};

// Next-token logits for exactly `context` history ids (bos() allowed).
std::vector<double> logits(const LmModel& model, std::span<const TokenId> history);

// Mean cross entropy of predicting every position of seq, in nats.
double clm_loss(const LmModel& model, std::span<const TokenId> seq);

// Mean cross entropy over the masked positions only.
double dap_loss(const LmModel& model, std::span<const TokenId> seq,
                const std::vector<std::size_t>& mask_positions);

// Loss over the given positions with analytic gradient (grad may be empty
// to skip it; otherwise it must match param_count and is overwritten).
double lm_loss_grad(const LmModel& model, std::span<const TokenId> seq,
                    std::span<const std::size_t> positions, std::span<double> grad);

enum class MaskMode { full, second_half };

struct LmTrainConfig {
    std::uint32_t epochs = 3;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    MaskMode mask = MaskMode::full;
};

struct TrainReport {
    std::string tokenizer_label;
    std::vector<double> losses; // one per optimizer step
    std::uint64_t total_tokens = 0;
    double wall_seconds = 0.0;
    std::uint32_t epochs = 0;
    std::uint64_t windows_per_epoch = 0;
    std::uint32_t window_len = 0;
    double final_ma_loss = 0.0; // mean of the last (up to) 50 steps
};

// Encodes the corpus, splits it into fixed windows of context+1 tokens and
// runs per-window optimizer steps. The corpus must encode to at least one
// full window.
TrainReport train_lm(LmModel& model, const Corpus& corpus, const Tokenizer& tok,
                     const LmTrainConfig& cfg, const std::string& label);

struct ComparisonStats {
    std::string label_a;
    std::string label_b;
    double tokens_delta_pct = 0.0;
    double time_delta_pct = 0.0;
    double final_loss_delta_pct = 0.0;
};

// Relative deltas of run b against run a, in percent of a.
ComparisonStats compare_runs(const TrainReport& a, const TrainReport& b);

void write_train_report(const TrainReport& report, const std::filesystem::path& path);
TrainReport read_train_report(const std::filesystem::path& path);
void write_loss_curve(const TrainReport& report, const std::filesystem::path& path);
void write_comparison(const ComparisonStats& stats, const std::filesystem::path& path);

} // namespace tokgain
