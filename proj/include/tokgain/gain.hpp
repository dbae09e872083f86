#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokgain/selection.hpp"
#include "tokgain/tokenizer.hpp"

namespace tokgain {

struct Corpus;
struct WordCounts;

struct WordRecord {
    std::string word;
    std::uint64_t freq = 0;
    std::uint32_t subtokens = 0;
    double gain = 0.0; // nats
};

// Per-word gain ranking, ordered by gain desc, then freq desc, then word.
struct GainTable {
    std::vector<WordRecord> records;
    std::uint32_t alpha = 1; // context width used for window diagnostics
};

// Number of subword tokens the tokenizer spends on one word.
std::uint32_t subtoken_count(const Tokenizer& tok, std::string_view word);

// Gain of a context that fragments into the given per-word token counts,
// against the alpha words it holds: ln(1 + sum) - ln(1 + alpha).
double context_gain(std::span<const std::uint32_t> subtoken_counts, std::uint32_t alpha);

// Frequency-weighted gain of one word: ln(1 + freq * subtokens) - ln(1 + freq).
double word_gain(std::uint64_t freq, std::uint32_t subtokens);

GainTable build_gain_table(const Tokenizer& tok, const WordCounts& counts,
                           std::uint32_t alpha);

// Words whose gain strictly exceeds epsilon, highest gain first.
Selection select_threshold(const GainTable& table, double epsilon);

using BigramCounts = std::map<std::pair<TokenId, TokenId>, std::uint64_t>;

// Adjacent-pair counts of one token sequence, merged into counts.
void accumulate_bigrams(std::span<const TokenId> ids, BigramCounts& counts);

// H(Y|X) over observed bigram counts, in nats.
double conditional_entropy(const BigramCounts& counts);

struct ContextGainSummary {
    double mean_gain = 0.0;
    std::uint64_t windows = 0;
};

// Mean gain over non-overlapping alpha-word windows of each document.
ContextGainSummary mean_context_gain(const Corpus& corpus, const GainTable& table);

void write_gain_table(const GainTable& table, const std::filesystem::path& path);
GainTable read_gain_table(const std::filesystem::path& path);

} // namespace tokgain
