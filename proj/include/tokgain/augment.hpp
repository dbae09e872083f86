#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tokgain/selection.hpp"
#include "tokgain/tokenizer.hpp"

namespace tokgain {

struct Corpus;

struct ExtendResult {
    Tokenizer tokenizer;
    std::uint64_t skipped = 0; // entries already atomic under the base
};

// Appends up to cap selection entries (all of them when cap is empty) as
// added tokens, in score order. Words the base already encodes to a single
// token are skipped and counted. cap may not exceed the entry count.
ExtendResult extend_vocab(const Tokenizer& base, const Selection& sel,
                          std::optional<std::size_t> cap);

struct EmbeddingInit {
    TokenId new_id = 0;
    std::string token;
    std::vector<TokenId> source_ids; // base encoding, to be mean-pooled
};

struct EmbeddingInitPlan {
    std::vector<EmbeddingInit> entries;
};

// How each token added on top of base should seed its embedding row.
EmbeddingInitPlan embedding_init_plan(const Tokenizer& base, const Tokenizer& augmented);

void write_embedding_init_plan(const EmbeddingInitPlan& plan,
                               const std::filesystem::path& path);

struct DocSavings {
    std::uint64_t base_tokens = 0;
    std::uint64_t augmented_tokens = 0;
};

struct SavingsStats {
    std::uint64_t base_tokens = 0;
    std::uint64_t augmented_tokens = 0;
    std::int64_t saved_tokens = 0;
    double saved_pct = 0.0;
    std::vector<DocSavings> per_document;
    std::map<std::string, std::uint64_t> added_token_hits;
};

// Token spend of base vs augmented over a corpus.
SavingsStats savings_report(const Tokenizer& base, const Tokenizer& augmented,
                            const Corpus& corpus);

void write_savings(const SavingsStats& stats, const std::filesystem::path& path);

} // namespace tokgain
