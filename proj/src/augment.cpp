#include "tokgain/augment.hpp"

#include <cmath>

#include "json.hpp"

#include "tokgain/corpus.hpp"
#include "tokgain/error.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

ExtendResult extend_vocab(const Tokenizer& base, const Selection& sel,
                          std::optional<std::size_t> cap) {
    if (cap && *cap > sel.entries.size()) {
        throw input_error("cap " + std::to_string(*cap) + " exceeds the " +
                          std::to_string(sel.entries.size()) + " selection entries");
    }
    const std::size_t take = cap ? *cap : sel.entries.size();
    ExtendResult result{base, 0};
    std::vector<std::string> accepted;
    accepted.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const std::string& word = sel.entries[i].word;
        if (base.encode(word).size() <= 1) {
            ++result.skipped;
            continue;
        }
        accepted.push_back(word);
    }
    result.tokenizer = base.with_added_tokens(accepted);
    return result;
}

EmbeddingInitPlan embedding_init_plan(const Tokenizer& base, const Tokenizer& augmented) {
    if (augmented.vocab().tokens != base.vocab().tokens ||
        augmented.added_tokens().size() < base.added_tokens().size()) {
        throw input_error("augmented tokenizer does not derive from the base");
    }
    for (std::size_t i = 0; i < base.added_tokens().size(); ++i) {
        if (augmented.added_tokens()[i] != base.added_tokens()[i]) {
            throw input_error("augmented tokenizer reorders base added tokens");
        }
    }
    EmbeddingInitPlan plan;
    for (std::size_t i = base.added_tokens().size(); i < augmented.added_tokens().size();
         ++i) {
        const std::string& token = augmented.added_tokens()[i];
        EmbeddingInit init;
        init.new_id = static_cast<TokenId>(augmented.vocab().size() + i);
        init.token = token;
        init.source_ids = base.encode(token);
        if (init.source_ids.empty()) {
            throw invariant_error("added token has no base encoding: " + escape_token(token));
        }
        plan.entries.push_back(std::move(init));
    }
    return plan;
}

void write_embedding_init_plan(const EmbeddingInitPlan& plan,
                               const std::filesystem::path& path) {
    nlohmann::json entries = nlohmann::json::array();
    for (const EmbeddingInit& e : plan.entries) {
        entries.push_back({{"new_id", e.new_id},
                           {"token", escape_token(e.token)},
                           {"source_ids", e.source_ids}});
    }
    nlohmann::json j;
    j["strategy"] = "mean_of_source_rows";
    j["entries"] = std::move(entries);
    write_text_file(path, j.dump(2) + "\n");
}

SavingsStats savings_report(const Tokenizer& base, const Tokenizer& augmented,
                            const Corpus& corpus) {
    SavingsStats stats;
    for (const std::string& tok : augmented.added_tokens()) {
        stats.added_token_hits[tok] = 0;
    }
    stats.per_document.resize(corpus.documents.size());
    std::vector<std::map<std::string, std::uint64_t>> hits(corpus.documents.size());
    parallel_for(corpus.documents.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::string& doc = corpus.documents[i];
            stats.per_document[i].base_tokens = base.encode(doc).size();
            stats.per_document[i].augmented_tokens = augmented.encode(doc, &hits[i]).size();
        }
    });
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        stats.base_tokens += stats.per_document[i].base_tokens;
        stats.augmented_tokens += stats.per_document[i].augmented_tokens;
        for (const auto& [word, n] : hits[i]) stats.added_token_hits[word] += n;
    }
    stats.saved_tokens = static_cast<std::int64_t>(stats.base_tokens) -
                         static_cast<std::int64_t>(stats.augmented_tokens);
    stats.saved_pct = stats.base_tokens == 0
                          ? 0.0
                          : 100.0 * static_cast<double>(stats.saved_tokens) /
                                static_cast<double>(stats.base_tokens);
    return stats;
}

void write_savings(const SavingsStats& stats, const std::filesystem::path& path) {
    nlohmann::json per_doc = nlohmann::json::array();
    for (const DocSavings& d : stats.per_document) {
        per_doc.push_back(
            {{"base_tokens", d.base_tokens}, {"augmented_tokens", d.augmented_tokens}});
    }
    nlohmann::json hits = nlohmann::json::object();
    for (const auto& [word, n] : stats.added_token_hits) hits[word] = n;
    nlohmann::json j;
    j["base_tokens"] = stats.base_tokens;
    j["augmented_tokens"] = stats.augmented_tokens;
    j["saved_tokens"] = stats.saved_tokens;
    // Four decimals keeps the field stable across platforms.
    j["saved_pct"] = std::round(stats.saved_pct * 10000.0) / 10000.0;
    j["per_document"] = std::move(per_doc);
    j["added_token_hits"] = std::move(hits);
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace tokgain
