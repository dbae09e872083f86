#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tokgain {

struct Corpus;

using TokenId = std::uint32_t;

inline constexpr std::size_t kByteTokens = 256;

struct TransparentStringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
        return std::hash<std::string_view>{}(s);
    }
};

// Dense token-string <-> id table. Ids 0..255 are the single-byte tokens;
// every later id is the concatenation of one merge rule's sides.
struct Vocab {
    std::vector<std::string> tokens; // index = id
    std::unordered_map<std::string, TokenId, TransparentStringHash, std::equal_to<>> ids;

    std::size_t size() const { return tokens.size(); }
    std::optional<TokenId> find(std::string_view token) const;
};

struct MergeRule {
    std::string left;
    std::string right;
    std::uint32_t rank = 0; // position in the ordered merge list
};

// Byte-level subword tokenizer with an ordered merge list and optional
// added tokens that bypass merging. Immutable after construction, so a
// single instance may be shared across threads.
class Tokenizer {
public:
    // Learns merges from word counts until the vocabulary reaches
    // target_vocab_size or no pair repeats. target must be >= 257.
    static Tokenizer train_bpe(const Corpus& corpus, std::size_t target_vocab_size);

    // Builds a tokenizer from explicit parts, checking every structural
    // invariant. Throws invariant_error on any violation.
    static Tokenizer from_parts(std::vector<std::string> vocab_tokens,
                                std::vector<MergeRule> merges,
                                std::vector<std::string> added_tokens);

    static Tokenizer load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::vector<TokenId> encode(std::string_view text) const;
    // As encode, additionally counting added-token matches per surface form.
    std::vector<TokenId> encode(std::string_view text,
                                std::map<std::string, std::uint64_t>* added_hits) const;

    // Concatenates token bytes, replacing invalid UTF-8 with U+FFFD.
    std::string decode(std::span<const TokenId> ids) const;

    // Raw bytes of one token; throws invariant_error when id is out of range.
    std::string_view token_bytes(TokenId id) const;

    // Copy of this tokenizer with extra added tokens appended. Existing ids
    // are untouched; duplicates of current added tokens are rejected.
    Tokenizer with_added_tokens(const std::vector<std::string>& more) const;

    const Vocab& vocab() const { return vocab_; }
    const std::vector<MergeRule>& merges() const { return merges_; }
    const std::vector<std::string>& added_tokens() const { return added_; }
    std::size_t total_vocab_size() const { return vocab_.size() + added_.size(); }

    // Id of an added token, if word is one.
    std::optional<TokenId> added_id(std::string_view word) const;

private:
    Tokenizer() = default;
    void build_indexes();
    void bpe_segment(std::string_view bytes, std::vector<TokenId>& out) const;

    Vocab vocab_;
    std::vector<MergeRule> merges_;
    std::vector<std::string> added_;
    // (left id << 32 | right id) -> merged id; rank recovers as id - 256.
    std::unordered_map<std::uint64_t, TokenId> pair_to_merged_;
    std::unordered_map<std::string, std::uint32_t, TransparentStringHash, std::equal_to<>>
        added_index_;
};

// Printable-ASCII escaping used by the on-disk format and token displays:
// bytes 0x21..0x7E except '\' stay literal, '\' doubles, everything else
// (space included) becomes \xNN.
std::string escape_token(std::string_view raw);

// Inverse of escape_token; throws input_error on malformed input.
std::string unescape_token(std::string_view escaped);

} // namespace tokgain
