#include "tokgain/tokenizer.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>
#include <unordered_set>

#include "json.hpp"

#include "tokgain/corpus.hpp"
#include "tokgain/error.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

namespace {

std::uint64_t pair_key(TokenId left, TokenId right) {
    return (static_cast<std::uint64_t>(left) << 32) | right;
}

bool has_space_byte(std::string_view s) {
    for (unsigned char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f')
            return true;
    }
    return false;
}

} // namespace

std::optional<TokenId> Vocab::find(std::string_view token) const {
    auto it = ids.find(token);
    if (it == ids.end()) return std::nullopt;
    return it->second;
}

std::string escape_token(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (c == '\\') {
            out += "\\\\";
        } else if (c >= 0x21 && c <= 0x7E) {
            out += static_cast<char>(c);
        } else {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\x%02x", c);
            out += buf;
        }
    }
    return out;
}

std::string unescape_token(std::string_view escaped) {
    auto hex_val = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(escaped.size());
    for (std::size_t i = 0; i < escaped.size();) {
        char c = escaped[i];
        if (c != '\\') {
            unsigned char u = static_cast<unsigned char>(c);
            if (u < 0x21 || u > 0x7E) {
                throw input_error("unescaped byte in token literal: " + std::string(escaped));
            }
            out += c;
            ++i;
            continue;
        }
        if (i + 1 >= escaped.size()) {
            throw input_error("dangling escape in token literal: " + std::string(escaped));
        }
        char next = escaped[i + 1];
        if (next == '\\') {
            out += '\\';
            i += 2;
            continue;
        }
        if (next == 'x') {
            if (i + 3 >= escaped.size()) {
                throw input_error("truncated \\x escape in token literal: " +
                                  std::string(escaped));
            }
            int hi = hex_val(escaped[i + 2]);
            int lo = hex_val(escaped[i + 3]);
            if (hi < 0 || lo < 0) {
                throw input_error("bad \\x escape in token literal: " + std::string(escaped));
            }
            out += static_cast<char>(hi * 16 + lo);
            i += 4;
            continue;
        }
        throw input_error("unknown escape in token literal: " + std::string(escaped));
    }
    return out;
}

void Tokenizer::build_indexes() {
    // Byte tokens occupy ids 0..255 verbatim.
    if (vocab_.tokens.size() < kByteTokens) {
        throw invariant_error("vocabulary must start with the 256 byte tokens");
    }
    for (std::size_t b = 0; b < kByteTokens; ++b) {
        const std::string& t = vocab_.tokens[b];
        if (t.size() != 1 || static_cast<unsigned char>(t[0]) != b) {
            throw invariant_error("byte token missing or misplaced at id " + std::to_string(b));
        }
    }
    vocab_.ids.clear();
    vocab_.ids.reserve(vocab_.tokens.size());
    for (std::size_t i = 0; i < vocab_.tokens.size(); ++i) {
        auto [it, inserted] = vocab_.ids.emplace(vocab_.tokens[i], static_cast<TokenId>(i));
        if (!inserted) {
            throw invariant_error("duplicate vocabulary token: " + escape_token(vocab_.tokens[i]));
        }
    }
    if (vocab_.tokens.size() != kByteTokens + merges_.size()) {
        throw invariant_error("vocabulary size does not match merge count");
    }
    pair_to_merged_.clear();
    pair_to_merged_.reserve(merges_.size());
    for (std::size_t r = 0; r < merges_.size(); ++r) {
        const MergeRule& m = merges_[r];
        if (m.rank != r) {
            throw invariant_error("non-contiguous merge rank at position " + std::to_string(r));
        }
        auto left = vocab_.find(m.left);
        auto right = vocab_.find(m.right);
        if (!left || !right) {
            throw invariant_error("merge " + std::to_string(r) +
                                  " references a token outside the vocabulary");
        }
        if (vocab_.tokens[kByteTokens + r] != m.left + m.right) {
            throw invariant_error("merge " + std::to_string(r) +
                                  " does not produce vocabulary token " +
                                  std::to_string(kByteTokens + r));
        }
        auto [it, inserted] = pair_to_merged_.emplace(
            pair_key(*left, *right), static_cast<TokenId>(kByteTokens + r));
        if (!inserted) {
            throw invariant_error("duplicate merge pair at rank " + std::to_string(r));
        }
    }
    added_index_.clear();
    added_index_.reserve(added_.size());
    for (std::size_t i = 0; i < added_.size(); ++i) {
        const std::string& t = added_[i];
        if (t.empty()) throw invariant_error("added token must be non-empty");
        if (has_space_byte(t)) {
            throw invariant_error("added token contains whitespace: " + escape_token(t));
        }
        auto [it, inserted] = added_index_.emplace(t, static_cast<std::uint32_t>(i));
        if (!inserted) {
            throw invariant_error("duplicate added token: " + escape_token(t));
        }
    }
}

Tokenizer Tokenizer::from_parts(std::vector<std::string> vocab_tokens,
                                std::vector<MergeRule> merges,
                                std::vector<std::string> added_tokens) {
    Tokenizer tok;
    tok.vocab_.tokens = std::move(vocab_tokens);
    tok.merges_ = std::move(merges);
    tok.added_ = std::move(added_tokens);
    tok.build_indexes();
    return tok;
}

Tokenizer Tokenizer::with_added_tokens(const std::vector<std::string>& more) const {
    Tokenizer tok;
    tok.vocab_.tokens = vocab_.tokens;
    tok.merges_ = merges_;
    tok.added_ = added_;
    tok.added_.insert(tok.added_.end(), more.begin(), more.end());
    tok.build_indexes();
    return tok;
}

std::optional<TokenId> Tokenizer::added_id(std::string_view word) const {
    auto it = added_index_.find(word);
    if (it == added_index_.end()) return std::nullopt;
    return static_cast<TokenId>(vocab_.size() + it->second);
}

std::string_view Tokenizer::token_bytes(TokenId id) const {
    if (id < vocab_.size()) return vocab_.tokens[id];
    std::size_t a = id - vocab_.size();
    if (a < added_.size()) return added_[a];
    throw invariant_error("token id " + std::to_string(id) + " out of range");
}

// Merges byte symbols lowest rank first; among equal ranks the leftmost
// pair wins, which reproduces the segmentation the trainer saw.
void Tokenizer::bpe_segment(std::string_view bytes, std::vector<TokenId>& out) const {
    const std::size_t n = bytes.size();
    if (n == 0) return;
    if (n == 1 || pair_to_merged_.empty()) {
        for (unsigned char c : bytes) out.push_back(c);
        return;
    }

    struct Sym {
        TokenId id;
        std::int32_t next;
        std::uint32_t len; // 0 marks a consumed symbol
        std::uint32_t pos;
        std::int32_t prev;
    };
    std::vector<Sym> syms(n);
    for (std::size_t i = 0; i < n; ++i) {
        syms[i] = {static_cast<TokenId>(static_cast<unsigned char>(bytes[i])),
                   i + 1 < n ? static_cast<std::int32_t>(i + 1) : -1,
                   1,
                   static_cast<std::uint32_t>(i),
                   static_cast<std::int32_t>(i) - 1};
    }

    struct Cand {
        std::uint32_t rank;
        std::uint32_t pos;
        std::int32_t left;
        std::uint32_t left_len;
        std::uint32_t right_len;
    };
    auto later = [](const Cand& a, const Cand& b) {
        if (a.rank != b.rank) return a.rank > b.rank;
        return a.pos > b.pos;
    };
    std::priority_queue<Cand, std::vector<Cand>, decltype(later)> heap(later);

    auto push_pair = [&](std::int32_t l) {
        if (l < 0) return;
        std::int32_t r = syms[l].next;
        if (r < 0) return;
        auto it = pair_to_merged_.find(pair_key(syms[l].id, syms[r].id));
        if (it == pair_to_merged_.end()) return;
        std::uint32_t rank = it->second - static_cast<std::uint32_t>(kByteTokens);
        heap.push({rank, syms[l].pos, l, syms[l].len, syms[r].len});
    };
    for (std::size_t i = 0; i + 1 < n; ++i) push_pair(static_cast<std::int32_t>(i));

    while (!heap.empty()) {
        Cand c = heap.top();
        heap.pop();
        std::int32_t l = c.left;
        // A length change means one side was merged after this entry was
        // queued; the entry is stale.
        if (syms[l].len != c.left_len) continue;
        std::int32_t r = syms[l].next;
        if (r < 0 || syms[r].len != c.right_len) continue;
        syms[l].id = static_cast<TokenId>(kByteTokens + c.rank);
        syms[l].len += syms[r].len;
        syms[r].len = 0;
        syms[l].next = syms[r].next;
        if (syms[r].next >= 0) syms[syms[r].next].prev = l;
        push_pair(syms[l].prev);
        push_pair(l);
    }

    for (std::int32_t i = 0; i >= 0; i = syms[i].next) out.push_back(syms[i].id);
}

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
    return encode(text, nullptr);
}

std::vector<TokenId> Tokenizer::encode(std::string_view text,
                                       std::map<std::string, std::uint64_t>* added_hits) const {
    std::vector<TokenId> out;
    if (text.empty()) return out;
    if (added_.empty()) {
        bpe_segment(text, out);
        return out;
    }
    // Added tokens match whole pre-tokenization spans only; the byte runs
    // between matches fall through to ordinary merging.
    std::size_t cursor = 0;
    for (const WordSpan& sp : word_spans(text)) {
        std::string_view w = text.substr(sp.begin, sp.end - sp.begin);
        auto it = added_index_.find(w);
        if (it == added_index_.end()) continue;
        if (sp.begin > cursor) bpe_segment(text.substr(cursor, sp.begin - cursor), out);
        out.push_back(static_cast<TokenId>(vocab_.size() + it->second));
        if (added_hits) ++(*added_hits)[std::string(w)];
        cursor = sp.end;
    }
    if (cursor < text.size()) bpe_segment(text.substr(cursor), out);
    return out;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
    std::string raw;
    for (TokenId id : ids) raw += token_bytes(id);
    return sanitize_utf8(raw);
}

Tokenizer Tokenizer::train_bpe(const Corpus& corpus, std::size_t target_vocab_size) {
    if (target_vocab_size < kByteTokens + 1) {
        throw input_error("target vocabulary size must be at least 257, got " +
                          std::to_string(target_vocab_size));
    }

    WordCounts wc = word_counts(corpus);
    std::vector<std::vector<TokenId>> seqs;
    std::vector<std::uint64_t> freqs;
    seqs.reserve(wc.entries.size());
    freqs.reserve(wc.entries.size());
    for (const auto& [word, freq] : wc.entries) {
        std::vector<TokenId> seq;
        seq.reserve(word.size());
        for (unsigned char c : word) seq.push_back(c);
        seqs.push_back(std::move(seq));
        freqs.push_back(freq);
    }

    std::vector<std::string> tokens;
    tokens.reserve(target_vocab_size);
    for (std::size_t b = 0; b < kByteTokens; ++b) tokens.emplace_back(1, static_cast<char>(b));
    std::unordered_map<std::string, TokenId, TransparentStringHash, std::equal_to<>> token_ids;
    for (std::size_t i = 0; i < tokens.size(); ++i) token_ids.emplace(tokens[i], i);

    std::unordered_map<std::uint64_t, std::uint64_t> pair_count;
    // Word lists may hold stale or duplicate entries; occurrence scans below
    // tolerate both. pair_count itself is kept exact.
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> pair_words;
    // Pairs whose concatenation collides with an existing token are barred
    // from merging: a vocabulary cannot hold one surface form twice.
    std::unordered_set<std::uint64_t> blocked;

    for (std::size_t w = 0; w < seqs.size(); ++w) {
        const auto& seq = seqs[w];
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            std::uint64_t key = pair_key(seq[i], seq[i + 1]);
            pair_count[key] += freqs[w];
            pair_words[key].push_back(static_cast<std::uint32_t>(w));
        }
    }

    std::vector<MergeRule> merges;
    while (tokens.size() < target_vocab_size) {
        // Highest count wins; ties go to the lexicographically smallest
        // (left, right) token-string pair so training is deterministic.
        bool found = false;
        std::uint64_t best_key = 0;
        std::uint64_t best_count = 0;
        for (const auto& [key, count] : pair_count) {
            if (count < 2 || count < best_count) continue;
            if (blocked.contains(key)) continue;
            TokenId l = static_cast<TokenId>(key >> 32);
            TokenId r = static_cast<TokenId>(key & 0xFFFFFFFFu);
            if (token_ids.contains(tokens[l] + tokens[r])) {
                blocked.insert(key);
                continue;
            }
            if (found && count == best_count) {
                TokenId bl = static_cast<TokenId>(best_key >> 32);
                TokenId br = static_cast<TokenId>(best_key & 0xFFFFFFFFu);
                if (tokens[l] != tokens[bl] ? tokens[l] > tokens[bl] : tokens[r] >= tokens[br])
                    continue;
            }
            best_key = key;
            best_count = count;
            found = true;
        }
        if (!found) break;

        TokenId left = static_cast<TokenId>(best_key >> 32);
        TokenId right = static_cast<TokenId>(best_key & 0xFFFFFFFFu);
        TokenId merged = static_cast<TokenId>(tokens.size());
        std::string surface = tokens[left] + tokens[right];
        merges.push_back({tokens[left], tokens[right], static_cast<std::uint32_t>(merges.size())});
        tokens.push_back(surface);
        token_ids.emplace(surface, merged);

        auto affected = std::move(pair_words[best_key]);
        pair_words.erase(best_key);
        std::sort(affected.begin(), affected.end());
        affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

        for (std::uint32_t w : affected) {
            const auto& seq = seqs[w];
            bool present = false;
            for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
                if (seq[i] == left && seq[i + 1] == right) {
                    present = true;
                    break;
                }
            }
            if (!present) continue;

            const std::uint64_t f = freqs[w];
            for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
                std::uint64_t key = pair_key(seq[i], seq[i + 1]);
                auto it = pair_count.find(key);
                it->second -= f;
                if (it->second == 0) pair_count.erase(it);
            }
            std::vector<TokenId> next;
            next.reserve(seq.size());
            for (std::size_t i = 0; i < seq.size();) {
                if (i + 1 < seq.size() && seq[i] == left && seq[i + 1] == right) {
                    next.push_back(merged);
                    i += 2;
                } else {
                    next.push_back(seq[i]);
                    ++i;
                }
            }
            for (std::size_t i = 0; i + 1 < next.size(); ++i) {
                std::uint64_t key = pair_key(next[i], next[i + 1]);
                pair_count[key] += f;
                pair_words[key].push_back(w);
            }
            seqs[w] = std::move(next);
        }
    }

    return from_parts(std::move(tokens), std::move(merges), {});
}

void Tokenizer::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    auto& vocab = j["vocab"] = nlohmann::json::array();
    for (const std::string& t : vocab_.tokens) vocab.push_back(escape_token(t));
    auto& merges = j["merges"] = nlohmann::json::array();
    for (const MergeRule& m : merges_) {
        merges.push_back(escape_token(m.left) + " " + escape_token(m.right));
    }
    auto& added = j["added_tokens"] = nlohmann::json::array();
    for (const std::string& t : added_) added.push_back(escape_token(t));
    write_text_file(path, j.dump(2) + "\n");
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw input_error("malformed tokenizer file " + path.string() + ": " + e.what());
    }
    auto string_array = [&](const char* field) {
        if (!j.contains(field) || !j[field].is_array()) {
            throw input_error("tokenizer file " + path.string() + " lacks array field '" +
                              field + "'");
        }
        std::vector<std::string> out;
        out.reserve(j[field].size());
        for (const auto& item : j[field]) {
            if (!item.is_string()) {
                throw input_error("tokenizer file " + path.string() + ": field '" + field +
                                  "' holds a non-string entry");
            }
            out.push_back(item.get<std::string>());
        }
        return out;
    };

    std::vector<std::string> vocab_tokens;
    for (const std::string& esc : string_array("vocab")) {
        vocab_tokens.push_back(unescape_token(esc));
    }
    std::vector<MergeRule> merges;
    std::size_t rank = 0;
    for (const std::string& line : string_array("merges")) {
        std::size_t sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size()) {
            throw input_error("tokenizer file " + path.string() + ": merge entry " +
                              std::to_string(rank) + " is not 'left right'");
        }
        merges.push_back({unescape_token(line.substr(0, sp)),
                          unescape_token(line.substr(sp + 1)),
                          static_cast<std::uint32_t>(rank)});
        ++rank;
    }
    std::vector<std::string> added;
    for (const std::string& esc : string_array("added_tokens")) {
        added.push_back(unescape_token(esc));
    }
    try {
        return from_parts(std::move(vocab_tokens), std::move(merges), std::move(added));
    } catch (const invariant_error& e) {
        throw input_error("tokenizer file " + path.string() + " is inconsistent: " + e.what());
    }
}

} // namespace tokgain
