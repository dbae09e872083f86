#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tokgain {

// Normalized in-memory text collection. Documents are NFC-normalized UTF-8
// with LF line endings.
struct Corpus {
    std::vector<std::string> documents;
    std::uint64_t total_words = 0; // per pre_tokenize
    std::uint64_t total_chars = 0; // code points
};

struct WordCounts {
    std::map<std::string, std::uint64_t> entries; // sorted for stable iteration
    std::uint64_t total = 0;
};

struct WordSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Splits text into candidate words: whitespace-separated fragments with
// leading and trailing ASCII punctuation stripped. Interior '_', '-', '.'
// and digits survive, so long tool identifiers stay in one piece.
std::vector<std::string> pre_tokenize(std::string_view text);

// Same splitting rule, as byte ranges into text.
std::vector<WordSpan> word_spans(std::string_view text);

// Validates and normalizes raw document contents. Errors cite the matching
// label (or document index) plus a byte offset for encoding problems.
Corpus make_corpus(std::vector<std::string> raw_documents,
                   const std::vector<std::string>& labels = {});

// Reads one document per path, then normalizes as make_corpus does.
Corpus load_corpus(const std::vector<std::filesystem::path>& paths);

WordCounts word_counts(const Corpus& corpus);

// Canonical composition; input must be valid UTF-8.
std::string normalize_nfc(std::string_view text);

} // namespace tokgain
