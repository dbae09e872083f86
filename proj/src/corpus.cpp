#include "tokgain/corpus.hpp"

#include <algorithm>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "tokgain/error.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

namespace {

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_ascii_punct(unsigned char c) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
}

std::string crlf_to_lf(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            out += '\n';
        } else {
            out += c;
        }
    }
    return out;
}

} // namespace

std::vector<WordSpan> word_spans(std::string_view text) {
    std::vector<WordSpan> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (is_space_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !is_space_byte(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t b = i;
        std::size_t e = j;
        while (b < e && is_ascii_punct(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && is_ascii_punct(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b < e) out.push_back({b, e});
        i = j;
    }
    return out;
}

std::vector<std::string> pre_tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (const WordSpan& sp : word_spans(text)) {
        out.emplace_back(text.substr(sp.begin, sp.end - sp.begin));
    }
    return out;
}

std::string normalize_nfc(std::string_view text) {
    // ASCII is closed under NFC; skip the ICU round trip for the common case.
    bool ascii = true;
    for (char c : text) {
        if (static_cast<unsigned char>(c) >= 0x80) {
            ascii = false;
            break;
        }
    }
    if (ascii) return std::string(text);

    UErrorCode ec = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(ec);
    if (U_FAILURE(ec) || nfc == nullptr) {
        throw invariant_error("NFC normalizer unavailable");
    }
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<std::int32_t>(text.size())));
    icu::UnicodeString norm = nfc->normalize(u, ec);
    if (U_FAILURE(ec)) throw invariant_error("NFC normalization failed");
    std::string out;
    norm.toUTF8String(out);
    return out;
}

Corpus make_corpus(std::vector<std::string> raw_documents,
                   const std::vector<std::string>& labels) {
    Corpus corpus;
    corpus.documents.reserve(raw_documents.size());
    for (std::size_t d = 0; d < raw_documents.size(); ++d) {
        const std::string& raw = raw_documents[d];
        if (auto bad = find_invalid_utf8(raw)) {
            std::string where =
                d < labels.size() ? labels[d] : "document " + std::to_string(d);
            throw input_error("invalid UTF-8 in " + where + " at byte offset " +
                              std::to_string(*bad));
        }
        std::string doc = normalize_nfc(crlf_to_lf(raw));
        corpus.total_chars += count_codepoints(doc);
        corpus.total_words += word_spans(doc).size();
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

Corpus load_corpus(const std::vector<std::filesystem::path>& paths) {
    std::vector<std::string> raw;
    std::vector<std::string> labels;
    raw.reserve(paths.size());
    for (const auto& p : paths) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(p, ec)) {
            throw input_error("corpus file not found: " + p.string());
        }
        raw.push_back(read_text_file(p));
        labels.push_back(p.string());
    }
    return make_corpus(std::move(raw), labels);
}

WordCounts word_counts(const Corpus& corpus) {
    // Per-document partials merged in document order; merging is a plain
    // sum, so any grouping of documents yields the same table.
    WordCounts total;
    for (const std::string& doc : corpus.documents) {
        WordCounts part;
        for (std::string& w : pre_tokenize(doc)) {
            ++part.entries[std::move(w)];
            ++part.total;
        }
        for (auto& [word, n] : part.entries) total.entries[word] += n;
        total.total += part.total;
    }
    return total;
}

} // namespace tokgain
