#include "tokgain/gain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "tokgain/corpus.hpp"
#include "tokgain/error.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

std::uint32_t subtoken_count(const Tokenizer& tok, std::string_view word) {
    if (word.empty()) throw input_error("subtoken_count requires a non-empty word");
    return static_cast<std::uint32_t>(tok.encode(word).size());
}

double context_gain(std::span<const std::uint32_t> subtoken_counts, std::uint32_t alpha) {
    if (alpha < 1) throw input_error("context width alpha must be at least 1");
    if (subtoken_counts.empty()) {
        throw input_error("context_gain requires at least one word");
    }
    std::uint64_t sum = 0;
    for (std::uint32_t n : subtoken_counts) {
        if (n < 1) throw input_error("subtoken counts must be at least 1");
        sum += n;
    }
    return std::log(1.0 + static_cast<double>(sum)) - std::log(1.0 + static_cast<double>(alpha));
}

double word_gain(std::uint64_t freq, std::uint32_t subtokens) {
    if (freq < 1) throw input_error("word frequency must be at least 1");
    if (subtokens < 1) throw input_error("subtoken count must be at least 1");
    return std::log(1.0 + static_cast<double>(freq) * static_cast<double>(subtokens)) -
           std::log(1.0 + static_cast<double>(freq));
}

GainTable build_gain_table(const Tokenizer& tok, const WordCounts& counts,
                           std::uint32_t alpha) {
    if (alpha < 1) throw input_error("context width alpha must be at least 1");
    GainTable table;
    table.alpha = alpha;
    table.records.reserve(counts.entries.size());
    for (const auto& [word, freq] : counts.entries) {
        table.records.push_back({word, freq, 0, 0.0});
    }
    parallel_for(table.records.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            WordRecord& r = table.records[i];
            r.subtokens = subtoken_count(tok, r.word);
            r.gain = word_gain(r.freq, r.subtokens);
        }
    });
    std::sort(table.records.begin(), table.records.end(),
              [](const WordRecord& a, const WordRecord& b) {
                  if (a.gain != b.gain) return a.gain > b.gain;
                  if (a.freq != b.freq) return a.freq > b.freq;
                  return a.word < b.word;
              });
    return table;
}

Selection select_threshold(const GainTable& table, double epsilon) {
    Selection sel;
    sel.kind = SelectionKind::threshold;
    sel.threshold = epsilon;
    for (const WordRecord& r : table.records) {
        if (r.gain > epsilon) sel.entries.push_back({r.word, r.gain});
    }
    return sel;
}

void accumulate_bigrams(std::span<const TokenId> ids, BigramCounts& counts) {
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        ++counts[{ids[i], ids[i + 1]}];
    }
}

double conditional_entropy(const BigramCounts& counts) {
    if (counts.empty()) {
        throw input_error("conditional entropy requires at least one bigram");
    }
    long double total = 0.0L;
    for (const auto& [pair, count] : counts) {
        if (count == 0) throw input_error("bigram counts must be positive");
        total += static_cast<long double>(count);
    }
    // Terms grouped per first token: sum over y of c(x,y) * ln(c(x) / c(x,y)).
    long double acc = 0.0L;
    auto run_begin = counts.begin();
    while (run_begin != counts.end()) {
        auto run_end = run_begin;
        std::uint64_t cx = 0;
        while (run_end != counts.end() && run_end->first.first == run_begin->first.first) {
            cx += run_end->second;
            ++run_end;
        }
        for (auto it = run_begin; it != run_end; ++it) {
            acc += static_cast<long double>(it->second) *
                   std::log(static_cast<double>(cx) / static_cast<double>(it->second));
        }
        run_begin = run_end;
    }
    return static_cast<double>(acc / total);
}

ContextGainSummary mean_context_gain(const Corpus& corpus, const GainTable& table) {
    std::unordered_map<std::string_view, std::uint32_t> subtoks;
    subtoks.reserve(table.records.size());
    for (const WordRecord& r : table.records) subtoks.emplace(r.word, r.subtokens);

    ContextGainSummary out;
    long double acc = 0.0L;
    const std::uint32_t alpha = table.alpha;
    std::vector<std::uint32_t> window;
    window.reserve(alpha);
    for (const std::string& doc : corpus.documents) {
        window.clear();
        for (const std::string& w : pre_tokenize(doc)) {
            auto it = subtoks.find(std::string_view(w));
            if (it == subtoks.end()) {
                throw invariant_error("word missing from gain table: " + w);
            }
            window.push_back(it->second);
            if (window.size() == alpha) {
                acc += context_gain(window, alpha);
                ++out.windows;
                window.clear();
            }
        }
    }
    if (out.windows > 0) out.mean_gain = static_cast<double>(acc / out.windows);
    return out;
}

void write_gain_table(const GainTable& table, const std::filesystem::path& path) {
    std::string out = "word\tfreq\tsubtokens\tgain_nats\n";
    for (const WordRecord& r : table.records) {
        out += r.word;
        out += '\t';
        out += std::to_string(r.freq);
        out += '\t';
        out += std::to_string(r.subtokens);
        out += '\t';
        out += format_double(r.gain);
        out += '\n';
    }
    write_text_file(path, out);
}

GainTable read_gain_table(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "word\tfreq\tsubtokens\tgain_nats") {
        throw input_error("gain table " + path.string() + " has a bad header");
    }
    GainTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        std::size_t t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
        if (t3 == std::string::npos) {
            throw input_error("gain table " + path.string() + " line " +
                              std::to_string(lineno) + ": expected 4 tab-separated fields");
        }
        WordRecord r;
        r.word = line.substr(0, t1);
        try {
            r.freq = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
            r.subtokens = static_cast<std::uint32_t>(
                std::stoul(line.substr(t2 + 1, t3 - t2 - 1)));
            r.gain = std::stod(line.substr(t3 + 1));
        } catch (const std::exception&) {
            throw input_error("gain table " + path.string() + " line " +
                              std::to_string(lineno) + ": unparsable numeric field");
        }
        if (r.word.empty() || r.freq < 1 || r.subtokens < 1) {
            throw input_error("gain table " + path.string() + " line " +
                              std::to_string(lineno) + ": invalid record");
        }
        table.records.push_back(std::move(r));
    }
    for (std::size_t i = 1; i < table.records.size(); ++i) {
        if (table.records[i - 1].gain < table.records[i].gain) {
            throw input_error("gain table " + path.string() +
                              " is not sorted by gain descending");
        }
    }
    return table;
}

} // namespace tokgain
