#include "tokgain/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "tokgain/error.hpp"
#include "tokgain/rng.hpp"

namespace tokgain {
namespace fixtures {

namespace {

const char* kDemoMerges[][2] = {
    {"a", "n"},   {"e", "n"},   {"O", "p"},   {"Op", "en"}, {"an", "e"},
    {"I", "n"},   {"In", "t"},  {"r", "o"},   {"ro", "d"},  {"rod", "u"},
    {"c", "e"},   {"D", "A"},   {"t", "o"},   {"to", "o"},  {"too", "l"},
    {" ", "an"},  {" ", "tool"},
};

const char* kCommonWords[] = {
    "the",      "a",        "an",       "of",       "and",      "to",
    "in",       "is",       "for",      "with",     "that",     "this",
    "on",       "as",       "by",       "from",     "at",       "or",
    "are",      "be",       "it",       "its",      "each",     "into",
    "when",     "then",     "after",    "before",   "while",    "during",
    "flow",     "design",   "tool",     "run",      "runs",     "file",
    "files",    "step",     "steps",    "stage",    "uses",     "used",
    "using",    "report",   "reports",  "output",   "outputs",  "input",
    "inputs",   "timing",   "clock",    "clocks",   "signal",   "signals",
    "cell",     "cells",    "layout",   "chip",     "logic",    "test",
    "tests",    "build",    "builds",   "check",    "checks",   "value",
    "values",   "default",  "defaults", "option",   "options",  "result",
    "results",  "path",     "paths",    "net",      "nets",     "pin",
    "pins",     "gate",     "gates",    "wire",     "wires",    "area",
    "power",    "ground",   "voltage",  "current",  "delay",    "slack",
    "setup",    "hold",     "rise",     "fall",     "edge",     "edges",
    "node",     "nodes",    "graph",    "tree",     "list",     "lists",
    "map",      "maps",     "set",      "sets",     "table",    "tables",
    "read",     "reads",    "write",    "writes",   "parse",    "parses",
    "load",     "loads",    "store",    "stores",   "merge",    "merges",
    "split",    "splits",   "place",    "places",   "route",    "routes",
    "synth",    "mapped",   "final",    "first",    "last",     "next",
    "new",      "old",      "small",    "large",    "long",     "short",
    "high",     "low",      "fast",     "slow",     "early",    "late",
    "all",      "some",     "many",     "few",      "more",     "less",
    "can",      "must",     "should",   "will",     "may",      "not",
    "also",     "only",     "both",     "between",  "within",   "across",
    "per",      "via",      "under",    "over",     "above",    "below",
    "config",   "configs",  "script",   "scripts",  "driver",   "drivers",
    "buffer",   "buffers",  "stages",   "levels",   "level",    "metal",
    "layer",    "layers",   "grid",     "tracks",   "track",    "row",
    "rows",     "site",     "sites",    "corner",   "corners",  "mode",
    "modes",    "case",     "cases",    "pass",     "fails",    "fail",
    "passes",   "error",    "errors",   "warning",  "warnings", "loop",
    "loops",    "block",    "blocks",   "macro",    "macros",   "core",
    "die",      "ring",     "rings",    "strap",    "straps",   "fill",
    "tap",      "taps",     "well",     "wells",    "diode",    "diodes",
};

const char* kTermHeads[] = {
    "Open",  "Triton", "Astra", "Vertex", "Chip",  "Macro", "Clock", "Route",
    "Place", "Synth",  "Volt",  "Metal",  "Fabric", "Grid", "Logic", "Cell",
    "Wire",  "Net",    "Path",  "Ring",
};

const char* kTermTails[] = {
    "Lane",   "Router", "Forge",  "Works",  "Scope",  "Mill",  "Planner",
    "Weaver", "Checker", "Mapper", "Tracer", "Bench",  "Flow",  "Smith",
    "Gate",   "Mesh",   "Pulse",  "Core",   "Link",   "Dock",
};

const char* kIdLibs[] = {"sky130", "gf180mcu", "asap7", "nangate45", "ihp130"};

const char* kIdFamilies[] = {"fd_sc_hd", "fd_sc_hs", "fd_sc_ls", "fd_io",
                             "fd_pr",    "hvl_sc",   "lp_sc",    "ms_sc"};

const char* kIdCells[] = {"inv",  "nand2",  "nor2", "buf",  "dfxtp",
                          "mux2", "clkbuf", "and2", "xor2", "conb"};

const int kIdStrengths[] = {1, 2, 4, 8};

std::vector<std::string> term_pool() {
    std::vector<std::string> out;
    out.reserve(300);
    for (const char* head : kTermHeads) {
        for (const char* tail : kTermTails) {
            if (out.size() == 300) return out;
            out.push_back(std::string(head) + tail);
        }
    }
    return out;
}

std::vector<std::string> identifier_pool() {
    std::vector<std::string> out;
    out.reserve(400);
    std::size_t i = 0;
    for (const char* lib : kIdLibs) {
        for (const char* fam : kIdFamilies) {
            for (const char* cell : kIdCells) {
                out.push_back(std::string(lib) + "_" + fam + "__" + cell + "_" +
                              std::to_string(kIdStrengths[i % 4]));
                ++i;
            }
        }
    }
    return out;
}

// Cumulative 1/rank^s weights for frequency-skewed pool draws.
class ZipfPicker {
public:
    ZipfPicker(std::size_t n, double s) {
        cum_.reserve(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += 1.0 / std::pow(static_cast<double>(i + 1), s);
            cum_.push_back(acc);
        }
    }

    std::size_t pick(Rng& rng) const {
        const double u = rng.uniform() * cum_.back();
        return static_cast<std::size_t>(
            std::lower_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    }

private:
    std::vector<double> cum_;
};

struct PoolSet {
    std::vector<std::string> commons;
    std::vector<std::string> terms;
    std::vector<std::string> ids;
    double term_prob = 0.0;
    double id_prob = 0.0;
};

std::vector<std::string> generate_text(std::uint64_t seed, std::size_t approx_bytes,
                                       const PoolSet& pools) {
    Rng rng(seed);
    ZipfPicker common_pick(pools.commons.size(), 1.0);
    ZipfPicker term_pick(pools.terms.empty() ? 1 : pools.terms.size(), 1.1);
    ZipfPicker id_pick(pools.ids.empty() ? 1 : pools.ids.size(), 1.1);

    std::vector<std::string> docs;
    std::size_t bytes = 0;
    while (bytes < approx_bytes) {
        std::string doc;
        const std::size_t paragraphs = 6 + rng.below(5);
        for (std::size_t pg = 0; pg < paragraphs; ++pg) {
            if (pg) doc += "\n\n";
            const std::size_t sentences = 4 + rng.below(4);
            for (std::size_t sn = 0; sn < sentences; ++sn) {
                if (sn) doc += ' ';
                const std::size_t words = 6 + rng.below(9);
                for (std::size_t wd = 0; wd < words; ++wd) {
                    if (wd) doc += ' ';
                    const double u = rng.uniform();
                    if (!pools.terms.empty() && u < pools.term_prob) {
                        doc += pools.terms[term_pick.pick(rng)];
                    } else if (!pools.ids.empty() &&
                               u < pools.term_prob + pools.id_prob) {
                        doc += pools.ids[id_pick.pick(rng)];
                    } else {
                        std::string w = pools.commons[common_pick.pick(rng)];
                        if (wd == 0 && w[0] >= 'a' && w[0] <= 'z') {
                            w[0] = static_cast<char>(w[0] - 'a' + 'A');
                        }
                        doc += w;
                    }
                    if (wd + 2 < words && rng.uniform() < 0.1) doc += ',';
                }
                doc += '.';
            }
        }
        doc += '\n';
        bytes += doc.size();
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::uint64_t word_hash(std::string_view word, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
    for (unsigned char c : word) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

Tokenizer demo_tokenizer() {
    std::vector<std::string> tokens;
    tokens.reserve(kByteTokens + std::size(kDemoMerges));
    for (std::size_t b = 0; b < kByteTokens; ++b) {
        tokens.emplace_back(1, static_cast<char>(b));
    }
    std::vector<MergeRule> merges;
    merges.reserve(std::size(kDemoMerges));
    for (std::size_t r = 0; r < std::size(kDemoMerges); ++r) {
        merges.push_back({kDemoMerges[r][0], kDemoMerges[r][1],
                          static_cast<std::uint32_t>(r)});
        tokens.push_back(std::string(kDemoMerges[r][0]) + kDemoMerges[r][1]);
    }
    return Tokenizer::from_parts(std::move(tokens), std::move(merges), {});
}

std::string demo_sentence() { return "Introduce OpenLane, an EDA tool"; }

std::vector<std::string> demo_added_words() {
    return {"Introduce", "OpenLane", "EDA"};
}

std::vector<std::string> generate_general_text(std::uint64_t seed,
                                               std::size_t approx_bytes) {
    PoolSet pools;
    pools.commons.assign(std::begin(kCommonWords), std::end(kCommonWords));
    return generate_text(seed, approx_bytes, pools);
}

std::vector<std::string> generate_domain_text(std::uint64_t seed,
                                              std::size_t approx_bytes) {
    PoolSet pools;
    pools.commons.assign(std::begin(kCommonWords), std::end(kCommonWords));
    pools.terms = term_pool();
    pools.ids = identifier_pool();
    pools.term_prob = 0.20;
    pools.id_prob = 0.18;
    return generate_text(seed, approx_bytes, pools);
}

std::vector<AnnotatedWord> generate_annotations(const GainTable& table,
                                                std::size_t max_words,
                                                std::uint64_t seed) {
    const std::size_t n = table.records.size();
    if (n == 0) throw input_error("annotation fixture needs a non-empty gain table");
    const std::size_t m = std::min(max_words, n);

    // Dense coverage of the high-gain head plus a stride through the tail,
    // so both fragmenting and atomic words are represented.
    std::vector<std::size_t> picked;
    picked.reserve(m);
    const std::size_t head = std::min(n, m * 3 / 5);
    for (std::size_t i = 0; i < head; ++i) picked.push_back(i);
    const std::size_t rest = m - head;
    for (std::size_t i = 0; i < rest; ++i) {
        picked.push_back(head + i * (n - head) / rest);
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());

    std::vector<AnnotatedWord> out;
    out.reserve(picked.size());
    for (std::size_t idx : picked) {
        const WordRecord& r = table.records[idx];
        std::size_t codepoints = 0;
        std::size_t seps = 0;
        bool has_upper = false;
        bool has_lower = false;
        bool all_alpha = true;
        for (unsigned char c : r.word) {
            if ((c & 0xC0) == 0x80) continue;
            ++codepoints;
            if (c >= 'A' && c <= 'Z') {
                has_upper = true;
            } else if (c >= 'a' && c <= 'z') {
                has_lower = true;
            } else if (c == '_' || c == '-' || c == '.' || (c >= '0' && c <= '9')) {
                ++seps;
                all_alpha = false;
            } else if (c < 0x80) {
                all_alpha = false;
            }
        }
        const double sep_density =
            codepoints ? static_cast<double>(seps) / static_cast<double>(codepoints) : 0.0;
        const double jitter =
            static_cast<double>(word_hash(r.word, seed) >> 11) * 0x1.0p-53;

        double score;
        if (r.subtokens == 1) {
            score = 1.0 + 0.3 * jitter;
        } else if (sep_density >= 0.2 || codepoints >= 20) {
            score = 2.0 + 0.5 * jitter;
        } else if (codepoints >= 5 && all_alpha && has_upper && has_lower) {
            score = 4.3 + 0.7 * jitter;
        } else {
            score = 3.0 + 0.5 * jitter;
        }
        out.push_back({r.word, std::min(score, 5.0)});
    }
    return out;
}

} // namespace fixtures
} // namespace tokgain
