#include "tokgain/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "json.hpp"

#include "tokgain/error.hpp"
#include "tokgain/lm.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

namespace {

double round_half_up_2dp(double x) {
    return std::floor(x * 100.0 + 0.5) / 100.0;
}

std::string fixed2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

} // namespace

Histogram gain_histogram(const Selection& sel, const GainTable& table,
                         std::size_t bins) {
    if (bins < 1) throw input_error("histogram needs at least one bin");
    if (table.records.empty()) {
        throw input_error("histogram needs a non-empty gain table");
    }
    std::unordered_map<std::string_view, double> gain_of;
    gain_of.reserve(table.records.size());
    double hi = 0.0;
    for (const WordRecord& r : table.records) {
        gain_of.emplace(r.word, r.gain);
        hi = std::max(hi, r.gain);
    }
    const double upper = hi > 0.0 ? hi : 1.0;

    Histogram h;
    h.label = selection_kind_name(sel.kind);
    h.counts.assign(bins, 0);
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        h.edges[i] = upper * static_cast<double>(i) / static_cast<double>(bins);
    }
    h.edges[bins] = upper;

    for (const SelectionEntry& e : sel.entries) {
        auto it = gain_of.find(std::string_view(e.word));
        if (it == gain_of.end()) {
            throw input_error("selected word missing from gain table: '" + e.word + "'");
        }
        const double g = it->second;
        std::size_t idx =
            g >= upper ? bins - 1
                       : static_cast<std::size_t>(g / upper * static_cast<double>(bins));
        if (idx >= bins) idx = bins - 1;
        ++h.counts[idx];
    }
    return h;
}

void write_histogram_csv(const Histogram& hist, const std::filesystem::path& path) {
    std::string out = "bin_start,bin_end,count\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        out += format_double(hist.edges[i]);
        out += ',';
        out += format_double(hist.edges[i + 1]);
        out += ',';
        out += std::to_string(hist.counts[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

DemoOutput render_demo(const Tokenizer& base, const Tokenizer& augmented,
                       std::string_view text) {
    DemoOutput demo;
    for (TokenId id : base.encode(text)) {
        demo.base_tokens.push_back(escape_token(base.token_bytes(id)));
    }
    for (TokenId id : augmented.encode(text)) {
        demo.augmented_tokens.push_back(escape_token(augmented.token_bytes(id)));
    }
    demo.base_count = demo.base_tokens.size();
    demo.augmented_count = demo.augmented_tokens.size();
    demo.reduction_pct =
        demo.base_count == 0
            ? 0.0
            : round_half_up_2dp(100.0 *
                                (static_cast<double>(demo.base_count) -
                                 static_cast<double>(demo.augmented_count)) /
                                static_cast<double>(demo.base_count));
    return demo;
}

std::string render_demo_text(const DemoOutput& demo) {
    auto join = [](const std::vector<std::string>& tokens) {
        std::string s;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) s += '|';
            s += tokens[i];
        }
        return s;
    };
    std::string out;
    out += "base      (" + std::to_string(demo.base_count) + " tokens): " +
           join(demo.base_tokens) + "\n";
    out += "augmented (" + std::to_string(demo.augmented_count) + " tokens): " +
           join(demo.augmented_tokens) + "\n";
    out += "reduction: " + fixed2(demo.reduction_pct) + "%\n";
    return out;
}

void write_demo_json(const DemoOutput& demo, const std::filesystem::path& path) {
    nlohmann::json j;
    j["base_tokens"] = demo.base_tokens;
    j["augmented_tokens"] = demo.augmented_tokens;
    j["base_count"] = demo.base_count;
    j["augmented_count"] = demo.augmented_count;
    j["reduction_pct"] = demo.reduction_pct;
    write_text_file(path, j.dump(2) + "\n");
}

std::vector<std::string> bundle_report(const ReportInputs& inputs,
                                       const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw input_error("cannot create report directory " + out_dir.string() + ": " +
                          ec.message());
    }

    std::vector<std::string> written;
    std::vector<std::string> notices;
    std::string summary = "analysis summary\n================\n\n";

    std::optional<GainTable> table;
    if (inputs.gain_table) {
        table = read_gain_table(*inputs.gain_table);
        write_text_file(out_dir / "gain_table.tsv", read_text_file(*inputs.gain_table));
        written.push_back("gain_table.tsv");
        summary += "gain table: " + std::to_string(table->records.size()) + " words";
        if (!table->records.empty()) {
            const WordRecord& top = table->records.front();
            summary += "; top gain " + format_double(top.gain) + " nats for '" + top.word +
                       "' (freq " + std::to_string(top.freq) + ", " +
                       std::to_string(top.subtokens) + " subtokens)";
        }
        summary += "\n";
    } else {
        notices.push_back("gain table not provided");
    }

    std::optional<Selection> sel;
    if (inputs.selection) {
        sel = read_selection(*inputs.selection);
        write_text_file(out_dir / "selection.json", read_text_file(*inputs.selection));
        written.push_back("selection.json");
        summary += "selection (" + selection_kind_name(sel->kind) + ", threshold " +
                   format_double(sel->threshold) + "): " +
                   std::to_string(sel->entries.size()) + " words\n";
        const std::size_t top = std::min<std::size_t>(sel->entries.size(), 10);
        for (std::size_t i = 0; i < top; ++i) {
            summary += "  " + std::to_string(i + 1) + ". " + sel->entries[i].word + "  " +
                       format_double(sel->entries[i].score) + "\n";
        }
    } else {
        notices.push_back("selection not provided");
    }

    if (table && sel) {
        Histogram hist = gain_histogram(*sel, *table, inputs.histogram_bins);
        write_histogram_csv(hist, out_dir / "gain_histogram.csv");
        written.push_back("gain_histogram.csv");
    } else {
        notices.push_back("gain histogram skipped (needs gain table and selection)");
    }

    if (inputs.savings) {
        nlohmann::json s;
        try {
            s = nlohmann::json::parse(read_text_file(*inputs.savings));
        } catch (const nlohmann::json::parse_error& e) {
            throw input_error("malformed savings file " + inputs.savings->string() + ": " +
                              e.what());
        }
        if (!s.contains("base_tokens") || !s.contains("augmented_tokens") ||
            !s.contains("saved_pct")) {
            throw input_error("savings file " + inputs.savings->string() +
                              " lacks token totals");
        }
        write_text_file(out_dir / "savings.json", read_text_file(*inputs.savings));
        written.push_back("savings.json");
        summary += "savings: base " + s["base_tokens"].dump() + " tokens, augmented " +
                   s["augmented_tokens"].dump() + ", saved " + s["saved_pct"].dump() +
                   "%\n";
    } else {
        notices.push_back("savings not provided");
    }

    if (!inputs.train_reports.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        summary += "train runs:\n";
        for (const auto& path : inputs.train_reports) {
            TrainReport r = read_train_report(path);
            nlohmann::json j;
            j["tokenizer_label"] = r.tokenizer_label;
            j["epochs"] = r.epochs;
            j["window_len"] = r.window_len;
            j["windows_per_epoch"] = r.windows_per_epoch;
            j["total_tokens"] = r.total_tokens;
            j["wall_seconds"] = r.wall_seconds;
            j["final_ma_loss"] = r.final_ma_loss;
            j["losses"] = r.losses;
            arr.push_back(std::move(j));
            summary += "  " + r.tokenizer_label + ": " +
                       std::to_string(r.losses.size()) + " steps, " +
                       std::to_string(r.total_tokens) + " tokens, final-50 loss " +
                       format_double(r.final_ma_loss) + "\n";
        }
        write_text_file(out_dir / "train_reports.json", arr.dump(2) + "\n");
        written.push_back("train_reports.json");
    } else {
        notices.push_back("lm training not provided");
    }

    if (inputs.comparison) {
        nlohmann::json c;
        try {
            c = nlohmann::json::parse(read_text_file(*inputs.comparison));
        } catch (const nlohmann::json::parse_error& e) {
            throw input_error("malformed comparison file " + inputs.comparison->string() +
                              ": " + e.what());
        }
        if (!c.contains("tokens_delta_pct")) {
            throw input_error("comparison file " + inputs.comparison->string() +
                              " lacks delta fields");
        }
        write_text_file(out_dir / "comparison.json", read_text_file(*inputs.comparison));
        written.push_back("comparison.json");
        summary += "comparison (" + c.value("run_b", std::string("b")) + " vs " +
                   c.value("run_a", std::string("a")) + "): tokens " +
                   c["tokens_delta_pct"].dump() + "%, wall time " +
                   (c.contains("time_delta_pct") ? c["time_delta_pct"].dump() : "n/a") +
                   "%, final loss " +
                   (c.contains("final_loss_delta_pct") ? c["final_loss_delta_pct"].dump()
                                                       : "n/a") +
                   "%\n";
    } else {
        notices.push_back("comparison not provided");
    }

    if (!notices.empty()) {
        summary += "\nnotices:\n";
        for (const std::string& n : notices) summary += "  - " + n + "\n";
    }
    write_text_file(out_dir / "summary.txt", summary);
    written.push_back("summary.txt");
    return written;
}

} // namespace tokgain
