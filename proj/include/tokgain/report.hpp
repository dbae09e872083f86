#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tokgain/gain.hpp"
#include "tokgain/selection.hpp"
#include "tokgain/tokenizer.hpp"

namespace tokgain {

struct Histogram {
    std::vector<double> edges;        // bins + 1 ascending boundaries
    std::vector<std::uint64_t> counts; // one per bin
    std::string label;
};

// Distribution of the selected words' gains, over equal-width bins spanning
// [0, max table gain]. The last bin includes its upper edge, so every
// selected word lands in exactly one bin.
Histogram gain_histogram(const Selection& sel, const GainTable& table,
                         std::size_t bins);

void write_histogram_csv(const Histogram& hist, const std::filesystem::path& path);

struct DemoOutput {
    std::vector<std::string> base_tokens;      // escaped display forms
    std::vector<std::string> augmented_tokens;
    std::size_t base_count = 0;
    std::size_t augmented_count = 0;
    double reduction_pct = 0.0; // rounded half-up to 2 decimals
};

DemoOutput render_demo(const Tokenizer& base, const Tokenizer& augmented,
                       std::string_view text);

std::string render_demo_text(const DemoOutput& demo);
void write_demo_json(const DemoOutput& demo, const std::filesystem::path& path);

struct ReportInputs {
    std::optional<std::filesystem::path> gain_table;
    std::optional<std::filesystem::path> selection;
    std::optional<std::filesystem::path> savings;
    std::vector<std::filesystem::path> train_reports;
    std::optional<std::filesystem::path> comparison;
    std::size_t histogram_bins = 20;
};

// Validates each provided stage output and assembles a report directory:
// copies of the inputs, a histogram and a human-readable summary. Returns
// the file names written. Byte-identical for identical inputs.
std::vector<std::string> bundle_report(const ReportInputs& inputs,
                                       const std::filesystem::path& out_dir);

} // namespace tokgain
