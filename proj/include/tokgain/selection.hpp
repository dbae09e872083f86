#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tokgain {

enum class SelectionKind { threshold, heuristic };

std::string selection_kind_name(SelectionKind kind);
SelectionKind parse_selection_kind(const std::string& name);

struct SelectionEntry {
    std::string word;
    double score = 0.0; // gain for threshold selections, model score otherwise
};

// Words chosen for vocabulary extension, ordered by score descending.
struct Selection {
    SelectionKind kind = SelectionKind::threshold;
    double threshold = 0.0;
    std::vector<SelectionEntry> entries;
};

void write_selection(const Selection& sel, const std::filesystem::path& path);

// Validates ordering and uniqueness; throws input_error on violations.
Selection read_selection(const std::filesystem::path& path);

} // namespace tokgain
