#include "tokgain/selection.hpp"

#include <unordered_set>

#include "json.hpp"

#include "tokgain/error.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

std::string selection_kind_name(SelectionKind kind) {
    return kind == SelectionKind::threshold ? "threshold" : "heuristic";
}

SelectionKind parse_selection_kind(const std::string& name) {
    if (name == "threshold") return SelectionKind::threshold;
    if (name == "heuristic") return SelectionKind::heuristic;
    throw input_error("unknown selection kind: " + name);
}

void write_selection(const Selection& sel, const std::filesystem::path& path) {
    nlohmann::json j;
    j["kind"] = selection_kind_name(sel.kind);
    j["threshold"] = sel.threshold;
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const SelectionEntry& e : sel.entries) {
        entries.push_back({{"word", e.word}, {"score", e.score}});
    }
    write_text_file(path, j.dump(2) + "\n");
}

Selection read_selection(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw input_error("malformed selection file " + path.string() + ": " + e.what());
    }
    if (!j.contains("kind") || !j["kind"].is_string() || !j.contains("threshold") ||
        !j["threshold"].is_number() || !j.contains("entries") || !j["entries"].is_array()) {
        throw input_error("selection file " + path.string() +
                          " must hold kind, threshold and entries");
    }
    Selection sel;
    sel.kind = parse_selection_kind(j["kind"].get<std::string>());
    sel.threshold = j["threshold"].get<double>();
    std::unordered_set<std::string> seen;
    for (const auto& item : j["entries"]) {
        if (!item.contains("word") || !item["word"].is_string() || !item.contains("score") ||
            !item["score"].is_number()) {
            throw input_error("selection file " + path.string() +
                              ": entries need word and score");
        }
        SelectionEntry e{item["word"].get<std::string>(), item["score"].get<double>()};
        if (!seen.insert(e.word).second) {
            throw input_error("selection file " + path.string() + ": duplicate word '" +
                              e.word + "'");
        }
        if (!sel.entries.empty() && e.score > sel.entries.back().score) {
            throw input_error("selection file " + path.string() +
                              ": entries are not ordered by score descending");
        }
        sel.entries.push_back(std::move(e));
    }
    return sel;
}

} // namespace tokgain
