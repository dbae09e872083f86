#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tokgain/gain.hpp"
#include "tokgain/phi.hpp"
#include "tokgain/tokenizer.hpp"

namespace tokgain {
namespace fixtures {

// Small handcrafted tokenizer whose merge list fragments tool names into
// visible pieces; useful for demos and as a stable regression target.
Tokenizer demo_tokenizer();
std::string demo_sentence();
std::vector<std::string> demo_added_words();

// Plain technical prose from a fixed word pool. Deterministic per seed;
// sized to roughly approx_bytes. Returns one string per document.
std::vector<std::string> generate_general_text(std::uint64_t seed,
                                               std::size_t approx_bytes);

// Same register plus camel-case tool names and long library identifiers,
// the shapes a generic vocabulary splinters the most.
std::vector<std::string> generate_domain_text(std::uint64_t seed,
                                              std::size_t approx_bytes);

// Desirability scores over table words following a fixed rubric: atomic
// words score lowest, tool names highest, identifiers in between, with a
// small per-word jitter. Covers up to max_words records from both ends of
// the gain ranking.
std::vector<AnnotatedWord> generate_annotations(const GainTable& table,
                                                std::size_t max_words,
                                                std::uint64_t seed);

} // namespace fixtures
} // namespace tokgain
