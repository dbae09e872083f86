#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tokgain {

// Byte offset of the first invalid UTF-8 sequence, or nullopt if well formed.
// Strict: overlong forms, surrogates and > U+10FFFF are rejected.
std::optional<std::size_t> find_invalid_utf8(std::string_view bytes);

// Code point count; input must be valid UTF-8.
std::size_t count_codepoints(std::string_view text);

// Copies the input, replacing each invalid byte with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

void append_utf8(std::string& out, char32_t cp);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double value);

// Runs fn over contiguous index chunks, possibly on several threads.
// Chunk boundaries do not depend on the thread count, so any writes
// addressed by index land identically regardless of parallelism.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t begin, std::size_t end)>& fn);

} // namespace tokgain
