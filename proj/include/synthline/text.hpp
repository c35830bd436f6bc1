#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace synthline::text {

std::string trim(std::string_view s);

/// Replaces every run of whitespace that contains a line break with a single
/// space, then trims.
std::string collapse_newlines(std::string_view s);

/// Lowercased word tokens. ASCII letters and digits form words, as do bytes
/// >= 0x80 so UTF-8 encoded words stay intact; everything else separates.
std::vector<std::string> word_tokens(std::string_view s);

/// Unicode NFC normalization. Invalid UTF-8 is returned unchanged.
std::string nfc(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string sha256_hex(std::string_view data);

/// ISO-8601 UTC timestamp with second precision, e.g. 2025-04-30T12:00:00Z.
std::string iso8601_utc(std::int64_t unix_seconds);

}  // namespace synthline::text
