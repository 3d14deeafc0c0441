#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace subqrag::text {

/// Trim and collapse every whitespace run to a single space.
std::string normalize_whitespace(std::string_view s);

/// Whitespace-delimited tokens of the normalized text.
std::vector<std::string> words(std::string_view s);

std::size_t count_words(std::string_view s);

std::string to_lower(std::string_view s);

/// Canonical form used for duplicate detection: lowercase, punctuation
/// stripped, whitespace collapsed.
std::string dedup_key(std::string_view s);

/// FNV-1a 64-bit. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace subqrag::text
