#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pancap {

std::string_view trim_view(std::string_view s);
std::string to_lower(std::string_view s);

// Collapses every whitespace run to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Lowercase + whitespace-collapsed form used for tag equality and oracle
// text lookups.
std::string normalize_text(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

// Last whitespace-separated token, lowercased. Head-noun stand-in for
// multi-word tags.
std::string head_token(std::string_view tag);

// FNV-1a. Stable content fingerprint for cache keys and hashed features.
std::uint64_t fnv1a_64(std::string_view data);
std::string fnv1a_hex(std::string_view data);

// Warnings from lenient parsing. Silenced during fuzzing.
void log_warning(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace pancap
