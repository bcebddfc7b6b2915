#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace s3dc {

// Clamped description: lowercase a-z and single spaces, at most
// `char_budget` characters.
struct SemanticDescriptor {
  std::string text;
  std::size_t char_budget = 0;
};

// True when every character is 'a'..'z' or ' '.
bool is_descriptor_charset(std::string_view text) noexcept;

/// Lowercases, drops everything outside a-z and space (digits, punctuation
/// and non-ASCII bytes included), collapses whitespace runs, trims the ends,
/// then truncates to `budget` characters.
std::string clamp_description(std::string_view raw, std::size_t budget);

}  // namespace s3dc
