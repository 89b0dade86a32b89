#pragma once

// UTF-8 text helpers: code-point iteration, Latin-range lowercasing and
// word-boundary tests. Scope is the Latin repertoire used by English and
// French (ASCII, Latin-1 Supplement, Latin Extended-A); other scripts pass
// through unchanged. No locale dependence: results are byte-stable.

#include <cstdint>
#include <string>
#include <string_view>

namespace xhate {

// Decodes one UTF-8 code point starting at s[i]; advances i past it.
// Malformed bytes decode as U+FFFD and advance by one byte.
std::uint32_t utf8_decode(std::string_view s, std::size_t& i);

void utf8_append(std::string& out, std::uint32_t cp);

// Lowercase mapping for a single code point (Latin ranges only).
std::uint32_t lower_codepoint(std::uint32_t cp);

// Unicode-aware lowercase of the whole string.
std::string utf8_lower(std::string_view s);

// ASCII whitespace plus U+00A0 (no-break space shows up in French text
// before punctuation and must collapse like an ordinary space).
bool is_space_cp(std::uint32_t cp);

// Word constituent for hashtag/mention/boundary purposes: ASCII alnum,
// underscore, or any non-ASCII letter-ish code point.
bool is_word_cp(std::uint32_t cp);

}  // namespace xhate
