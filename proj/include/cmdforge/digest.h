#pragma once

#include <string>
#include <string_view>

namespace cmdforge {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view data);

// Newline-normalized (CRLF/CR -> LF), trailing whitespace stripped from every
// line and from the end of the text.
std::string canonicalize_text(std::string_view text);

}  // namespace cmdforge
