#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace sheetguard {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

bool is_hex_digest(std::string_view text);

std::string base64_encode(std::string_view bytes);
// Only canonical padded base64 is accepted: decode(x) succeeds iff
// encode(decode(x)) == x.
std::optional<std::string> base64_decode(std::string_view text);

}  // namespace sheetguard
