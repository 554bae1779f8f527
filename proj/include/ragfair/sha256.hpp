#pragma once

#include <string>
#include <string_view>

namespace ragfair {

// SHA-256 digest as a lowercase hex string. Used to fingerprint lexicon files
// and canonical report bytes.
std::string sha256_hex(std::string_view data);

} // namespace ragfair
