#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace facetpath {

// Lowercase, split on whitespace and ASCII punctuation. No stemming.
std::vector<std::string> tokenize(std::string_view text);

// Lowercase and collapse whitespace runs; the key used for exact-match query lookups.
std::string normalize_query(std::string_view query);

// Empty fields are dropped, so "a,,b" and ",a,b," both give {a, b}.
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace facetpath
