// Shared error types and small string/number helpers used across modules.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace condid {

// Error categories map onto CLI exit codes: usage=1, data=2, backend=3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using WarningList = std::vector<std::string>;

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercases, maps '-'/'_' to spaces and collapses whitespace runs. Used to
// match free-text model output against fixed label vocabularies.
std::string normalize_for_match(std::string_view s);

// Word-boundary substring search (neighbors must be non-alphanumeric).
// Returns match position or npos. Both sides are matched verbatim, so
// callers normalize case first.
std::size_t find_word(std::string_view haystack, std::string_view needle,
                      std::size_t from = 0);

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);
std::string file_sha_hex(const std::string& path);  // fnv over file bytes

// Renders a score with at most 3 decimals, trailing zeros trimmed
// (0.250 -> "0.25", 0.5 -> "0.5", 1.0 -> "1").
std::string format_score(double v);

std::string iso8601_utc_now();

}  // namespace condid
