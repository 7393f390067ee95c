#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pathcast {

/// Raised for malformed inputs, bad configuration, or missing files.
/// The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

/// Shortest round-trip decimal form of a double (locale independent).
std::string format_double(double value);

using CivilDate = std::chrono::year_month_day;

/// Parses a strict "YYYY-MM-DD" calendar date; rejects impossible dates.
CivilDate parse_date(std::string_view text);
std::string format_date(const CivilDate& date);
int days_between(const CivilDate& from, const CivilDate& to);
CivilDate add_days(const CivilDate& date, int days);

}  // namespace pathcast
