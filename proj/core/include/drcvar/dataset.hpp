#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace drcvar {

inline constexpr std::size_t kHoursPerDay = 24;

/// Calendar date (proleptic Gregorian), ISO yyyy-mm-dd on the wire.
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  /// Throws DataError on malformed or impossible dates.
  static Date parse(std::string_view iso);
  std::string iso() const;
  Date plus_days(int days) const;

  auto operator<=>(const Date&) const = default;
};

/// One market day: hourly day-ahead prices ($/MWh) and load forecasts (MW).
struct DayRecord {
  Date date;
  std::array<double, kHoursPerDay> price{};
  std::array<double, kHoursPerDay> load{};
};

struct Dataset {
  std::vector<DayRecord> records;

  /// Throws DataError unless dates strictly increase and values are finite.
  void validate() const;
};

/// wide:  date,p00..p23,l00..l23   one row per day
/// long:  date,hour,price,load      one row per hour, pivoted to wide
enum class CsvLayout { automatic, wide, long_format };

/// Parses a dataset CSV. Throws DataError listing offending lines or the
/// missing column/hours.
Dataset parse_dataset(std::istream& is, CsvLayout layout = CsvLayout::automatic,
                      const std::string& source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path, CsvLayout layout = CsvLayout::automatic);

/// Wide layout with shortest round-trip decimal formatting.
void write_dataset(std::ostream& os, const Dataset& ds);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);

/// "p00".."p23" followed by "l00".."l23".
std::vector<std::string> wide_value_columns();

}  // namespace drcvar
