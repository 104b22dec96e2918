#include "drcvar/dataset.hpp"

#include "drcvar/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace drcvar {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string two_digit(std::size_t h) { return (h < 10 ? "0" : "") + std::to_string(h); }

// Collects per-line problems and raises them together.
class Problems {
 public:
  explicit Problems(std::string source) : source_(std::move(source)) {}
  void add(std::size_t line, const std::string& what) {
    if (items_.size() < kMaxListed) items_.push_back("line " + std::to_string(line) + ": " + what);
    ++count_;
  }
  void raise_if_any() const {
    if (count_ == 0) return;
    std::ostringstream os;
    os << source_ << ": " << count_ << " invalid line(s)";
    for (const auto& s : items_) os << "\n  " << s;
    if (count_ > items_.size()) os << "\n  ...";
    throw DataError(os.str());
  }

 private:
  static constexpr std::size_t kMaxListed = 20;
  std::string source_;
  std::vector<std::string> items_;
  std::size_t count_ = 0;
};

Dataset parse_wide(const std::vector<std::string_view>& header, std::istream& is, const std::string& source,
                   std::size_t& lineno) {
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
  std::vector<std::string> missing;
  if (!col.count("date")) missing.emplace_back("date");
  const auto names = wide_value_columns();
  for (const auto& c : names) {
    if (!col.count(c)) missing.push_back(c);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError(source + ": missing column(s): " + list);
  }

  Dataset ds;
  Problems problems(source);
  std::string line;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      problems.add(lineno, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
      continue;
    }
    DayRecord rec;
    try {
      rec.date = Date::parse(trim(fields[col.find("date")->second]));
    } catch (const DataError& e) {
      problems.add(lineno, e.what());
      continue;
    }
    bool ok = true;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      const auto p = parse_double(fields[col.find(names[h])->second]);
      const auto l = parse_double(fields[col.find(names[kHoursPerDay + h])->second]);
      if (!p) {
        problems.add(lineno, "unparseable value in column " + names[h]);
        ok = false;
        break;
      }
      if (!l) {
        problems.add(lineno, "unparseable value in column " + names[kHoursPerDay + h]);
        ok = false;
        break;
      }
      rec.price[h] = *p;
      rec.load[h] = *l;
    }
    if (ok) ds.records.push_back(rec);
  }
  problems.raise_if_any();
  return ds;
}

Dataset parse_long(const std::vector<std::string_view>& header, std::istream& is, const std::string& source,
                   std::size_t& lineno) {
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
  for (const char* c : {"date", "hour", "price", "load"}) {
    if (!col.count(c)) throw DataError(source + ": missing column(s): " + c);
  }
  struct Partial {
    DayRecord rec;
    std::array<bool, kHoursPerDay> seen{};
  };
  std::map<Date, Partial> days;
  Problems problems(source);
  std::string line;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      problems.add(lineno, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
      continue;
    }
    Date date;
    try {
      date = Date::parse(trim(fields[col.find("date")->second]));
    } catch (const DataError& e) {
      problems.add(lineno, e.what());
      continue;
    }
    const auto hour = parse_double(fields[col.find("hour")->second]);
    const auto price = parse_double(fields[col.find("price")->second]);
    const auto load = parse_double(fields[col.find("load")->second]);
    if (!hour || *hour < 0 || *hour >= static_cast<double>(kHoursPerDay) || *hour != std::floor(*hour)) {
      problems.add(lineno, "hour must be an integer in 0..23");
      continue;
    }
    if (!price || !load) {
      problems.add(lineno, std::string("unparseable ") + (!price ? "price" : "load"));
      continue;
    }
    auto& p = days[date];
    p.rec.date = date;
    const auto h = static_cast<std::size_t>(*hour);
    if (p.seen[h]) {
      problems.add(lineno, "duplicate hour " + std::to_string(h) + " for " + date.iso());
      continue;
    }
    p.seen[h] = true;
    p.rec.price[h] = *price;
    p.rec.load[h] = *load;
  }
  for (const auto& [date, p] : days) {
    std::string gaps;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      if (!p.seen[h]) gaps += (gaps.empty() ? "" : ",") + std::to_string(h);
    }
    if (!gaps.empty()) problems.add(0, date.iso() + " is missing hour(s) " + gaps);
  }
  problems.raise_if_any();
  Dataset ds;
  for (auto& [date, p] : days) ds.records.push_back(p.rec);
  return ds;
}

}  // namespace

Date Date::parse(std::string_view iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto bad = [&] { return DataError("invalid date '" + std::string(iso) + "' (expected yyyy-mm-dd)"); };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(iso.data() + pos, iso.data() + pos + len, out);
    if (ec != std::errc() || ptr != iso.data() + pos + len) throw bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Date{y, m, d};
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

Date Date::plus_days(int days) const {
  const std::chrono::sys_days base{std::chrono::year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                                               std::chrono::day{day}}};
  const std::chrono::year_month_day out{base + std::chrono::days{days}};
  return Date{static_cast<int>(out.year()), static_cast<unsigned>(out.month()), static_cast<unsigned>(out.day())};
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && !(records[i - 1].date < r.date)) {
      throw DataError("dates must strictly increase: " + records[i - 1].date.iso() + " then " + r.date.iso());
    }
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      if (!std::isfinite(r.price[h]) || !std::isfinite(r.load[h])) {
        throw DataError("non-finite value on " + r.date.iso() + " hour " + std::to_string(h));
      }
    }
  }
}

std::vector<std::string> wide_value_columns() {
  std::vector<std::string> out;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) out.push_back("p" + two_digit(h));
  for (std::size_t h = 0; h < kHoursPerDay; ++h) out.push_back("l" + two_digit(h));
  return out;
}

Dataset parse_dataset(std::istream& is, CsvLayout layout, const std::string& source) {
  std::string header_line;
  std::size_t lineno = 0;
  while (std::getline(is, header_line)) {
    ++lineno;
    if (!trim(header_line).empty()) break;
  }
  if (trim(header_line).empty()) throw DataError(source + ": empty file");
  if (header_line.size() >= 3 && header_line.compare(0, 3, "\xEF\xBB\xBF") == 0) header_line.erase(0, 3);
  const std::string header_copy = header_line;
  const auto header = split_csv(header_copy);
  if (layout == CsvLayout::automatic) {
    const bool has_hour = std::any_of(header.begin(), header.end(), [](auto h) { return trim(h) == "hour"; });
    layout = has_hour ? CsvLayout::long_format : CsvLayout::wide;
  }
  Dataset ds = layout == CsvLayout::wide ? parse_wide(header, is, source, lineno) : parse_long(header, is, source, lineno);
  if (ds.records.empty()) throw DataError(source + ": no data rows");
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, CsvLayout layout) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, layout, path.string());
}

void write_dataset(std::ostream& os, const Dataset& ds) {
  os << "date";
  for (const auto& c : wide_value_columns()) os << ',' << c;
  os << '\n';
  for (const auto& r : ds.records) {
    os << r.date.iso();
    for (double v : r.price) os << ',' << format_double(v);
    for (double v : r.load) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  write_dataset(out, ds);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace drcvar
