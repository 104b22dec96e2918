#include "drcvar/dataset.hpp"
#include "drcvar/errors.hpp"

#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>
#include <string>

using namespace drcvar;

namespace {

std::string wide_header() {
  std::string h = "date";
  for (const auto& c : wide_value_columns()) h += "," + c;
  return h + "\n";
}

std::string wide_row(const std::string& date, double price, double load) {
  std::string r = date;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) r += "," + std::to_string(price + static_cast<double>(h));
  for (std::size_t h = 0; h < kHoursPerDay; ++h) r += "," + std::to_string(load + static_cast<double>(h));
  return r + "\n";
}

std::string error_of(const std::string& text, CsvLayout layout = CsvLayout::automatic) {
  std::istringstream is(text);
  try {
    parse_dataset(is, layout);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("dates") {
  CHECK(Date::parse("2013-05-01").iso() == "2013-05-01");
  CHECK(Date::parse("2012-02-28").plus_days(1).iso() == "2012-02-29");
  CHECK(Date::parse("2013-12-31").plus_days(1).iso() == "2014-01-01");
  CHECK(Date::parse("2013-03-01").plus_days(-1).iso() == "2013-02-28");
  CHECK(Date::parse("2013-05-01") < Date::parse("2013-05-02"));
  CHECK_THROWS_AS(Date::parse("2013-02-30"), DataError);
  CHECK_THROWS_AS(Date::parse("2013/05/01"), DataError);
  CHECK_THROWS_AS(Date::parse(""), DataError);
}

TEST_CASE("two day wide file") {
  std::istringstream is(wide_header() + wide_row("2013-05-01", 30, 900) + wide_row("2013-05-02", 40, 1000));
  const auto ds = parse_dataset(is);
  REQUIRE(ds.records.size() == 2);
  CHECK(ds.records[0].date.iso() == "2013-05-01");
  CHECK(ds.records[0].price[0] == 30.0);
  CHECK(ds.records[1].price[23] == 63.0);
  CHECK(ds.records[1].load[5] == 1005.0);
}

TEST_CASE("columns are matched by name") {
  std::string header = "l00";
  for (std::size_t h = 1; h < kHoursPerDay; ++h) header += ",l" + std::string(h < 10 ? "0" : "") + std::to_string(h);
  header += ",date";
  for (std::size_t h = 0; h < kHoursPerDay; ++h) header += ",p" + std::string(h < 10 ? "0" : "") + std::to_string(h);
  std::string row;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) row += std::to_string(1000 + h) + ",";
  row += "2013-05-01";
  for (std::size_t h = 0; h < kHoursPerDay; ++h) row += "," + std::to_string(20 + h);
  std::istringstream is(header + "\n" + row + "\n");
  const auto ds = parse_dataset(is, CsvLayout::wide);
  CHECK(ds.records[0].price[3] == 23.0);
  CHECK(ds.records[0].load[3] == 1003.0);
}

TEST_CASE("missing column is named") {
  std::string header = wide_header();
  header.replace(header.find(",p17"), 4, ",x17");
  const auto msg = error_of(header + wide_row("2013-05-01", 1, 2));
  CHECK(msg.find("p17") != std::string::npos);
}

TEST_CASE("offending lines are listed") {
  std::string row3 = wide_row("2013-05-03", 1, 2);
  row3.replace(row3.find(",1.000000"), 9, ",abc");
  const auto msg = error_of(wide_header() + wide_row("2013-05-01", 1, 2) + wide_row("2013-05-02", 1, 2) + row3 +
                            wide_row("2013-99-04", 1, 2));
  CHECK(msg.find("line 4") != std::string::npos);
  CHECK(msg.find("line 5") != std::string::npos);
  CHECK(msg.find("line 2") == std::string::npos);
}

TEST_CASE("dates must increase") {
  const auto msg = error_of(wide_header() + wide_row("2013-05-02", 1, 2) + wide_row("2013-05-01", 1, 2));
  CHECK_FALSE(msg.empty());
}

TEST_CASE("round trip is bit exact") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 5000.0);
  Dataset ds;
  Date d = Date::parse("2014-01-30");
  for (int k = 0; k < 10; ++k) {
    DayRecord r;
    r.date = d;
    for (auto& p : r.price) p = u(rng);
    for (auto& l : r.load) l = u(rng);
    ds.records.push_back(r);
    d = d.plus_days(1 + k % 3);
  }
  ds.records[0].price[0] = 1e-300;
  ds.records[0].load[0] = -0.1;
  std::stringstream ss;
  write_dataset(ss, ds);
  const auto back = parse_dataset(ss);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t k = 0; k < ds.records.size(); ++k) {
    CHECK(back.records[k].date == ds.records[k].date);
    CHECK(std::memcmp(back.records[k].price.data(), ds.records[k].price.data(), sizeof(double) * kHoursPerDay) == 0);
    CHECK(std::memcmp(back.records[k].load.data(), ds.records[k].load.data(), sizeof(double) * kHoursPerDay) == 0);
  }
}

TEST_CASE("long format is pivoted") {
  std::string text = "\xEF\xBB\xBF" "date,hour,price,load\n";
  for (int day = 2; day >= 1; --day) {
    for (int h = 23; h >= 0; --h) {
      text += "2013-05-0" + std::to_string(day) + "," + std::to_string(h) + "," + std::to_string(day * 100 + h) + "," +
              std::to_string(day * 1000 + h) + "\n";
    }
  }
  std::istringstream is(text);
  const auto ds = parse_dataset(is);
  REQUIRE(ds.records.size() == 2);
  CHECK(ds.records[0].date.iso() == "2013-05-01");
  CHECK(ds.records[0].price[7] == 107.0);
  CHECK(ds.records[1].load[23] == 2023.0);
}

TEST_CASE("long format reports missing and duplicate hours") {
  std::string text = "date,hour,price,load\n";
  for (int h = 0; h < 24; ++h) {
    if (h == 5) continue;
    text += "2013-05-01," + std::to_string(h) + ",1,2\n";
  }
  text += "2013-05-01,3,1,2\n";
  const auto msg = error_of(text);
  CHECK(msg.find("2013-05-01") != std::string::npos);
  CHECK(msg.find('5') != std::string::npos);
  CHECK(msg.find('3') != std::string::npos);
}

TEST_CASE("non-finite values are rejected") {
  std::string row = wide_row("2013-05-01", 1, 2);
  row.replace(row.find(",1.000000"), 9, ",nan");
  CHECK_FALSE(error_of(wide_header() + row).empty());
}

TEST_CASE("missing file") { CHECK_THROWS_AS(load_dataset("/nonexistent/market.csv"), DataError); }
