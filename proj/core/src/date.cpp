#include "hotspot/date.hpp"

#include <charconv>

#include <fmt/format.h>

#include "hotspot/error.hpp"

namespace hotspot {

namespace {

template <typename T>
T parse_number(std::string_view s, std::string_view whole) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError(fmt::format("invalid date '{}'", whole));
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

Date Date::parse(std::string_view text) {
  std::string_view s = trim(text);
  if (auto slash = s.find('/'); slash != std::string_view::npos) s = trim(s.substr(0, slash));
  // Tolerate a time component (`2014-01-14T22:00`); only the calendar day matters.
  if (auto t = s.find_first_of("T "); t != std::string_view::npos) s = s.substr(0, t);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw DataError(fmt::format("invalid date '{}'", text));
  const int y = parse_number<int>(s.substr(0, 4), text);
  const unsigned m = parse_number<unsigned>(s.substr(5, 2), text);
  const unsigned d = parse_number<unsigned>(s.substr(8, 2), text);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw DataError(fmt::format("invalid date '{}'", text));
  return Date{std::chrono::sys_days{ymd}};
}

std::string Date::iso() const {
  auto v = ymd();
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(v.year()), static_cast<unsigned>(v.month()),
                     static_cast<unsigned>(v.day()));
}

int Date::day_of_year() const {
  auto v = ymd();
  Date jan1{std::chrono::sys_days{v.year() / std::chrono::January / 1}};
  return *this - jan1;
}

}  // namespace hotspot
