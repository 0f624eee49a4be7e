#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace hotspot {

/// Calendar day; thin wrapper over sys_days so arithmetic is day based.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days d) : days_(d) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : days_(std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}) {}

  /// Parses `YYYY-MM-DD`. A reported interval `start/end` resolves to its start day.
  static Date parse(std::string_view text);

  std::string iso() const;
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  /// 0 = Monday ... 6 = Sunday.
  unsigned weekday_index() const { return std::chrono::weekday{days_}.iso_encoding() - 1; }
  /// Day of year starting at 0.
  int day_of_year() const;

  constexpr Date operator+(int n) const { return Date{days_ + std::chrono::days{n}}; }
  constexpr Date operator-(int n) const { return *this + (-n); }
  constexpr int operator-(Date other) const { return static_cast<int>((days_ - other.days_).count()); }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace hotspot
