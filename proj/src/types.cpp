#include "equity/types.hpp"

namespace equity {

// Howard Hinnant's civil-days algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

static void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

CivilDateTime civil_from_seconds(CivilSeconds t) {
  CivilDateTime c;
  std::int64_t days = t / 86400;
  std::int64_t rem = t - days * 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>((rem / 60) % 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

CivilSeconds seconds_from_civil(const CivilDateTime& c) {
  return days_from_civil(c.year, c.month, c.day) * 86400 +
         c.hour * 3600 + c.minute * 60 + c.second;
}

namespace {

bool read_digits(std::string_view& s, int count, int& out) {
  if (s.size() < static_cast<size_t>(count)) return false;
  int v = 0;
  for (int i = 0; i < count; ++i) {
    char ch = s[static_cast<size_t>(i)];
    if (ch < '0' || ch > '9') return false;
    v = v * 10 + (ch - '0');
  }
  s.remove_prefix(static_cast<size_t>(count));
  out = v;
  return true;
}

bool days_in_month_ok(int y, int m, int d) {
  static const int md[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12 || d < 1) return false;
  int dim = md[m - 1];
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) dim = 29;
  return d <= dim;
}

}  // namespace

std::optional<CivilSeconds> parse_timestamp(std::string_view text, std::string_view format) {
  CivilDateTime c{};
  std::string_view s = text;
  std::string_view f = format;
  while (!f.empty()) {
    if (f[0] == '%' && f.size() >= 2) {
      const char spec = f[1];
      f.remove_prefix(2);
      bool ok = true;
      switch (spec) {
        case 'Y': ok = read_digits(s, 4, c.year); break;
        case 'm': ok = read_digits(s, 2, c.month); break;
        case 'd': ok = read_digits(s, 2, c.day); break;
        case 'H': ok = read_digits(s, 2, c.hour); break;
        case 'M': ok = read_digits(s, 2, c.minute); break;
        case 'S': ok = read_digits(s, 2, c.second); break;
        case '%':
          ok = !s.empty() && s[0] == '%';
          if (ok) s.remove_prefix(1);
          break;
        default: return std::nullopt;  // unsupported conversion
      }
      if (!ok) return std::nullopt;
    } else {
      if (s.empty() || s[0] != f[0]) return std::nullopt;
      s.remove_prefix(1);
      f.remove_prefix(1);
    }
  }
  // Vendor dumps sometimes carry fractional seconds; second resolution only.
  if (!s.empty() && s[0] == '.') {
    s.remove_prefix(1);
    while (!s.empty() && s[0] >= '0' && s[0] <= '9') s.remove_prefix(1);
  }
  while (!s.empty() && (s[0] == ' ' || s[0] == '\r')) s.remove_prefix(1);
  if (!s.empty()) return std::nullopt;
  if (!days_in_month_ok(c.year, c.month, c.day)) return std::nullopt;
  if (c.hour > 23 || c.minute > 59 || c.second > 59) return std::nullopt;
  return seconds_from_civil(c);
}

std::optional<MonthWindow> parse_month_window(std::string_view year_month) {
  if (year_month.size() != 7 || year_month[4] != '-') return std::nullopt;
  int y = 0, m = 0;
  std::string_view s = year_month;
  if (!read_digits(s, 4, y)) return std::nullopt;
  s.remove_prefix(1);
  if (!read_digits(s, 2, m)) return std::nullopt;
  if (m < 1 || m > 12) return std::nullopt;
  MonthWindow w;
  w.start = days_from_civil(y, m, 1) * 86400;
  const int ny = m == 12 ? y + 1 : y;
  const int nm = m == 12 ? 1 : m + 1;
  w.end = days_from_civil(ny, nm, 1) * 86400;
  return w;
}

}  // namespace equity
