#pragma once

#include <boost/rational.hpp>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ocm {

// Exact rational arithmetic for frequencies, ratios and measured rates.
// All magnitudes in this tool (bit counts, cycle counts, MHz values) fit
// comfortably in int64 numerator/denominator after reduction.
using Rat = boost::rational<std::int64_t>;

inline std::int64_t ipow10(int k) {
  std::int64_t v = 1;
  while (k-- > 0) v *= 10;
  return v;
}

// Parses "200", "-3", "412.5", "825/2", "4.125e2" into an exact rational.
// Decimal strings become exact fractions (0.1 -> 1/10), never doubles.
inline Rat rat_from_string(std::string_view s) {
  auto fail = [&]() -> Rat {
    throw std::invalid_argument("not a rational number: '" + std::string(s) + "'");
  };
  if (s.empty()) return fail();
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::int64_t p = 0, q = 0;
    auto r1 = std::from_chars(s.data(), s.data() + slash, p);
    auto r2 = std::from_chars(s.data() + slash + 1, s.data() + s.size(), q);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != s.data() + s.size() || q == 0) return fail();
    return Rat(p, q);
  }
  bool neg = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') neg = (s[i++] == '-');
  std::int64_t mant = 0;
  int frac_digits = 0, exp10 = 0;
  bool any = false, in_frac = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      mant = mant * 10 + (c - '0');
      if (in_frac) ++frac_digits;
      any = true;
    } else if (c == '.' && !in_frac) {
      in_frac = true;
    } else if (c == 'e' || c == 'E') {
      int e = 0;
      auto r = std::from_chars(s.data() + i + 1, s.data() + s.size(), e);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return fail();
      exp10 = e;
      break;
    } else {
      return fail();
    }
  }
  if (!any) return fail();
  Rat v(mant, frac_digits ? ipow10(frac_digits) : 1);
  if (exp10 > 0) v *= Rat(ipow10(exp10), 1);
  if (exp10 < 0) v /= Rat(ipow10(-exp10), 1);
  return neg ? -v : v;
}

// Exact conversion: shortest round-trip decimal of the double, then parsed.
inline Rat rat_from_double(double d) {
  char buf[48];
  auto r = std::to_chars(buf, buf + sizeof(buf), d);
  return rat_from_string(std::string_view(buf, r.ptr - buf));
}

// Canonical form: integers bare ("200"), otherwise "p/q" fully reduced.
inline std::string rat_to_string(const Rat& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// Fixed-point rendering with `places` decimals, rounding half away from zero.
inline std::string rat_to_fixed(const Rat& r, int places) {
  std::int64_t p = r.numerator(), q = r.denominator();
  bool neg = p < 0;
  if (neg) p = -p;
  std::int64_t scale = ipow10(places);
  std::int64_t scaled = p * scale / q;
  if (2 * (p * scale % q) >= q) ++scaled;
  std::string digits = std::to_string(scaled);
  if ((int)digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
  if (places > 0) digits.insert(digits.size() - places, ".");
  return (neg && scaled != 0) ? "-" + digits : digits;
}

inline double rat_to_double(const Rat& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline std::int64_t rat_floor(const Rat& r) {
  std::int64_t p = r.numerator(), q = r.denominator();
  std::int64_t d = p / q;
  if (p % q != 0 && (p < 0) != (q < 0)) --d;
  return d;
}

}  // namespace ocm
