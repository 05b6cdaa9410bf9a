#include "tpugen/common.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace tpugen {

int clog2(u64 x) {
  if (x == 0) throw std::invalid_argument("clog2(0)");
  int r = 0;
  u64 v = 1;
  while (v < x) {
    v <<= 1;
    ++r;
    if (r > 64) break;
  }
  return r;
}

bool is_pow2(u64 x) { return x != 0 && (x & (x - 1)) == 0; }

u64 mask_bits(int n) {
  if (n <= 0) return 0;
  if (n >= 64) return ~u64{0};
  return (u64{1} << n) - 1;
}

int leading_one(u64 x) {
  if (x == 0) throw std::invalid_argument("leading_one(0)");
  return 63 - __builtin_clzll(x);
}

u64 fnv1a64(const void* data, std::size_t len) {
  const u8* p = static_cast<const u8*>(data);
  u64 h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

u64 fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(u64 v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string digest_hex(const std::string& s) { return hex64(fnv1a64(s)); }

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() &&
         std::memcmp(s.data(), prefix.data(), prefix.size()) == 0;
}

std::string format_sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::string(buf);
}

u64 draw_bits(std::mt19937_64& rng, int bits) {
  return rng() & mask_bits(bits);
}

u64 draw_below(std::mt19937_64& rng, u64 n) {
  if (n == 0) throw std::invalid_argument("draw_below(0)");
  if (n == 1) return 0;
  int bits = clog2(n);
  for (;;) {
    u64 v = draw_bits(rng, bits);
    if (v < n) return v;
  }
}

}  // namespace tpugen
