#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tpugen {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

// ---- bit utilities ----

// ceil(log2(x)) for x >= 1; clog2(1) == 0
int clog2(u64 x);

bool is_pow2(u64 x);

// low n bits set; n in [0,64], mask_bits(64) == ~0
u64 mask_bits(int n);

// position of the most significant set bit; x must be nonzero
int leading_one(u64 x);

// ---- hashing ----

u64 fnv1a64(const void* data, std::size_t len);
u64 fnv1a64(const std::string& s);
std::string hex64(u64 v);
std::string digest_hex(const std::string& s);

// ---- string helpers ----

std::string to_lower(std::string s);
std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
bool starts_with(const std::string& s, const std::string& prefix);

// Shortest decimal form with 12 significant digits, stable across platforms.
std::string format_sig12(double v);

// ---- small dense matrix of unsigned words ----

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<u64> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}

  u64& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  u64 at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  bool operator==(const Mat&) const = default;
};

// ---- deterministic sampling ----

// Uniform draw over [0, 2^bits) using raw engine output masked to width.
// std::uniform_int_distribution is implementation-defined, so avoid it
// anywhere a value lands in a test or a dataset.
u64 draw_bits(std::mt19937_64& rng, int bits);

// Uniform draw over [0, n) by rejection; n >= 1.
u64 draw_below(std::mt19937_64& rng, u64 n);

}  // namespace tpugen
