#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dskd {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;

// Thrown for bad configuration, bad arguments, malformed inputs. The CLI
// maps this to a distinct exit code from runtime failures.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for unreadable/corrupt files.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 core with hand-rolled distributions so that
// streams are reproducible independent of the standard library build.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(u64 seed) : state_(seed) {}

  u64 next() {
    u64 z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n).
  u64 below(u64 n) {
    if (n == 0) throw validation_error("Rng::below: n must be positive");
    u64 threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      u64 r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller, one cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  u64 state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes two seeds into one; used to derive independent substreams.
inline u64 mix_seed(u64 a, u64 b) {
  u64 z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Little-endian binary IO primitives shared by all file formats.
// ---------------------------------------------------------------------------
inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw io_error("write failed");
}

inline void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw io_error("unexpected end of file");
}

inline void write_u16(std::ostream& os, u16 v) {
  u8 b[2] = {u8(v & 0xff), u8(v >> 8)};
  write_bytes(os, b, 2);
}
inline void write_u32(std::ostream& os, u32 v) {
  u8 b[4] = {u8(v & 0xff), u8((v >> 8) & 0xff), u8((v >> 16) & 0xff),
             u8(v >> 24)};
  write_bytes(os, b, 4);
}
inline void write_u64(std::ostream& os, u64 v) {
  u8 b[8];
  for (int i = 0; i < 8; ++i) b[i] = u8((v >> (8 * i)) & 0xff);
  write_bytes(os, b, 8);
}
inline void write_f32(std::ostream& os, float v) {
  u32 bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

inline u16 read_u16(std::istream& is) {
  u8 b[2];
  read_bytes(is, b, 2);
  return u16(b[0] | (u16(b[1]) << 8));
}
inline u32 read_u32(std::istream& is) {
  u8 b[4];
  read_bytes(is, b, 4);
  return u32(b[0]) | (u32(b[1]) << 8) | (u32(b[2]) << 16) | (u32(b[3]) << 24);
}
inline u64 read_u64(std::istream& is) {
  u8 b[8];
  read_bytes(is, b, 8);
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= u64(b[i]) << (8 * i);
  return v;
}
inline float read_f32(std::istream& is) {
  u32 bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void write_magic(std::ostream& os, const char magic[9]) {
  write_bytes(os, magic, 8);
}
inline void expect_magic(std::istream& is, const char magic[9],
                         const std::string& what) {
  char got[9] = {0};
  read_bytes(is, got, 8);
  if (std::memcmp(got, magic, 8) != 0)
    throw io_error(what + ": bad magic, expected " + std::string(magic, 8));
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit content hash for the run manifest.
// ---------------------------------------------------------------------------
inline u64 fnv1a64(const void* data, std::size_t n) {
  const u8* p = static_cast<const u8*>(data);
  u64 h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline u64 fnv1a64_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open for hashing: " + path);
  u64 h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (is) {
    is.read(buf, sizeof(buf));
    std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<u8>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Index-chunked parallel loop. Work item i writes only to slot i of its
// output, so results do not depend on the thread count.
// ---------------------------------------------------------------------------
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < n; i += nt) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace dskd
