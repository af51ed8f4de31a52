// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace hdphom {

// Counter-based random stream (Philox 4x32-10). A stream is fully determined
// by (root_seed, stream_index): the seed is the cipher key and the stream
// index occupies the high counter words, so distinct indices give
// non-overlapping counter spaces. Streams are cheap value types; no global
// state, no jump-ahead bookkeeping.
class RngStream {
 public:
  RngStream(uint64_t root_seed, uint64_t stream_index)
      : root_seed_(root_seed), stream_index_(stream_index) {}

  uint64_t root_seed() const { return root_seed_; }
  uint64_t stream_index() const { return stream_index_; }

  uint64_t next_u64() {
    if (buf_pos_ >= 2) refill();
    return buf_[buf_pos_++];
  }

  // Uniform on the open interval (0,1); safe to pass to log().
  double next_unit() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the Marsaglia polar method; pairs are cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double x, y, s;
    do {
      x = 2.0 * next_unit() - 1.0;
      y = 2.0 * next_unit() - 1.0;
      s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * f;
    has_spare_ = true;
    return x * f;
  }

 private:
  static constexpr uint32_t kW32A = 0x9E3779B9u;
  static constexpr uint32_t kW32B = 0xBB67AE85u;
  static constexpr uint32_t kM4x32A = 0xD2511F53u;
  static constexpr uint32_t kM4x32B = 0xCD9E8D57u;

  static void mul_hi_lo(uint32_t a, uint32_t b, uint32_t* lo, uint32_t* hi) {
    uint64_t p = uint64_t(a) * uint64_t(b);
    *lo = uint32_t(p);
    *hi = uint32_t(p >> 32);
  }

  void refill() {
    uint32_t c0 = uint32_t(block_);
    uint32_t c1 = uint32_t(block_ >> 32);
    uint32_t c2 = uint32_t(stream_index_);
    uint32_t c3 = uint32_t(stream_index_ >> 32);
    uint32_t k0 = uint32_t(root_seed_);
    uint32_t k1 = uint32_t(root_seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      uint32_t lo0, hi0, lo1, hi1;
      mul_hi_lo(kM4x32A, c0, &lo0, &hi0);
      mul_hi_lo(kM4x32B, c2, &lo1, &hi1);
      uint32_t n0 = hi1 ^ c1 ^ k0;
      uint32_t n1 = lo1;
      uint32_t n2 = hi0 ^ c3 ^ k1;
      uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kW32A;
      k1 += kW32B;
    }
    buf_[0] = uint64_t(c0) | (uint64_t(c1) << 32);
    buf_[1] = uint64_t(c2) | (uint64_t(c3) << 32);
    buf_pos_ = 0;
    ++block_;
  }

  uint64_t root_seed_;
  uint64_t stream_index_;
  uint64_t block_ = 0;
  uint64_t buf_[2] = {0, 0};
  int buf_pos_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream-index layout: replicate * 16 + role. Role 0 is the level-one stick
// stream, roles 1..14 are the per-group level-two streams, role 15 is the
// second Dirichlet layer of the finite-dimensional model. Extending an
// experiment never perturbs earlier replicates because the layout depends
// only on the replicate index.
inline constexpr uint64_t kRolesPerReplicate = 16;
inline constexpr int kMaxGroups = 14;

struct StreamFamily {
  uint64_t root_seed = 0;
  uint64_t replicate = 0;

  RngStream role(uint64_t offset) const {
    return RngStream(root_seed, replicate * kRolesPerReplicate + offset);
  }
  RngStream level1() const { return role(0); }
  RngStream group(int k) const { return role(uint64_t(k)); }  // k = 1..kMaxGroups
  RngStream fdhdp_layer2() const { return role(15); }
};

}  // namespace hdphom
