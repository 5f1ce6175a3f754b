#include "bmp/random.hpp"

#include <cmath>
#include <numbers>

namespace bmp {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

SeededStream::SeededStream(std::uint64_t master_seed)
    : SeededStream(master_seed, splitmix64(master_seed), splitmix64(~master_seed), 0) {}

SeededStream::SeededStream(std::uint64_t master_seed, std::uint64_t id0, std::uint64_t id1,
                           unsigned depth)
    : master_seed_(master_seed), id0_(id0), id1_(id1), depth_(depth) {}

SeededStream SeededStream::derive(std::uint64_t index) const {
  // Two independent 64-bit hash chains over the path give a 128-bit stream id.
  const std::uint64_t a = splitmix64(id0_ ^ splitmix64(index + 0x632BE59BD9B4E019ull));
  const std::uint64_t b = splitmix64(id1_ + splitmix64(index ^ 0x8CB92BA72F3D8DD7ull));
  return SeededStream(master_seed_, a, b, depth_ + 1);
}

void SeededStream::refill() {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32),
                                static_cast<std::uint32_t>(id1_),
                                static_cast<std::uint32_t>(id1_ >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(id0_), static_cast<std::uint32_t>(id0_ >> 32)};
  buffer_ = Philox4x32::block(ctr, key);
  ++counter_;
  used_ = 0;
}

std::uint64_t SeededStream::next_u64() {
  if (used_ > 2) refill();
  const std::uint64_t v =
      (static_cast<std::uint64_t>(buffer_[used_]) << 32) | static_cast<std::uint64_t>(buffer_[used_ + 1]);
  used_ += 2;
  return v;
}

double SeededStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_normal_ = r * std::sin(theta);
  has_spare_normal_ = true;
  return r * std::cos(theta);
}

double SeededStream::exponential(double rate) { return -std::log(uniform()) / rate; }

}  // namespace bmp
