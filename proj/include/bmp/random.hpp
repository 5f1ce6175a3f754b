#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bmp {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

/// Independent random stream identified by a master seed and a derivation
/// path (replica index, Ulam–Harris lineage, ...). Streams are counter based:
/// the output depends only on (master_seed, path, draw index), never on the
/// order in which streams are consumed.
class SeededStream {
 public:
  using result_type = std::uint64_t;

  explicit SeededStream(std::uint64_t master_seed);

  /// Child stream for derivation index `index`; the parent is left untouched.
  SeededStream derive(std::uint64_t index) const;

  std::uint64_t master_seed() const { return master_seed_; }
  unsigned depth() const { return depth_; }

  std::uint64_t next_u64();
  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential(double rate);
  /// Index k with probability weights[k] / sum(weights).
  template <typename Range>
  std::size_t categorical(const Range& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    std::size_t k = 0;
    std::size_t last_positive = 0;
    for (double w : weights) {
      if (w > 0.0) {
        last_positive = k;
        if (u < w) return k;
        u -= w;
      }
      ++k;
    }
    return last_positive;
  }

 private:
  SeededStream(std::uint64_t master_seed, std::uint64_t id0, std::uint64_t id1, unsigned depth);
  void refill();

  std::uint64_t master_seed_;
  std::uint64_t id0_;
  std::uint64_t id1_;
  unsigned depth_ = 0;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter buffer_{};
  unsigned used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace bmp
