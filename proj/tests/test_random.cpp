#include <cmath>
#include <vector>

#include "bmp/random.hpp"
#include "doctest.h"

using namespace bmp;

TEST_CASE("Philox4x32-10 known answers") {
  using P = Philox4x32;
  auto check = [](P::Counter c, P::Key k, P::Counter expect) {
    const P::Counter got = P::block(c, k);
    for (int i = 0; i < 4; ++i) CHECK(got[i] == expect[i]);
  };
  check({0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  check({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff},
        {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  check({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0},
        {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and derivations differ") {
  SeededStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  const SeededStream root(42);
  SeededStream c0 = root.derive(0), c1 = root.derive(1), c0b = root.derive(0);
  CHECK(c0.next_u64() == c0b.next_u64());
  CHECK(c0.next_u64() != c1.next_u64());
  SeededStream g = root.derive(0).derive(1), h = root.derive(1).derive(0);
  CHECK(g.next_u64() != h.next_u64());
}

TEST_CASE("draw moments") {
  SeededStream s(7);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
    se += s.exponential(2.0);
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(se / n == doctest::Approx(0.5).epsilon(0.02));

  std::vector<double> w{0.25, 0.0, 0.75};
  std::vector<int> hits(3, 0);
  for (int i = 0; i < 40000; ++i) ++hits[s.categorical(w)];
  CHECK(hits[1] == 0);
  CHECK(hits[0] / 40000.0 == doctest::Approx(0.25).epsilon(0.04));
}
