#include <set>
#include <vector>

#include "doctest.h"
#include "infact/rng.hpp"

using infact::RngStream;

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(RngStream::philox(A4{0, 0, 0, 0}, A2{0, 0}) ==
        A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(RngStream::philox(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                          A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(RngStream::philox(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                          A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed and stream reproduce the sequence") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint32_t> xa, xb, xc, xd;
  for (int j = 0; j < 1000; ++j) {
    xa.push_back(a());
    xb.push_back(b());
    xc.push_back(c());
    xd.push_back(d());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
}

TEST_CASE("uniform lies in the open unit interval") {
  RngStream r(5);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int j = 0; j < n; ++j) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
}

TEST_CASE("state round trip resumes mid-block") {
  RngStream r(9, 3);
  for (int skip : {0, 1, 2, 3, 4, 5, 11}) {
    RngStream a = r;
    for (int j = 0; j < skip; ++j) a();
    RngStream b = RngStream::from_state(a.state());
    CHECK(b.state() == a.state());
    for (int j = 0; j < 20; ++j) CHECK(a() == b());
  }
}

TEST_CASE("substreams are stable and distinct") {
  const RngStream root(1);
  RngStream parent = root;
  for (int j = 0; j < 17; ++j) parent();
  CHECK(parent.substream(4).state() == root.substream(4).state());
  std::set<std::uint64_t> ids;
  for (std::uint64_t s = 0; s < 1000; ++s) ids.insert(root.substream(s).stream());
  CHECK(ids.size() == 1000);
  CHECK(root.substream(1).substream(2).stream() != root.substream(2).substream(1).stream());
}
