#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "umbra/maskops.hpp"
#include "umbra/rng.hpp"

using namespace umbra;

namespace {

BinaryMask random_mask(Rng& rng, int h, int w, double p = 0.5) {
  BinaryMask m(h, w);
  for (auto& v : m.v) v = rng.bernoulli(p) ? 1 : 0;
  return m;
}
}  // namespace

TEST_CASE("erode: all-ones 5x5 with kernel 3 keeps the interior 3x3") {
  BinaryMask m(5, 5);
  std::fill(m.v.begin(), m.v.end(), 1);
  BinaryMask e = erode(m, 3);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool interior = y >= 1 && y <= 3 && x >= 1 && x <= 3;
      CHECK(e.at(y, x) == (interior ? 1 : 0));
    }
}

TEST_CASE("erode: zeros stay zeros, isolated pixel vanishes, kernel 1 is identity") {
  BinaryMask zeros(4, 6);
  CHECK(erode(zeros, 3).v == zeros.v);

  BinaryMask single(5, 5);
  single.at(2, 2) = 1;
  CHECK(erode(single, 3).empty_mask());

  Rng rng(11);
  BinaryMask m = random_mask(rng, 7, 7);
  CHECK(erode(m, 1).v == m.v);
  BinaryMask e3 = erode(m, 3);
  CHECK(erode(e3, 1).v == e3.v);
}

TEST_CASE("erode: invalid kernels are rejected") {
  BinaryMask m(3, 3);
  CHECK_THROWS_AS(erode(m, 2), std::invalid_argument);
  CHECK_THROWS_AS(erode(m, 0), std::invalid_argument);
  CHECK_THROWS_AS(erode(m, -3), std::invalid_argument);
}

TEST_CASE("distance transform: trivial masks") {
  BinaryMask zeros(3, 3);
  for (double d : distance_transform(zeros)) CHECK(d == 0.0);

  BinaryMask single(5, 5);
  single.at(2, 2) = 1;
  auto d = distance_transform(single);
  CHECK(d[2 * 5 + 2] == 1.0);
  for (int i = 0; i < 25; ++i)
    if (i != 12) CHECK(d[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("distance transform: row of ones inside background matches the brute-force oracle") {
  BinaryMask m(3, 7);
  for (int x = 1; x <= 5; ++x) m.at(1, x) = 1;
  auto got = distance_transform(m);
  auto want = test::brute_force_edt(m.v, m.h, m.w);
  CHECK(got == want);
}

TEST_CASE("distance transform: equals brute force exactly on every mask up to 8x8") {
  Rng rng(23);
  // exhaustive on all 3x3 masks, randomized on larger grids
  for (int bits = 0; bits < 512; ++bits) {
    BinaryMask m(3, 3);
    for (int i = 0; i < 9; ++i) m.v[static_cast<std::size_t>(i)] = (bits >> i) & 1;
    CHECK(distance_transform(m) == test::brute_force_edt(m.v, 3, 3));
  }
  for (int trial = 0; trial < 300; ++trial) {
    const int h = rng.uniform_int(1, 8), w = rng.uniform_int(1, 8);
    BinaryMask m = random_mask(rng, h, w, rng.uniform(0.2, 0.9));
    CAPTURE(trial);
    CHECK(distance_transform(m) == test::brute_force_edt(m.v, h, w));
  }
}

TEST_CASE("penumbra reweight: all-ones mask has unit interior and a band in (0,1]") {
  BinaryMask m(5, 5);
  std::fill(m.v.begin(), m.v.end(), 1);
  SoftMask s = penumbra_reweight(m, 3);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool interior = y >= 1 && y <= 3 && x >= 1 && x <= 3;
      if (interior) {
        CHECK(s.at(y, x) == 1.0);
      } else {
        CHECK(s.at(y, x) > 0.0);
        CHECK(s.at(y, x) <= 1.0);
      }
    }
}

TEST_CASE("penumbra reweight: all-zero mask stays zero") {
  BinaryMask m(4, 4);
  SoftMask s = penumbra_reweight(m, 3);
  for (double v : s.v) CHECK(v == 0.0);
}

TEST_CASE("penumbra reweight: two-branch rule on random masks") {
  Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = rng.uniform_int(1, 32), w = rng.uniform_int(1, 32);
    BinaryMask m = random_mask(rng, h, w, rng.uniform(0.3, 0.8));
    const BinaryMask core = erode(m, 3);
    SoftMask s = penumbra_reweight(m, 3);
    for (std::size_t i = 0; i < m.v.size(); ++i) {
      if (core.v[i]) {
        CHECK(s.v[i] == 1.0);  // interior exactly 1
      } else if (m.v[i]) {
        CHECK(s.v[i] > 0.0);  // band strictly positive...
        CHECK(s.v[i] < 1.0);  // ...and strictly below the interior value
      } else {
        CHECK(s.v[i] == 0.0);  // background exactly 0
      }
    }
  }
}

TEST_CASE("edge mask: partition of the shadow set") {
  BinaryMask m(5, 5);
  std::fill(m.v.begin(), m.v.end(), 1);
  EdgeMask e = edge_mask(m, 3);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool border = y == 0 || y == 4 || x == 0 || x == 4;
      CHECK(e.at(y, x) == (border ? 1 : 0));
    }

  BinaryMask zeros(3, 3);
  CHECK(edge_mask(zeros, 3).empty_mask());

  BinaryMask single(4, 4);
  single.at(1, 2) = 1;
  EdgeMask es = edge_mask(single, 3);
  CHECK(es.v == single.v);  // erosion removes the lone pixel, so it is all edge

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    BinaryMask r = random_mask(rng, rng.uniform_int(1, 16), rng.uniform_int(1, 16));
    const BinaryMask core = erode(r, 3);
    const EdgeMask band = edge_mask(r, 3);
    for (std::size_t i = 0; i < r.v.size(); ++i) {
      CHECK((band.v[i] | core.v[i]) == r.v[i]);  // union is the mask
      CHECK((band.v[i] & core.v[i]) == 0);       // intersection empty
    }
  }
}

TEST_CASE("downsample supervision: identity, block means, divisibility errors") {
  SoftMask s(2, 2);
  s.v = {1, 1, 0, 0};
  CHECK(downsample_supervision(s, 1).v == s.v);
  CHECK(downsample_supervision(s, 2).v == std::vector<double>{0.5});
  CHECK_THROWS_AS(downsample_supervision(s, 3), std::invalid_argument);

  Rng rng(99);
  SoftMask big(8, 8);
  for (auto& v : big.v) v = rng.uniform();
  SoftMask down = downsample_supervision(big, 4);
  for (int oy = 0; oy < 2; ++oy)
    for (int ox = 0; ox < 2; ++ox) {
      double acc = 0.0;
      for (int dy = 0; dy < 4; ++dy)
        for (int dx = 0; dx < 4; ++dx) acc += big.at(oy * 4 + dy, ox * 4 + dx);
      CHECK(down.at(oy, ox) == doctest::Approx(acc / 16.0).epsilon(1e-14));
    }

  // mean preservation
  double mean_in = 0.0, mean_out = 0.0;
  for (double v : big.v) mean_in += v;
  for (double v : down.v) mean_out += v;
  CHECK(mean_in / 64.0 == doctest::Approx(mean_out / 4.0).epsilon(1e-13));
}

TEST_CASE("soft mask blob round trip") {
  Rng rng(3);
  SoftMask s(6, 9);
  for (auto& v : s.v) v = static_cast<float>(rng.uniform());  // f32-representable
  const auto dir = std::filesystem::temp_directory_path() / "umbra_maskops_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "soft.f32";
  write_soft_mask(s, path);
  SoftMask r = read_soft_mask(path);
  CHECK(r.h == s.h);
  CHECK(r.w == s.w);
  CHECK(r.v == s.v);
  std::filesystem::remove_all(dir);
}
