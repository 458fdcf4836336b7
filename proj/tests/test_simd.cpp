#include <cstring>
#include <random>

#include "doctest.h"
#include "mshoot/connections.hpp"
#include "mshoot/simd.hpp"

using namespace mshoot;

namespace {

struct Soa {
  std::vector<double> x1, y1, x2, y2;
  simd::SegmentBatch batch() const { return {x1.data(), y1.data(), x2.data(), y2.data(), x1.size()}; }
};

Soa random_batch(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1, 1);
  Soa s;
  for (std::size_t i = 0; i < n; ++i) {
    s.x1.push_back(u(rng));
    s.y1.push_back(u(rng));
    s.x2.push_back(u(rng));
    s.y2.push_back(u(rng));
  }
  return s;
}

}  // namespace

TEST_CASE("kernel tables: scalar always present, selection and parsing") {
  CHECK(simd::available(simd::Level::scalar));
  CHECK(simd::kernels_for(simd::Level::scalar).level == simd::Level::scalar);
  CHECK(simd::parse_level("scalar") == simd::Level::scalar);
  CHECK(simd::parse_level("avx2") == simd::Level::avx2);
  CHECK_THROWS(simd::parse_level("sse9"));
  const simd::Level before = simd::active().level;
  simd::set_active(simd::Level::scalar);
  CHECK(simd::active().level == simd::Level::scalar);
  simd::set_active(before);
  if (!simd::available(simd::Level::avx2)) CHECK_THROWS(simd::kernels_for(simd::Level::avx2));
}

TEST_CASE("segment_hits agree bitwise across variants") {
  if (!simd::available(simd::Level::avx2)) {
    MESSAGE("AVX2 not available on this machine; only the scalar kernel is exercised");
    return;
  }
  const auto& S = simd::kernels_for(simd::Level::scalar);
  const auto& V = simd::kernels_for(simd::Level::avx2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::size_t total_hits = 0;
  for (std::size_t n : {1u, 3u, 4u, 5u, 17u, 64u, 1000u}) {
    for (int trial = 0; trial < 50; ++trial) {
      Soa b = random_batch(rng, n);
      // Degenerate members: zero length, parallel, shared endpoint, exact touch.
      if (n >= 4) {
        b.x2[0] = b.x1[0];
        b.y2[0] = b.y1[0];
        b.x1[1] = 0.0, b.y1[1] = 0.0, b.x2[1] = 1.0, b.y2[1] = 1.0;
        b.x1[2] = 0.25, b.y1[2] = 0.0, b.x2[2] = 1.25, b.y2[2] = 1.0;
        b.x1[3] = 0.5, b.y1[3] = 0.5, b.x2[3] = 0.5, b.y2[3] = -1.0;
      }
      const double px1 = trial % 5 == 0 ? 0.0 : u(rng), py1 = trial % 5 == 0 ? 0.0 : u(rng);
      const double px2 = trial % 5 == 0 ? 1.0 : u(rng), py2 = trial % 5 == 0 ? 1.0 : u(rng);
      std::vector<std::uint32_t> i1(n), i2(n);
      std::vector<double> a1(n), a2(n), b1(n), b2(n);
      const auto h1 = S.segment_hits(px1, py1, px2, py2, b.batch(), i1.data(), a1.data(), b1.data());
      const auto h2 = V.segment_hits(px1, py1, px2, py2, b.batch(), i2.data(), a2.data(), b2.data());
      REQUIRE(h1 == h2);
      total_hits += h1;
      CHECK(std::memcmp(i1.data(), i2.data(), h1 * sizeof(std::uint32_t)) == 0);
      CHECK(std::memcmp(a1.data(), a2.data(), h1 * sizeof(double)) == 0);
      CHECK(std::memcmp(b1.data(), b2.data(), h1 * sizeof(double)) == 0);
      // Each reported hit is the reference pairwise result.
      for (std::size_t h = 0; h < h1; ++h) {
        const std::size_t j = i1[h];
        double a, bb;
        REQUIRE(simd::segment_solve(px1, py1, px2, py2, b.x1[j], b.y1[j], b.x2[j], b.y2[j], a, bb));
        CHECK(a == a1[h]);
        CHECK(bb == b1[h]);
      }
    }
  }
  CHECK(total_hits > 100);
}

TEST_CASE("dot and lincomb agree to rounding") {
  const auto& S = simd::kernels_for(simd::Level::scalar);
  std::vector<const simd::Kernels*> all{&S};
  if (simd::available(simd::Level::avx2)) all.push_back(&simd::kernels_for(simd::Level::avx2));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t n : {0u, 1u, 4u, 7u, 20u, 333u}) {
    std::vector<double> a(n), b(n), base(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = u(rng), b[i] = u(rng), base[i] = u(rng);
    long double exact = 0, absum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      exact += static_cast<long double>(a[i]) * b[i];
      absum += std::abs(static_cast<long double>(a[i]) * b[i]);
    }
    const std::size_t nvec = 12;
    std::vector<std::vector<double>> vecs(nvec, std::vector<double>(n));
    std::vector<const double*> ptr;
    std::vector<double> coef(nvec);
    for (std::size_t j = 0; j < nvec; ++j) {
      coef[j] = u(rng);
      for (double& x : vecs[j]) x = u(rng);
      ptr.push_back(vecs[j].data());
    }
    const double h = 0.37;
    for (const auto* K : all) {
      CAPTURE(K->name);
      const double d = K->dot(a.data(), b.data(), n);
      CHECK(std::abs(d - static_cast<double>(exact)) <= 4 * n * 1.2e-16 * static_cast<double>(absum) + 1e-300);
      std::vector<double> out(n);
      K->lincomb(out.data(), base.data(), h, coef.data(), ptr.data(), nvec, n);
      for (std::size_t i = 0; i < n; ++i) {
        long double e = 0, mag = 0;
        for (std::size_t j = 0; j < nvec; ++j) {
          e += static_cast<long double>(coef[j]) * vecs[j][i];
          mag += std::abs(static_cast<long double>(coef[j]) * vecs[j][i]);
        }
        const long double want = base[i] + h * e;
        CHECK(std::abs(out[i] - static_cast<double>(want)) <=
              4 * nvec * 1.2e-16 * static_cast<double>(std::abs(base[i]) + h * mag));
      }
    }
  }
}

TEST_CASE("scan results do not depend on the active kernel") {
  if (!simd::available(simd::Level::avx2)) return;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1), d(-0.3, 0.3);
  auto segs = [&](int n) {
    std::vector<Segment> v(n);
    for (int i = 0; i < n; ++i) {
      v[i].k = i;
      v[i].p1 = {u(rng), u(rng)};
      v[i].p2 = {v[i].p1[0] + d(rng), v[i].p1[1] + d(rng)};
    }
    return v;
  };
  const auto src = segs(700), tgt = segs(900);
  const simd::Level before = simd::active().level;
  simd::set_active(simd::Level::scalar);
  const auto a = scan_segments(src, tgt);
  simd::set_active(simd::Level::avx2);
  const auto b = scan_segments(src, tgt);
  simd::set_active(before);
  REQUIRE(a.size() == b.size());
  CHECK(!a.empty());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].k1 == b[i].k1);
    CHECK(a[i].k2 == b[i].k2);
    CHECK(a[i].a == b[i].a);
    CHECK(a[i].b == b[i].b);
  }
}
