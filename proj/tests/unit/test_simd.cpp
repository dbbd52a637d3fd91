#include <cmath>
#include <vector>

#include "doctest.h"
#include "lcz/random.hpp"
#include "lcz/simd/kernels.hpp"

using namespace lcz;

namespace {

std::vector<const simd::KernelTable*> vector_tables() {
  std::vector<const simd::KernelTable*> out;
  if (const auto* t = simd::avx2_kernels()) out.push_back(t);
  if (const auto* t = simd::neon_kernels()) out.push_back(t);
  return out;
}

std::vector<float> random_floats(std::size_t n, std::uint64_t seed, bool specials) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) {
    x = static_cast<float>(uniform01(rng) * 2.0 - 0.5);
    if (specials) {
      const auto u = uniform_index(rng, 20);
      if (u == 0) x = std::nanf("");
      if (u == 1) x = 0.0f;
      if (u == 2) x = -9999.0f;
    }
  }
  return v;
}

bool same_float(float a, float b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_CASE("vector kernels match the scalar reference") {
  const auto& ref = simd::scalar_kernels();
  const auto tables = vector_tables();
  if (tables.empty()) MESSAGE("no vector kernels on this CPU; scalar path only");
  for (const auto* t : tables) {
    CAPTURE(t->name);
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 1000u, 4099u}) {
      CAPTURE(n);
      const auto a = random_floats(n, 1 + n, true);
      const auto b = random_floats(n, 2 + n, true);

      std::vector<float> o1(n), o2(n);
      ref.normalized_difference(a.data(), b.data(), o1.data(), n);
      t->normalized_difference(a.data(), b.data(), o2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(same_float(o1[i], o2[i]));

      const auto m1 = ref.masked_moments(a.data(), n, -9999.0f);
      const auto m2 = t->masked_moments(a.data(), n, -9999.0f);
      CHECK(m1.count == m2.count);
      CHECK(m1.nonzero == m2.nonzero);
      CHECK(m2.sum == doctest::Approx(m1.sum).epsilon(1e-12));

      const double mean = m1.count ? m1.sum / static_cast<double>(m1.count) : 0.0;
      CHECK(t->masked_sq_dev(a.data(), n, -9999.0f, mean) ==
            doctest::Approx(ref.masked_sq_dev(a.data(), n, -9999.0f, mean)).epsilon(1e-12));

      auto lo1 = a, lo2 = a, hi1 = a, hi2 = a;
      const auto c = random_floats(n, 3 + n, false);
      ref.min_into(lo1.data(), c.data(), n);
      t->min_into(lo2.data(), c.data(), n);
      ref.max_into(hi1.data(), c.data(), n);
      t->max_into(hi2.data(), c.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(same_float(lo1[i], lo2[i]));
        CHECK(same_float(hi1[i], hi2[i]));
      }

      std::vector<double> x(n), y1(n), y2(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = 0.1 * static_cast<double>(i % 17) - 0.4;
        y1[i] = y2[i] = 0.3 * static_cast<double>(i % 5);
      }
      ref.axpy(-1.75, x.data(), y1.data(), n);
      t->axpy(-1.75, x.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);
    }
  }
}

TEST_CASE("normalized difference edge cases") {
  const auto& k = simd::active();
  const float a[4] = {0.5f, 0.0f, std::nanf(""), 0.2f};
  const float b[4] = {0.5f, 0.0f, 0.1f, 0.0f};
  float out[4];
  k.normalized_difference(a, b, out, 4);
  CHECK(out[0] == 0.0f);
  CHECK(std::isnan(out[1]));
  CHECK(std::isnan(out[2]));
  CHECK(out[3] == 1.0f);
}
