#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lcz/error.hpp"
#include "lcz/raster.hpp"

using namespace lcz;

TEST_CASE("raster round-trips through the container format") {
  test::TempDir dir("raster_io");
  Raster r = test::random_raster(7, 5, 10.0, 11);
  r.at(2, 3) = kNoData;
  write_raster(r, dir / "band");
  for (const char* name : {"band", "band.hdr", "band.bin"}) {
    const Raster back = read_raster(dir / name);
    CHECK(back.width() == 7);
    CHECK(back.height() == 5);
    CHECK(back.pixel_size() == 10.0);
    CHECK(std::isnan(back.at(2, 3)));
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i == 2 * 7 + 3) continue;
      CHECK(back.values()[i] == r.values()[i]);
    }
  }
}

TEST_CASE("u8 rasters keep their dtype and 255 nodata") {
  test::TempDir dir("raster_u8");
  Raster r = Raster::make_u8(4, 3, 100.0);
  r.at(0, 0) = 14;
  write_raster(r, dir / "labels");
  const Raster back = read_raster(dir / "labels");
  CHECK(back.dtype() == DType::u8);
  CHECK(back.at(0, 0) == 14.0f);
  CHECK(back.is_nodata(back.at(1, 1)));
}

TEST_CASE("truncated payload is a data error") {
  test::TempDir dir("raster_trunc");
  write_raster(test::random_raster(8, 8, 10.0, 3), dir / "b");
  std::filesystem::resize_file(dir / "b.bin", 10);
  CHECK_THROWS_AS(read_raster(dir / "b"), DataError);
  CHECK_THROWS_AS(read_raster(dir / "missing"), DataError);
}

TEST_CASE("nearest downsampling takes the source pixel under the output center") {
  Raster r(20, 20, 5.0, 0.0f);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) r.at(y, x) = static_cast<float>(y * 100 + x);
  }
  const Raster d = downsample_nearest(r, 100.0);
  REQUIRE(d.width() == 1);
  CHECK(d.at(0, 0) == r.at(10, 10));

  const Raster q = downsample_nearest(r, 20.0);
  REQUIRE(q.width() == 5);
  for (int o = 0; o < 5; ++o) {
    const int src = static_cast<int>(std::floor((o + 0.5) * 4));
    CHECK(q.at(o, o) == r.at(src, src));
  }
}

TEST_CASE("bicubic upsampling reproduces a linear ramp at interior pixels") {
  Raster r(12, 10, 20.0, 0.0f);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 12; ++x) r.at(y, x) = 0.5f * x + 0.25f * y + 1.0f;
  }
  const Raster up = upsample_bicubic(r, 10.0);
  REQUIRE(up.width() == 24);
  // Output pixel centre maps to source coordinate (o + 0.5) / 2 - 0.5.
  for (int oy = 4; oy < up.height() - 4; ++oy) {
    for (int ox = 4; ox < up.width() - 4; ++ox) {
      const double sx = (ox + 0.5) / 2 - 0.5, sy = (oy + 0.5) / 2 - 0.5;
      CHECK(up.at(oy, ox) == doctest::Approx(0.5 * sx + 0.25 * sy + 1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("resampling rejects non-integer ratios") {
  Raster r(10, 10, 10.0, 0.0f);
  CHECK_THROWS_AS(downsample_nearest(r, 15.0), UsageError);
  CHECK_THROWS_AS(upsample_bicubic(r, 3.0), UsageError);
}

TEST_CASE("patch statistics") {
  SUBCASE("mean and population std") {
    // One 4x4 patch at 25 m holding 8 valid pixels.
    const float v[8] = {2, 4, 4, 4, 5, 5, 7, 9};
    Raster big(4, 4, 25.0, 0.0f);
    for (int i = 0; i < 8; ++i) big.values()[i] = v[i];
    for (int i = 8; i < 16; ++i) big.values()[i] = kNoData;
    const PatchGrid grid = PatchGrid::covering(big);
    REQUIRE(grid.patch_count() == 1);
    CHECK(patch_reduce(big, grid, PatchStat::mean).at(0, 0) == doctest::Approx(5.0));
    CHECK(patch_reduce(big, grid, PatchStat::std).at(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("fraction of nonzero pixels") {
    Raster b = Raster::make_u8(20, 20, 5.0, 0);
    for (int i = 0; i < 45; ++i) b.values()[i] = 1;
    const PatchGrid grid = PatchGrid::covering(b);
    CHECK(patch_reduce(b, grid, PatchStat::fraction_nonzero).at(0, 0) ==
          doctest::Approx(0.1125).epsilon(1e-6));
    CHECK(patch_reduce(b, grid, PatchStat::count_nonzero).at(0, 0) == 45.0f);
  }
  SUBCASE("all-nodata patch is nodata") {
    Raster r(10, 10, 10.0, kNoData);
    const PatchGrid grid = PatchGrid::covering(r);
    CHECK(std::isnan(patch_reduce(r, grid, PatchStat::mean).at(0, 0)));
  }
}

TEST_CASE("covering grid drops ragged borders") {
  Raster r(25, 13, 10.0, 0.0f);
  const PatchGrid g = PatchGrid::covering(r);
  CHECK(g.patch_cols == 2);
  CHECK(g.patch_rows == 1);
  CHECK(g.factor() == 10);
  CHECK(g.with_source(5.0).factor() == 20);
}
