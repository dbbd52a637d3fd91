#pragma once

#include <array>
#include <string_view>

namespace lcz {

inline constexpr int kNumLabels = 17;

/// Labels are 1-based (LCZ 1..17); 0 and 255 mean "no label".
constexpr bool is_label(int v) noexcept { return v >= 1 && v <= kNumLabels; }

inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "compact high-rise", "compact mid-rise",     "compact low-rise", "open high-rise",
    "open mid-rise",     "open low-rise",        "lightweight low-rise", "large low-rise",
    "sparsely built",    "heavy industry",       "dense trees",      "scattered trees",
    "bush, scrub",       "low plants",           "bare rock or paved", "bare soil or sand",
    "water"};

/// Building surface fraction band of each LCZ, in percent.
struct FractionBand {
  double lo;
  double hi;
};

inline constexpr std::array<FractionBand, kNumLabels> kBuildingSurfaceFraction = {{
    {40, 60}, {40, 70}, {40, 70}, {20, 40}, {20, 40}, {20, 40}, {60, 90}, {30, 50}, {10, 20},
    {20, 30}, {0, 10},  {0, 10},  {0, 10},  {0, 10},  {0, 10},  {0, 10},  {0, 10}}};

constexpr const FractionBand& surface_fraction_band(int label) {
  return kBuildingSurfaceFraction[static_cast<std::size_t>(label - 1)];
}

constexpr bool is_built_label(int label) noexcept { return label >= 1 && label <= 10; }

}  // namespace lcz
