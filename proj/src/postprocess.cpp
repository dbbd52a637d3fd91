#include "lcz/postprocess.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lcz/error.hpp"

namespace lcz {
namespace {

int label_of(const Raster& r, int row, int col) {
  const float v = r.at(row, col);
  if (r.is_nodata(v)) return 0;
  const int l = static_cast<int>(v);
  return is_label(l) && static_cast<float>(l) == v ? l : 0;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

Raster argmax_map(const VotesCube& votes, double pixel_size) {
  Raster out = Raster::make_u8(votes.cols(), votes.rows(), pixel_size);
  for (int i = 0; i < votes.rows(); ++i) {
    for (int j = 0; j < votes.cols(); ++j) {
      const auto v = votes.at(i, j);
      int best = -1;
      for (int l = 0; l < kNumLabels; ++l) {
        if (v[l] > 0.0 && (best < 0 || v[l] > v[best])) best = l;
      }
      if (best >= 0) out.at(i, j) = static_cast<float>(best + 1);
    }
  }
  return out;
}

Raster median_filter_3x3(const Raster& map, FilterMode mode) {
  Raster out = Raster::make_u8(map.width(), map.height(), map.pixel_size());
  std::array<int, 9> window{};
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (label_of(map, y, x) == 0) continue;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= map.height() || xx < 0 || xx >= map.width()) continue;
          const int l = label_of(map, yy, xx);
          if (l != 0) window[n++] = l;
        }
      }
      std::sort(window.begin(), window.begin() + n);
      int pick;
      if (mode == FilterMode::median) {
        pick = window[(n - 1) / 2];
      } else {
        pick = window[0];
        int best_run = 0;
        for (int a = 0; a < n;) {
          int b = a;
          while (b < n && window[b] == window[a]) ++b;
          if (b - a > best_run) {
            best_run = b - a;
            pick = window[a];
          }
          a = b;
        }
      }
      out.at(y, x) = static_cast<float>(pick);
    }
  }
  return out;
}

Raster majority_vote_fusion(std::span<const Raster> maps) {
  if (maps.empty()) throw UsageError("majority vote needs at least one map");
  for (const auto& m : maps) {
    if (!m.same_shape(maps.front())) throw UsageError("label maps differ in dimensions");
  }
  const Raster& first = maps.front();
  Raster out = Raster::make_u8(first.width(), first.height(), first.pixel_size());
  for (int y = 0; y < first.height(); ++y) {
    for (int x = 0; x < first.width(); ++x) {
      std::array<int, kNumLabels> tally{};
      for (const auto& m : maps) {
        const int l = label_of(m, y, x);
        if (l != 0) ++tally[l - 1];
      }
      int best = -1;
      for (int l = 0; l < kNumLabels; ++l) {
        if (tally[l] > 0 && (best < 0 || tally[l] > tally[best])) best = l;
      }
      if (best >= 0) out.at(y, x) = static_cast<float>(best + 1);
    }
  }
  return out;
}

// ---- confusion matrix ------------------------------------------------------------

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t n) {
  if (!is_label(truth) || !is_label(predicted)) throw UsageError("confusion entry out of range");
  counts_[truth - 1][predicted - 1] += n;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (const auto& row : counts_) {
    for (auto c : row) t += c;
  }
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int truth) const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts_[truth - 1]) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(int predicted) const noexcept {
  std::uint64_t t = 0;
  for (const auto& row : counts_) t += row[predicted - 1];
  return t;
}

double ConfusionMatrix::overall_accuracy() const {
  const auto n = total();
  if (n == 0) throw DataError("empty confusion matrix");
  std::uint64_t diag = 0;
  for (int l = 0; l < kNumLabels; ++l) diag += counts_[l][l];
  return static_cast<double>(diag) / static_cast<double>(n);
}

double ConfusionMatrix::chance_agreement() const {
  const auto n = static_cast<double>(total());
  if (n == 0) throw DataError("empty confusion matrix");
  double pe = 0.0;
  for (int l = 1; l <= kNumLabels; ++l) {
    pe += static_cast<double>(row_sum(l)) * static_cast<double>(col_sum(l));
  }
  return pe / (n * n);
}

double ConfusionMatrix::kappa() const {
  const double oa = overall_accuracy();
  const double pe = chance_agreement();
  // Both maps constant on one shared label: agreement is total but not
  // beyond chance; report perfect agreement.
  if (pe >= 1.0) return oa >= 1.0 ? 1.0 : 0.0;
  return (oa - pe) / (1.0 - pe);
}

std::optional<double> ConfusionMatrix::producer_accuracy(int label) const {
  const auto r = row_sum(label);
  if (r == 0) return std::nullopt;
  return static_cast<double>(counts_[label - 1][label - 1]) / static_cast<double>(r);
}

std::string ConfusionMatrix::format_percentages(double hide_below) const {
  std::ostringstream out;
  out << "truth\\pred";
  for (int l = 1; l <= kNumLabels; ++l) out << fmt(l, "%6.0f");
  out << '\n';
  for (int t = 1; t <= kNumLabels; ++t) {
    const auto r = row_sum(t);
    if (r == 0) continue;
    out << fmt(t, "%10.0f");
    for (int p = 1; p <= kNumLabels; ++p) {
      const double pct = 100.0 * static_cast<double>(count(t, p)) / static_cast<double>(r);
      out << (pct < hide_below ? std::string(6, ' ') : fmt(pct, "%6.1f"));
    }
    out << '\n';
  }
  return out.str();
}

std::string ConfusionMatrix::metrics_text() const {
  std::ostringstream out;
  out << "n=" << total() << '\n';
  out << "oa=" << fmt(overall_accuracy()) << '\n';
  out << "kappa=" << fmt(kappa()) << '\n';
  for (int l = 1; l <= kNumLabels; ++l) {
    const auto pa = producer_accuracy(l);
    out << "pa_" << l << '=' << (pa ? fmt(*pa) : std::string("undefined")) << '\n';
  }
  return out.str();
}

void ConfusionMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "truth";
  for (int l = 1; l <= kNumLabels; ++l) out << ",pred_" << l;
  out << '\n';
  for (int t = 1; t <= kNumLabels; ++t) {
    out << t;
    for (int p = 1; p <= kNumLabels; ++p) out << ',' << count(t, p);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

ConfusionMatrix evaluate(const Raster& predicted, const Raster& truth) {
  if (!predicted.same_shape(truth)) throw UsageError("prediction and truth differ in dimensions");
  ConfusionMatrix cm;
  for (int y = 0; y < truth.height(); ++y) {
    for (int x = 0; x < truth.width(); ++x) {
      const int t = label_of(truth, y, x);
      const int p = label_of(predicted, y, x);
      if (t != 0 && p != 0) cm.add(t, p);
    }
  }
  if (cm.total() == 0) throw DataError("no overlapping labeled pixels");
  return cm;
}

// ---- palette export ----------------------------------------------------------------

const std::array<std::array<std::uint8_t, 3>, kNumLabels>& label_palette() {
  static constexpr std::array<std::array<std::uint8_t, 3>, kNumLabels> kPalette = {{
      {140, 0, 0},     {209, 0, 0},     {255, 0, 0},     {191, 77, 0},   {255, 102, 0},
      {255, 153, 85},  {250, 238, 5},   {188, 188, 188}, {255, 204, 170}, {85, 85, 85},
      {0, 106, 0},     {0, 170, 0},     {100, 133, 37},  {185, 219, 121}, {0, 0, 0},
      {251, 247, 174}, {106, 106, 255},
  }};
  return kPalette;
}

void write_label_ppm(const Raster& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P6\n" << map.width() << ' ' << map.height() << "\n255\n";
  const auto& pal = label_palette();
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const int l = label_of(map, y, x);
      const std::array<std::uint8_t, 3> rgb = l ? pal[l - 1] : std::array<std::uint8_t, 3>{0, 0, 0};
      out.write(reinterpret_cast<const char*>(rgb.data()), 3);
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_palette(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const auto& pal = label_palette();
  for (int l = 1; l <= kNumLabels; ++l) {
    out << l << ' ' << int(pal[l - 1][0]) << ' ' << int(pal[l - 1][1]) << ' '
        << int(pal[l - 1][2]) << '\n';
  }
}

}  // namespace lcz
