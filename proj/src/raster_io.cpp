#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "lcz/error.hpp"
#include "lcz/raster.hpp"

namespace lcz {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_float(float v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

float parse_float(const std::string& s, const fs::path& where) {
  if (s == "nan" || s == "NaN") return kNoData;
  try {
    std::size_t used = 0;
    const float v = std::stof(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed header value '" + s + "' in " + where.string());
  }
}

int parse_int(const std::string& s, const fs::path& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed header value '" + s + "' in " + where.string());
  }
}

}  // namespace

fs::path raster_stem(const fs::path& path) {
  fs::path p = path;
  if (p.extension() == ".hdr" || p.extension() == ".bin") p.replace_extension();
  return p;
}

Raster read_raster(const fs::path& path) {
  const fs::path stem = raster_stem(path);
  const fs::path hdr = fs::path(stem).concat(".hdr");
  const fs::path bin = fs::path(stem).concat(".bin");

  std::ifstream in(hdr);
  if (!in) throw DataError("cannot open raster header " + hdr.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed header line '" + line + "' in " + hdr.string());
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"format_version", "width", "height", "pixel_size_m", "dtype"}) {
    if (!kv.count(key)) throw DataError(std::string("malformed header: missing ") + key + " in " + hdr.string());
  }
  if (parse_int(kv["format_version"], hdr) != 1) {
    throw DataError("unsupported version " + kv["format_version"] + " in " + hdr.string());
  }
  const int width = parse_int(kv["width"], hdr);
  const int height = parse_int(kv["height"], hdr);
  if (width <= 0 || height <= 0) throw DataError("empty raster: " + hdr.string());
  double pixel = 0.0;
  try {
    pixel = std::stod(kv["pixel_size_m"]);
  } catch (const std::exception&) {
    throw DataError("malformed header value '" + kv["pixel_size_m"] + "' in " + hdr.string());
  }
  DType dtype;
  if (kv["dtype"] == "f32") {
    dtype = DType::f32;
  } else if (kv["dtype"] == "u8") {
    dtype = DType::u8;
  } else {
    throw DataError("malformed header: unknown dtype '" + kv["dtype"] + "' in " + hdr.string());
  }
  if (!(pixel > 0.0)) throw DataError("malformed header: pixel_size_m in " + hdr.string());

  Raster r(width, height, pixel, 0.0f, dtype);
  if (kv.count("nodata")) r.set_nodata(parse_float(kv["nodata"], hdr));

  std::ifstream data(bin, std::ios::binary);
  if (!data) throw DataError("cannot open raster payload " + bin.string());
  const std::size_t n = r.size();
  const std::size_t elem = dtype == DType::f32 ? 4 : 1;
  std::vector<unsigned char> bytes(n * elem);
  data.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(data.gcount()) != bytes.size()) {
    throw DataError("truncated raster payload " + bin.string() + ": expected " +
                    std::to_string(bytes.size()) + " bytes, got " + std::to_string(data.gcount()));
  }
  auto out = r.values();
  if (dtype == DType::u8) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(bytes[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u;
      std::memcpy(&u, bytes.data() + 4 * i, 4);
      if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
      out[i] = std::bit_cast<float>(u);
    }
  }
  return r;
}

void write_raster(const Raster& r, const fs::path& path) {
  const fs::path stem = raster_stem(path);
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  {
    std::ofstream hdr(fs::path(stem).concat(".hdr"));
    if (!hdr) throw DataError("cannot write " + stem.string() + ".hdr");
    hdr << "format_version=1\n"
        << "width=" << r.width() << "\n"
        << "height=" << r.height() << "\n"
        << "pixel_size_m=" << format_double(r.pixel_size()) << "\n"
        << "dtype=" << (r.dtype() == DType::f32 ? "f32" : "u8") << "\n"
        << "nodata=" << format_float(r.nodata()) << "\n";
  }
  std::ofstream bin(fs::path(stem).concat(".bin"), std::ios::binary);
  if (!bin) throw DataError("cannot write " + stem.string() + ".bin");
  const auto vals = r.values();
  if (r.dtype() == DType::u8) {
    std::vector<unsigned char> bytes(vals.size());
    const float nd = std::isnan(r.nodata()) ? kLabelNoData : r.nodata();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const float v = std::isnan(vals[i]) ? nd : vals[i];
      bytes[i] = static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
    }
    bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  } else {
    std::vector<unsigned char> bytes(vals.size() * 4);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      std::uint32_t u = std::bit_cast<std::uint32_t>(vals[i]);
      if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
      std::memcpy(bytes.data() + 4 * i, &u, 4);
    }
    bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!bin) throw DataError("short write to " + stem.string() + ".bin");
}

}  // namespace lcz
