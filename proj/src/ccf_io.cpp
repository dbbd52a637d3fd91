#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lcz/ccf.hpp"
#include "lcz/error.hpp"

namespace lcz {
namespace {

constexpr const char* kMagic = "lczfuse-ccf-model";
constexpr int kVersion = 1;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void malformed(const std::string& what) {
  throw DataError("malformed model file: " + what);
}

std::istringstream next_line(std::istream& in, const char* expect) {
  std::string line;
  if (!std::getline(in, line)) malformed(std::string("missing ") + expect);
  return std::istringstream(line);
}

double to_double(const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  malformed("bad number '" + tok + "'");
}

template <typename T>
T read_field(std::istream& in, const char* key) {
  auto ls = next_line(in, key);
  std::string k;
  T v{};
  if (!(ls >> k >> v) || k != key) malformed(std::string("expected ") + key);
  return v;
}

}  // namespace

void write_ccf(const CcfModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << kMagic << ' ' << kVersion << '\n';
  out << "seed " << model.seed() << '\n';
  out << "n_features " << model.feature_names().size() << '\n';
  for (const auto& name : model.feature_names()) out << "feature " << name << '\n';
  out << "n_trees " << model.n_trees() << '\n';
  for (std::size_t t = 0; t < model.n_trees(); ++t) {
    const auto& nodes = model.trees()[t].nodes();
    out << "tree " << t << ' ' << nodes.size() << '\n';
    for (const auto& n : nodes) {
      if (n.leaf) {
        out << "L " << int(n.label);
      } else {
        out << "S " << n.features.size();
        for (auto f : n.features) out << ' ' << f;
        for (double w : n.weights) out << ' ' << fmt(w);
        out << ' ' << fmt(n.threshold) << ' ' << n.left << ' ' << n.right;
      }
      for (auto c : n.counts) out << ' ' << c;
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw DataError("write failed: " + path.string());
}

CcfModel read_ccf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model " + path.string());
  {
    auto ls = next_line(in, "header");
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != kMagic) malformed("bad header");
    if (version != kVersion) throw DataError("unsupported model version " + std::to_string(version));
  }
  const auto seed = read_field<std::uint64_t>(in, "seed");
  const auto p = read_field<std::size_t>(in, "n_features");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < p; ++i) {
    auto ls = next_line(in, "feature");
    std::string k, name;
    if (!(ls >> k >> name) || k != "feature") malformed("expected feature");
    names.push_back(name);
  }
  const auto n_trees = read_field<std::size_t>(in, "n_trees");
  if (n_trees < 1) malformed("n_trees must be at least 1");
  std::vector<CanonicalCorrelationTree> trees;
  for (std::size_t t = 0; t < n_trees; ++t) {
    auto ls = next_line(in, "tree");
    std::string k;
    std::size_t idx = 0, count = 0;
    if (!(ls >> k >> idx >> count) || k != "tree" || idx != t || count == 0) malformed("bad tree");
    std::vector<CctNode> nodes(count);
    for (auto& n : nodes) {
      auto ns = next_line(in, "node");
      std::string kind;
      ns >> kind;
      if (kind == "L") {
        int label = 0;
        ns >> label;
        if (!is_label(label)) malformed("leaf label out of range");
        n.label = static_cast<std::uint8_t>(label);
      } else if (kind == "S") {
        std::size_t q = 0;
        ns >> q;
        if (q == 0 || q > p) malformed("bad split arity");
        n.leaf = false;
        n.features.resize(q);
        n.weights.resize(q);
        for (auto& f : n.features) {
          ns >> f;
          if (f >= p) malformed("feature index out of range");
        }
        for (auto& w : n.weights) {
          std::string tok;
          ns >> tok;
          w = to_double(tok);
        }
        std::string thr;
        ns >> thr >> n.left >> n.right;
        n.threshold = to_double(thr);
        if (n.left <= 0 || n.right <= 0 || std::size_t(n.left) >= count ||
            std::size_t(n.right) >= count) {
          malformed("child index out of range");
        }
      } else {
        malformed("unknown node kind");
      }
      for (auto& c : n.counts) ns >> c;
      if (!ns) malformed("truncated node record");
      if (!n.leaf) {
        const auto top = std::max_element(n.counts.begin(), n.counts.end());
        n.label = static_cast<std::uint8_t>(top - n.counts.begin() + 1);
      }
    }
    trees.emplace_back(std::move(nodes));
  }
  std::string tail;
  if (!(in >> tail) || tail != "end") malformed("missing end marker");
  return CcfModel(std::move(names), std::move(trees), seed);
}

}  // namespace lcz
