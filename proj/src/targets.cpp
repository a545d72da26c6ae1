#include "kt/targets.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fmt/core.h>
#include <fstream>
#include <random>
#include <sstream>

namespace kt {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::size_t kExactMedianLimit = 4096;
constexpr std::size_t kMedianPairSamples = std::size_t{1} << 20;

PointSet sample_mog(const MogTarget& t, std::size_t n, std::uint64_t seed, std::vector<unsigned>* labels) {
  if (t.components < 1 || t.components > kMogMeans.size()) {
    throw ConstraintError(fmt::format("mixture needs 1..8 components, got {}", t.components));
  }
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<unsigned> pick(0, t.components - 1);
  std::normal_distribution<double> normal;
  std::vector<double> data(2 * n);
  if (labels != nullptr) labels->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned c = pick(gen);
    if (labels != nullptr) (*labels)[i] = c;
    data[2 * i] = kMogMeans[c][0] + normal(gen);
    data[2 * i + 1] = kMogMeans[c][1] + normal(gen);
  }
  return PointSet(2, std::move(data));
}

PointSet external_pool(const ExternalTarget& t) {
  PointSet all = ingest(t.path, IngestOptions{t.burn_in, std::nullopt});
  if (!(t.holdout >= 0.0 && t.holdout < 1.0)) throw ConstraintError("holdout fraction must lie in [0, 1)");
  auto keep = static_cast<std::size_t>(std::floor((1.0 - t.holdout) * static_cast<double>(all.size())));
  std::vector<Index> idx(keep);
  for (std::size_t i = 0; i < keep; ++i) idx[i] = i;
  return all.subset(idx);
}

PointSet apply_options(PointSet points, const IngestOptions& options) {
  if (options.burn_in > 0) {
    if (options.burn_in >= points.size()) {
      throw DataError(fmt::format("burn-in of {} drops all {} rows", options.burn_in, points.size()));
    }
    std::vector<Index> idx;
    for (Index i = options.burn_in; i < points.size(); ++i) idx.push_back(i);
    points = points.subset(idx);
  }
  if (options.thin_to) points = standard_thin_to(points, *options.thin_to);
  return points;
}

template <class T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("binary sample file is truncated");
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <class T>
void write_le(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

std::size_t target_dim(const TargetSpec& target) {
  return std::visit(Overloaded{
                        [](const GaussTarget& g) { return g.dim; },
                        [](const MogTarget&) { return std::size_t{2}; },
                        [](const ExternalTarget& e) { return ingest(e.path).dim(); },
                    },
                    target);
}

bool is_synthetic(const TargetSpec& target) { return !std::holds_alternative<ExternalTarget>(target); }

PointSet sample(const TargetSpec& target, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DataError("sample size must be at least 1");
  return std::visit(Overloaded{
                        [&](const GaussTarget& g) {
                          if (g.dim < 1) throw ConstraintError("gaussian target needs d >= 1");
                          std::mt19937_64 gen(seed);
                          std::normal_distribution<double> normal;
                          std::vector<double> data(n * g.dim);
                          for (double& v : data) v = normal(gen);
                          return PointSet(g.dim, std::move(data));
                        },
                        [&](const MogTarget& t) { return sample_mog(t, n, seed, nullptr); },
                        [&](const ExternalTarget& e) { return standard_thin_to(external_pool(e), n); },
                    },
                    target);
}

std::vector<unsigned> sample_mog_labels(const MogTarget& target, std::size_t n, std::uint64_t seed) {
  std::vector<unsigned> labels;
  sample_mog(target, n, seed, &labels);
  return labels;
}

PointSet standard_thin_to(const PointSet& points, std::size_t size) {
  const std::size_t n = points.size();
  if (size < 1 || size > n) {
    throw DataError(fmt::format("cannot standard-thin {} points down to {}", n, size));
  }
  const std::size_t step = n / size;
  std::vector<Index> idx(size);
  for (std::size_t c = 0; c < size; ++c) idx[c] = n - 1 - step * (size - 1 - c);
  return points.subset(idx);
}

SampleFormat detect_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  char magic[4] = {};
  in.read(magic, 4);
  if (in && std::memcmp(magic, "KTPS", 4) == 0) return SampleFormat::Binary;
  return SampleFormat::Csv;
}

PointSet parse_csv(const std::string& text, const IngestOptions& options) {
  std::vector<double> data;
  std::size_t dim = 0;
  std::size_t row = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++row;
    std::size_t col = 0;
    std::size_t start = 0;
    for (;;) {
      std::size_t end = line.find(',', start);
      std::string_view cell(line.data() + start, (end == std::string::npos ? line.size() : end) - start);
      ++col;
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw DataError(fmt::format("malformed value '{}' at row {}, column {}", cell, row, col));
      }
      if (!std::isfinite(v)) {
        throw DataError(fmt::format("non-finite value at row {}, column {}", row, col));
      }
      data.push_back(v);
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (dim == 0) {
      dim = col;
    } else if (col != dim) {
      throw DataError(fmt::format("row {} has {} columns, expected {}", row, col, dim));
    }
  }
  if (row == 0) throw DataError("no data rows");
  return apply_options(PointSet(dim, std::move(data)), options);
}

PointSet ingest(const std::filesystem::path& path, SampleFormat format, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  if (format == SampleFormat::Csv) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options);
  }
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "KTPS", 4) != 0) throw DataError("missing KTPS magic");
  auto n = read_le<std::uint32_t>(in);
  auto d = read_le<std::uint32_t>(in);
  if (n == 0 || d == 0) throw DataError("binary sample file declares no data");
  std::vector<double> data(std::size_t{n} * d);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = read_le<double>(in);
    if (!std::isfinite(data[k])) {
      throw DataError(fmt::format("non-finite value at row {}, column {}", k / d + 1, k % d + 1));
    }
  }
  return apply_options(PointSet(d, std::move(data)), options);
}

PointSet ingest(const std::filesystem::path& path, const IngestOptions& options) {
  return ingest(path, detect_format(path), options);
}

void write_csv(const PointSet& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  for (Index i = 0; i < points.size(); ++i) {
    Point p = points[i];
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << fmt::format("{:.17g}", p[j]);
    out << '\n';
  }
}

void write_binary(const PointSet& points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out.write("KTPS", 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(points.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(points.dim()));
  for (double v : points.data()) write_le<double>(out, v);
}

std::string test_function_name(const TestFunction& f) {
  return std::visit(Overloaded{
                        [](const RkhsWitness&) { return "rkhs"; },
                        [](const Moment1&) { return "moment1"; },
                        [](const Moment2&) { return "moment2"; },
                        [](const Cif&) { return "cif"; },
                    },
                    f);
}

double eval_test_function(const TestFunction& f, Point x) {
  return std::visit(Overloaded{
                        [&](const RkhsWitness& w) {
                          if (w.anchor.size() != x.size()) throw DataError("test function dimension mismatch");
                          return w.kernel(Point(w.anchor), x);
                        },
                        [&](const Moment1&) { return x[0]; },
                        [&](const Moment2&) { return x[0] * x[0]; },
                        [&](const Cif& c) {
                          if (c.u.size() != x.size()) throw DataError("test function dimension mismatch");
                          double s = 0.0;
                          for (std::size_t j = 0; j < x.size(); ++j) s += std::abs(x[j] - c.u[j]);
                          return std::exp(-s / static_cast<double>(x.size()));
                        },
                    },
                    f);
}

double median_heuristic_bandwidth(const PointSet& points, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n < 2) throw DataError("median heuristic needs at least two points");
  auto dist = [&](Index a, Index b) {
    double s = 0.0;
    for (std::size_t j = 0; j < points.dim(); ++j) {
      double diff = points[a][j] - points[b][j];
      s += diff * diff;
    }
    return std::sqrt(s);
  };
  std::vector<double> d;
  if (n <= kExactMedianLimit) {
    d.reserve(n * (n - 1) / 2);
    for (Index a = 0; a < n; ++a)
      for (Index b = a + 1; b < n; ++b) d.push_back(dist(a, b));
  } else {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    d.reserve(kMedianPairSamples);
    while (d.size() < kMedianPairSamples) {
      Index a = pick(gen);
      Index b = pick(gen);
      if (a != b) d.push_back(dist(a, b));
    }
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  double upper = d[mid];
  if (d.size() % 2 == 1) return upper;
  double lower = *std::max_element(d.begin(), d.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace kt
