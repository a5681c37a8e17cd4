#include "brwcap/green_table.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "brwcap/error.hpp"

namespace brwcap {

namespace {
constexpr char kMagic[8] = {'B', 'R', 'W', 'G', 'R', 'E', 'E', 'N'};

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Errc::kIoError, "truncated Green cache file");
  return v;
}
}  // namespace

GreenTable::GreenTable(const StepLaw& law, double lambda, GreenOptions opts) : eval_(law, lambda, opts) {}

double GreenTable::operator()(const Point& x) const {
  const Point c = eval_.law().canonical(x);
  if (frozen_) {
    auto it = values_.find(c);
    if (it != values_.end()) return it->second;
    throw Error(Errc::kCacheMiss, "point " + format_point(x, eval_.law().dim()) + " not in frozen table");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = values_.find(c);
  if (it != values_.end()) return it->second;
  const double v = eval_(c);
  values_.emplace(c, v);
  return v;
}

void GreenTable::precompute(const std::vector<Point>& points) {
  int m = 0;
  for (const auto& p : points) m = std::max(m, p.max_abs());
  eval_.reserve(m);
  for (const auto& p : points) (*this)(p);
}

void GreenTable::precompute_differences(const std::vector<Point>& a) {
  int m = 0;
  const int d = eval_.law().dim();
  if (!a.empty()) {
    for (int i = 0; i < d; ++i) {
      int lo = a.front()[i], hi = lo;
      for (const auto& p : a) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
      m = std::max(m, hi - lo);
    }
  }
  eval_.reserve(m);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i; j < a.size(); ++j) (*this)(a[i] - a[j]);
}

void GreenTable::freeze() {
  frozen_ = true;
  eval_.freeze();
}

void GreenTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIoError, "cannot write " + path);
  std::vector<std::pair<Point, double>> rows(values_.begin(), values_.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out.write(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, eval_.law().hash());
  put(out, eval_.lambda());
  put(out, static_cast<std::int32_t>(eval_.max_coord()));
  put(out, static_cast<std::int32_t>(eval_.law().dim()));
  put(out, static_cast<std::uint64_t>(rows.size()));
  for (const auto& [p, v] : rows) {
    for (int i = 0; i < eval_.law().dim(); ++i) put(out, p[i]);
    put(out, v);
  }
  if (!out) throw Error(Errc::kIoError, "write failed for " + path);
}

void GreenTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot read " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error(Errc::kIoError, "not a Green cache file");
  if (get<std::uint32_t>(in) != kVersion) throw Error(Errc::kIoError, "unsupported cache version");
  if (get<std::uint64_t>(in) != eval_.law().hash()) throw Error(Errc::kIoError, "cache built for another law");
  if (get<double>(in) != eval_.lambda()) throw Error(Errc::kIoError, "cache built for another killing rate");
  get<std::int32_t>(in);  // resolution: informational
  const int d = get<std::int32_t>(in);
  if (d != eval_.law().dim()) throw Error(Errc::kIoError, "cache dimension mismatch");
  const auto n = get<std::uint64_t>(in);
  if (frozen_) throw Error(Errc::kCacheMiss, "cannot load into a frozen table");
  for (std::uint64_t k = 0; k < n; ++k) {
    Point p;
    for (int i = 0; i < d; ++i) p[i] = get<std::int32_t>(in);
    values_[p] = get<double>(in);
  }
}

}  // namespace brwcap
