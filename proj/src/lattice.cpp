#include "brwcap/lattice.hpp"

#include <algorithm>
#include <charconv>

#include "brwcap/error.hpp"

namespace brwcap {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kNotCritical: return "NotCritical";
    case Errc::kDegenerateDelta1: return "DegenerateDelta1";
    case Errc::kNegativeMass: return "NegativeMass";
    case Errc::kDivergentSum: return "DivergentSum";
    case Errc::kInvalidLaw: return "InvalidLaw";
    case Errc::kQuadratureNotConverged: return "QuadratureNotConverged";
    case Errc::kDivergentAtOrigin: return "DivergentAtOrigin";
    case Errc::kBoxTooSmall: return "BoxTooSmall";
    case Errc::kOriginNotAllowed: return "OriginNotAllowed";
    case Errc::kCeilingExceeded: return "CeilingExceeded";
    case Errc::kInfeasibleSize: return "InfeasibleSize";
    case Errc::kRejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case Errc::kSizeTooLarge: return "SizeTooLarge";
    case Errc::kWindowOutOfRange: return "WindowOutOfRange";
    case Errc::kInsufficientMaterialization: return "InsufficientMaterialization";
    case Errc::kSingularSystem: return "SingularSystem";
    case Errc::kSizeCeiling: return "SizeCeiling";
    case Errc::kRadiusOverflow: return "RadiusOverflow";
    case Errc::kKilledTableMissing: return "KilledTableMissing";
    case Errc::kTailNotConverged: return "TailNotConverged";
    case Errc::kGridBiasExceedsTolerance: return "GridBiasExceedsTolerance";
    case Errc::kCacheMiss: return "CacheMiss";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kIoError: return "IoError";
  }
  return "Unknown";
}

Point unit(int axis, int sign) {
  Point p;
  p[axis] = sign;
  return p;
}

std::size_t PointHash::operator()(const Point& p) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto v : p.c) {
    h ^= static_cast<std::uint32_t>(v);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 32;
  }
  return static_cast<std::size_t>(h);
}

Point parse_point(std::string_view text, int d) {
  Point p;
  int i = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ',' || text[pos] == ' ' || text[pos] == '\t' ||
                                 text[pos] == '(' || text[pos] == ')'))
      ++pos;
    if (pos >= text.size()) break;
    if (i >= d) throw Error(Errc::kConfigError, "too many coordinates in '" + std::string(text) + "'");
    std::int32_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
    if (ec != std::errc()) throw Error(Errc::kConfigError, "bad coordinate in '" + std::string(text) + "'");
    p[i++] = v;
    pos = static_cast<std::size_t>(ptr - text.data());
  }
  if (i != d)
    throw Error(Errc::kConfigError,
                "expected " + std::to_string(d) + " coordinates in '" + std::string(text) + "'");
  return p;
}

std::string format_point(const Point& p, int d, char sep) {
  std::string s;
  for (int i = 0; i < d; ++i) {
    if (i) s += sep;
    s += std::to_string(p[i]);
  }
  return s;
}

std::size_t PointSet::capacity_for(std::size_t n) {
  std::size_t cap = 16;
  while (cap < 2 * n + 2) cap <<= 1;
  return cap;
}

void PointSet::rehash(std::size_t cap) {
  slots_.assign(cap, 0);
  mask_ = cap - 1;
  for (std::size_t k = 0; k < order_.size(); ++k) {
    std::size_t i = PointHash{}(order_[k]) & mask_;
    while (slots_[i]) i = (i + 1) & mask_;
    slots_[i] = static_cast<std::uint32_t>(k + 1);
  }
}

bool PointSet::insert(const Point& p) {
  if (2 * (size_ + 1) > slots_.size()) rehash(slots_.size() * 2);
  std::size_t i = PointHash{}(p) & mask_;
  while (slots_[i]) {
    if (order_[slots_[i] - 1] == p) return false;
    i = (i + 1) & mask_;
  }
  order_.push_back(p);
  ++size_;
  slots_[i] = static_cast<std::uint32_t>(size_);
  return true;
}

std::int64_t PointSet::find(const Point& p) const {
  std::size_t i = PointHash{}(p) & mask_;
  while (slots_[i]) {
    if (order_[slots_[i] - 1] == p) return slots_[i] - 1;
    i = (i + 1) & mask_;
  }
  return -1;
}

void RangeSet::add(const Point& p) {
  ++visits_;
  if (set_.insert(p))
    counts_.push_back(1);
  else
    ++counts_[static_cast<std::size_t>(set_.find(p))];
}

BoundingBox RangeSet::bounding_box() const {
  BoundingBox b;
  const auto& pts = points();
  if (pts.empty()) return b;
  b.lo = b.hi = pts.front();
  for (const auto& p : pts) {
    for (int i = 0; i < dim_; ++i) {
      b.lo[i] = std::min(b.lo[i], p[i]);
      b.hi[i] = std::max(b.hi[i], p[i]);
    }
  }
  return b;
}

std::vector<Point> RangeSet::sorted_points() const {
  std::vector<Point> v = points();
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace brwcap
