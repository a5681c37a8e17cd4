#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace brwcap {

inline constexpr int kMaxDim = 9;

// A lattice vector in Z^d, d <= kMaxDim. Unused trailing coordinates are 0,
// so points of the same dimension compare and hash consistently.
struct Point {
  std::array<std::int32_t, kMaxDim> c{};

  std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  Point& operator+=(const Point& o) {
    for (int i = 0; i < kMaxDim; ++i) c[i] += o.c[i];
    return *this;
  }
  Point& operator-=(const Point& o) {
    for (int i = 0; i < kMaxDim; ++i) c[i] -= o.c[i];
    return *this;
  }
  friend Point operator+(Point a, const Point& b) { return a += b; }
  friend Point operator-(Point a, const Point& b) { return a -= b; }
  friend Point operator-(Point a) {
    for (auto& v : a.c) v = -v;
    return a;
  }
  friend auto operator<=>(const Point&, const Point&) = default;

  bool is_zero() const {
    for (auto v : c)
      if (v != 0) return false;
    return true;
  }
  std::int64_t norm2() const {
    std::int64_t s = 0;
    for (auto v : c) s += static_cast<std::int64_t>(v) * v;
    return s;
  }
  std::int32_t max_abs() const {
    std::int32_t m = 0;
    for (auto v : c) m = std::max(m, v < 0 ? -v : v);
    return m;
  }
};

Point unit(int axis, int sign = 1);

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept;
};

// Parses "1,0,-2" (commas or whitespace) into a point of dimension d.
Point parse_point(std::string_view text, int d);
std::string format_point(const Point& p, int d, char sep = ',');

// Open-addressing hash set of lattice points, tuned for the membership test
// in random-walk inner loops. Insert-only.
class PointSet {
 public:
  PointSet() { rehash(16); }
  explicit PointSet(std::size_t expected) { rehash(capacity_for(expected)); }

  bool insert(const Point& p);
  bool contains(const Point& p) const { return find(p) >= 0; }
  // Insertion index of p, or -1.
  std::int64_t find(const Point& p) const;
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  // Points in insertion order.
  const std::vector<Point>& points() const { return order_; }

 private:
  static std::size_t capacity_for(std::size_t n);
  void rehash(std::size_t cap);

  std::vector<std::uint32_t> slots_;  // index + 1 into order_, 0 = empty
  std::vector<Point> order_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

// Axis-aligned bounding box, used to short-circuit membership tests.
struct BoundingBox {
  Point lo, hi;
  bool contains(const Point& p, int d) const {
    for (int i = 0; i < d; ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  }
};

// The range of a branching random walk (or any finite lattice set):
// distinct points plus optional visit multiplicities.
class RangeSet {
 public:
  explicit RangeSet(int d) : dim_(d) {}

  int dim() const { return dim_; }
  void add(const Point& p);
  bool contains(const Point& p) const { return set_.contains(p); }
  std::size_t size() const { return set_.size(); }
  const std::vector<Point>& points() const { return set_.points(); }
  // Multiplicity of points()[i].
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total_visits() const { return visits_; }
  BoundingBox bounding_box() const;

  // Distinct points sorted lexicographically (translation-stable order).
  std::vector<Point> sorted_points() const;

 private:
  int dim_;
  PointSet set_;
  std::vector<std::int64_t> counts_;
  std::int64_t visits_ = 0;
};

}  // namespace brwcap
