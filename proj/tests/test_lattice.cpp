#include <doctest.h>

#include "brwcap/error.hpp"
#include "brwcap/lattice.hpp"

using namespace brwcap;

TEST_SUITE("lattice") {

TEST_CASE("point parsing and formatting") {
  const auto p = parse_point("1,-2 3", 3);
  CHECK(p[0] == 1);
  CHECK(p[1] == -2);
  CHECK(p[2] == 3);
  CHECK(format_point(p, 3) == "1,-2,3");
  CHECK(p.norm2() == 14);
  CHECK(p.max_abs() == 3);
  CHECK((p - p).is_zero());
  CHECK_THROWS_AS(parse_point("1,2", 3), Error);
}

TEST_CASE("point set keeps insertion order and rejects duplicates") {
  PointSet s;
  for (int i = 0; i < 1000; ++i) CHECK(s.insert(Point{{i % 10, i / 10, -i, 0, 0, 0}}));
  CHECK(s.size() == 1000);
  CHECK(!s.insert(s.points()[17]));
  CHECK(s.find(s.points()[17]) == 17);
  CHECK(!s.contains(Point{{-5, 7, 0, 0, 0, 0}}));
}

TEST_CASE("range set multiplicities and bounding box") {
  RangeSet r(2);
  r.add(Point{{0, 0}});
  r.add(Point{{1, -1}});
  r.add(Point{{0, 0}});
  CHECK(r.size() == 2);
  CHECK(r.total_visits() == 3);
  CHECK(r.counts()[0] == 2);
  const auto box = r.bounding_box();
  CHECK(box.lo[1] == -1);
  CHECK(box.hi[0] == 1);
  CHECK(box.contains(Point{{1, 0}}, 2));
  CHECK(!box.contains(Point{{2, 0}}, 2));
  const auto sorted = r.sorted_points();
  CHECK(sorted.front() < sorted.back());
}

}
