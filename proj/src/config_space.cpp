#include "bmp/config_space.hpp"

namespace bmp {

bool contains(const Domain& domain, const Point& p) {
  if (domain.is_periodic()) return p.x >= 0.0 && p.x < domain.length;
  return p.site < domain.size;
}

Configuration add_configurations(const Configuration& mu, const Configuration& nu) {
  std::vector<Point> points;
  points.reserve(mu.size() + nu.size());
  points.insert(points.end(), mu.points().begin(), mu.points().end());
  points.insert(points.end(), nu.points().begin(), nu.points().end());
  return Configuration(std::move(points));
}

}  // namespace bmp
