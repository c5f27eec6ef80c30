#ifndef TWA_PACKING_INSTANCE_HPP
#define TWA_PACKING_INSTANCE_HPP

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "twa/errors.hpp"
#include "twa/graph.hpp"
#include "twa/packing/factors.hpp"

namespace twa::packing {

/// Hexagonal packing density, the upper bound for congruent circles in the plane.
inline constexpr double kHexDensity = 0.9069;

/// n congruent circles of radius r in the unit square.
struct PackingInstance {
  std::size_t n_circles = 0;
  double radius = 0.0;
  double buffer_fraction = 0.05;

  void validate() const {
    if (n_circles == 0) throw InvalidConfig("packing needs at least one circle");
    if (!(radius > 0.0 && radius < 0.5)) throw InvalidConfig("radius must lie in (0, 0.5)");
    if (!(buffer_fraction >= 0.0) || !std::isfinite(buffer_fraction)) {
      throw InvalidConfig("buffer fraction must be >= 0");
    }
    if (density() > kHexDensity) {
      std::ostringstream os;
      os << "density " << density() << " of " << n_circles << " circles of radius " << radius
         << " exceeds " << kHexDensity;
      throw InfeasibleRadius(os.str());
    }
  }

  [[nodiscard]] double density() const {
    return static_cast<double>(n_circles) * std::numbers::pi * radius * radius;
  }
};

/// Fraction of the unit square covered by n circles of radius r.
inline double density(std::size_t n, double radius) {
  return static_cast<double>(n) * std::numbers::pi * radius * radius;
}

inline double radius_for_density(std::size_t n, double d) {
  if (n == 0 || !(d > 0.0)) throw InvalidConfig("density and circle count must be positive");
  return std::sqrt(d / (static_cast<double>(n) * std::numbers::pi));
}

struct CircleVars {
  VariableId x;
  VariableId y;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct PackingModel {
  PackingInstance instance;
  std::vector<CircleVars> circles;   // indexed by circle id
  std::vector<FactorId> box_factors;  // indexed by circle id

  [[nodiscard]] std::size_t size() const { return circles.size(); }
};

/// Adds two coordinate variables and one box factor per circle. Centers start
/// uniform in [r, 1-r]^2. Pair factors are left to the maintenance reasoner.
inline PackingModel build_instance(const PackingInstance& inst, FactorGraph& graph,
                                   std::uint64_t seed, double rho = 1.0) {
  inst.validate();
  PackingModel m;
  m.instance = inst;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(inst.radius, 1.0 - inst.radius);
  m.circles.reserve(inst.n_circles);
  m.box_factors.reserve(inst.n_circles);
  for (std::size_t i = 0; i < inst.n_circles; ++i) {
    const double x0 = u(rng);
    const double y0 = u(rng);
    CircleVars cv{graph.add_variable(x0), graph.add_variable(y0)};
    m.circles.push_back(cv);
    m.box_factors.push_back(graph.add_factor(std::make_unique<BoxFactor>(inst.radius, rho), {cv.x, cv.y}));
  }
  return m;
}

/// Current concurred centers, indexed by circle id.
inline std::vector<Point> positions(const PackingModel& m, const FactorGraph& g) {
  std::vector<Point> out;
  out.reserve(m.circles.size());
  for (const CircleVars& c : m.circles) out.push_back({g.variable(c.x).value, g.variable(c.y).value});
  return out;
}

struct Feasibility {
  double max_overlap = 0.0;     // max over pairs of 2r - distance, floored at 0
  double max_box_excess = 0.0;  // max distance of a center outside [r, 1-r]
};

/// O(n^2) geometric check, independent of the solver's spatial index.
inline Feasibility check_feasibility(const std::vector<Point>& p, double r) {
  Feasibility f;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (double c : {p[i].x, p[i].y}) {
      f.max_box_excess = std::max({f.max_box_excess, r - c, c - (1.0 - r)});
    }
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double d = std::hypot(p[i].x - p[j].x, p[i].y - p[j].y);
      f.max_overlap = std::max(f.max_overlap, 2.0 * r - d);
    }
  }
  return f;
}

/// Packing file: header "n=<n> r=<radius> density=<d>" then "id,x,y" lines.
inline void write_packing(std::ostream& os, const std::vector<Point>& p, double r) {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::setprecision(17);
  os << "n=" << p.size() << " r=" << r << " density=" << density(p.size(), r) << "\n";
  for (std::size_t i = 0; i < p.size(); ++i) os << i << "," << p[i].x << "," << p[i].y << "\n";
  os.flags(old_flags);
  os.precision(old_prec);
}

struct PackingFile {
  double radius = 0.0;
  double density = 0.0;
  std::vector<Point> centers;
};

inline PackingFile read_packing(std::istream& is) {
  PackingFile f;
  std::string line;
  if (!std::getline(is, line)) throw SyntaxError("packing file: missing header");
  std::size_t n = 0;
  {
    std::istringstream hs(line);
    std::string tok;
    bool have_n = false, have_r = false;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw SyntaxError("packing file: bad header token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      try {
        if (key == "n") { n = std::stoul(val); have_n = true; }
        else if (key == "r") { f.radius = std::stod(val); have_r = true; }
        else if (key == "density") { f.density = std::stod(val); }
      } catch (const std::exception&) {
        throw SyntaxError("packing file: bad header value '" + tok + "'");
      }
    }
    if (!have_n || !have_r) throw SyntaxError("packing file: header needs n= and r=");
  }
  f.centers.assign(n, Point{});
  std::vector<bool> seen(n, false);
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t id;
    double x, y;
    char c1, c2;
    if (!(ls >> id >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',' || id >= n || seen[id]) {
      throw SyntaxError("packing file: bad line '" + line + "'");
    }
    seen[id] = true;
    f.centers[id] = {x, y};
    ++count;
  }
  if (count != n) throw SyntaxError("packing file: expected " + std::to_string(n) + " circles");
  return f;
}

}  // namespace twa::packing

#endif  // TWA_PACKING_INSTANCE_HPP
