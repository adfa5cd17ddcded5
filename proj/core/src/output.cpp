#include <cmath>
#include <cstdio>
#include <ostream>

#include "selection/scenario.hpp"

namespace selection {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_series_csv(std::ostream& os, const Trajectory& traj, std::size_t stride) {
  if (stride == 0) stride = 1;
  os << "t,mass,first_moment,variance";
  for (const auto& p : traj.probes) os << ',' << p.first;
  os << '\n';
  const std::size_t n = traj.times.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i % stride != 0 && i + 1 != n) continue;
    os << format_number(traj.times[i]) << ',' << format_number(traj.mass[i]) << ','
       << format_number(traj.first_moment[i]) << ',' << format_number(traj.variance[i]);
    for (const auto& p : traj.probes) os << ',' << format_number(p.second[i]);
    os << '\n';
  }
}

void write_snapshot_csv(std::ostream& os, const GridMeasure& mu) {
  os << "x,density\n";
  const Grid& g = mu.grid();
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    os << format_number(g.midpoint(i)) << ',' << format_number(mu.density()[i]) << '\n';
  }
  os << "#atoms\n";
  for (const Atom& a : mu.atoms()) os << format_number(a.location) << ',' << format_number(a.weight) << '\n';
}

}  // namespace selection
