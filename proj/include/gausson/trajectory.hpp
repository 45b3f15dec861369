#pragma once

#include <cstddef>
#include <vector>

namespace gausson {

// Particle positions of a Bohmian ensemble sampled on a time grid.
struct TrajectoryEnsemble {
  std::vector<double> x0;                      // initial positions
  std::vector<double> times;                   // snapshot stamps
  std::vector<std::vector<double>> positions;  // [time][particle]
  std::vector<bool> flagged;                   // particle left the resolved region

  std::size_t particle_count() const { return x0.size(); }
  std::size_t time_count() const { return times.size(); }
};

// True when x0[i] < x0[j] implies positions[k][i] < positions[k][j] at
// every stamp k (1-D Bohmian trajectories never cross).
bool is_non_crossing(const TrajectoryEnsemble& ensemble);

}  // namespace gausson
