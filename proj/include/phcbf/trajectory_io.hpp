// CSV serialization of trajectories.
//
// Column schema (header row mandatory):
//   t, q_1..q_n, p_1..p_n, u_1..u_m, H, Ke, V, h, psi, active, p_inj, p_diss
// Values are written with 17 significant digits so a read-back is exact.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "phcbf/simulation.hpp"

namespace phcbf {

std::vector<std::string> csv_header(Eigen::Index n, Eigen::Index m);

void write_csv(std::ostream& os, const Trajectory& traj);
void write_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Parses a trajectory written by write_csv. Throws ConfigError on malformed input.
Trajectory read_csv(std::istream& is);
Trajectory read_csv(const std::filesystem::path& path);

}  // namespace phcbf
