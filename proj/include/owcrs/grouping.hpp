#pragma once
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace owcrs {

struct GroupingPlan {
  int num_groups = 1;
  std::vector<int> assignment;                 // per user
  std::vector<std::vector<int>> group_members;  // per group, ascending user ids

  int group_of(int user) const { return assignment[user]; }
};

// Lloyd's algorithm on 2-D positions with farthest-point seeding; groups are
// relabeled by ascending centroid (x, then y) so labels are stable across runs
GroupingPlan kmeans_group(const std::vector<Eigen::Vector2d>& positions, int g,
                          uint64_t seed);

GroupingPlan single_group(int k);

}  // namespace owcrs
