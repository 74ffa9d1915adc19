#include "owcrs/grouping.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "owcrs/rng.hpp"

namespace owcrs {

GroupingPlan single_group(int k) {
  GroupingPlan plan;
  plan.num_groups = 1;
  plan.assignment.assign(k, 0);
  plan.group_members.resize(1);
  for (int i = 0; i < k; ++i) plan.group_members[0].push_back(i);
  return plan;
}

static GroupingPlan finalize(std::vector<int> assign, int g,
                             const std::vector<Eigen::Vector2d>& pts) {
  // canonical labels: sort groups by centroid x, then y
  std::vector<Eigen::Vector2d> cent(g, Eigen::Vector2d::Zero());
  std::vector<int> count(g, 0);
  for (size_t i = 0; i < assign.size(); ++i) {
    cent[assign[i]] += pts[i];
    count[assign[i]]++;
  }
  for (int j = 0; j < g; ++j)
    if (count[j] > 0) cent[j] /= count[j];
  std::vector<int> order(g);
  for (int j = 0; j < g; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (cent[a].x() != cent[b].x()) return cent[a].x() < cent[b].x();
    return cent[a].y() < cent[b].y();
  });
  std::vector<int> relabel(g);
  for (int j = 0; j < g; ++j) relabel[order[j]] = j;

  GroupingPlan plan;
  plan.num_groups = g;
  plan.assignment.resize(assign.size());
  plan.group_members.resize(g);
  for (size_t i = 0; i < assign.size(); ++i) {
    plan.assignment[i] = relabel[assign[i]];
    plan.group_members[plan.assignment[i]].push_back(static_cast<int>(i));
  }
  return plan;
}

GroupingPlan kmeans_group(const std::vector<Eigen::Vector2d>& positions, int g,
                          uint64_t seed) {
  int k = static_cast<int>(positions.size());
  if (g < 1 || g > k) throw std::domain_error("kmeans_group needs 1 <= g <= K");
  if (g == 1) return single_group(k);

  // farthest-point seeding
  Rng rng(seed);
  std::vector<int> seeds{static_cast<int>(rng.below(k))};
  while (static_cast<int>(seeds.size()) < g) {
    int far = -1;
    double fard = -1.0;
    for (int i = 0; i < k; ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (int s : seeds) d = std::min(d, (positions[i] - positions[s]).squaredNorm());
      if (d > fard) {
        fard = d;
        far = i;
      }
    }
    seeds.push_back(far);
  }
  std::vector<Eigen::Vector2d> cent;
  for (int s : seeds) cent.push_back(positions[s]);

  std::vector<int> assign(k, 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (int i = 0; i < k; ++i) {
      int best = 0;
      double bestd = (positions[i] - cent[0]).squaredNorm();
      for (int j = 1; j < g; ++j) {
        double d = (positions[i] - cent[j]).squaredNorm();
        if (d < bestd) {
          bestd = d;
          best = j;
        }
      }
      assign[i] = best;
    }
    // empty-cluster repair: take the farthest point of the largest cluster
    for (int j = 0; j < g; ++j) {
      if (std::count(assign.begin(), assign.end(), j) > 0) continue;
      int big = 0, bigc = -1;
      for (int q = 0; q < g; ++q) {
        int c = static_cast<int>(std::count(assign.begin(), assign.end(), q));
        if (c > bigc) {
          bigc = c;
          big = q;
        }
      }
      int far = -1;
      double fard = -1.0;
      for (int i = 0; i < k; ++i) {
        if (assign[i] != big) continue;
        double d = (positions[i] - cent[big]).squaredNorm();
        if (d > fard) {
          fard = d;
          far = i;
        }
      }
      assign[far] = j;
    }
    double shift = 0.0;
    for (int j = 0; j < g; ++j) {
      Eigen::Vector2d c = Eigen::Vector2d::Zero();
      int n = 0;
      for (int i = 0; i < k; ++i)
        if (assign[i] == j) {
          c += positions[i];
          n++;
        }
      if (n > 0) {
        c /= n;
        shift = std::max(shift, (c - cent[j]).norm());
        cent[j] = c;
      }
    }
    if (shift < 1e-9) break;
  }
  return finalize(assign, g, positions);
}

}  // namespace owcrs
