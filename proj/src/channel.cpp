#include "owcrs/channel.hpp"

#include <cmath>

#include "owcrs/rng.hpp"

namespace owcrs {

void PhysicalConstants::validate() const {
  if (wavelength <= 0 || beam_waist <= 0 || bandwidth <= 0 ||
      responsivity <= 0 || nsd <= 0 || receiver_area_total <= 0)
    throw std::domain_error("physical constants must be strictly positive");
  if (!(fov_half_angle > 0 && fov_half_angle <= M_PI / 2))
    throw std::domain_error("fov_half_angle must be in (0, pi/2]");
  if (num_photodiodes < 1) throw std::domain_error("num_photodiodes >= 1");
  if (!(steering_cone_half_angle > 0 && steering_cone_half_angle < M_PI / 2))
    throw std::domain_error("steering_cone_half_angle must be in (0, pi/2)");
}

double PhysicalConstants::pd_radius() const {
  return std::sqrt(pd_area() / M_PI);
}

void Scenario::validate() const {
  constants.validate();
  if (ap_positions.empty() || user_positions.empty())
    throw std::domain_error("need L >= 1 and K >= 1");
  auto inside = [&](const Vec3& p) {
    return p.x() >= 0 && p.x() <= room[0] && p.y() >= 0 && p.y() <= room[1] &&
           p.z() >= 0 && p.z() <= room[2];
  };
  for (const auto& p : ap_positions)
    if (!inside(p)) throw std::domain_error("AP outside the room box");
  for (const auto& p : user_positions)
    if (!inside(p)) throw std::domain_error("user outside the room box");
  if (pd_orientations.size() != user_positions.size())
    throw std::domain_error("pd_orientations must have one entry per user");
  for (const auto& set : pd_orientations) {
    if (static_cast<int>(set.size()) != constants.num_photodiodes)
      throw std::domain_error("each user needs M photodiode normals");
    for (const auto& n : set)
      if (std::abs(n.norm() - 1.0) > 1e-9)
        throw std::domain_error("photodiode normals must be unit vectors");
  }
  if (demands.size() != user_positions.size())
    throw std::domain_error("demands must have one entry per user");
  for (double d : demands)
    if (!(d > 0)) throw std::domain_error("demands must be strictly positive");
}

double rayleigh_distance(double w0, double wavelength) {
  if (w0 <= 0 || wavelength <= 0)
    throw std::domain_error("rayleigh_distance needs positive inputs");
  return M_PI * w0 * w0 / wavelength;
}

double beam_radius(double w0, double d, double d_ra) {
  if (w0 <= 0 || d_ra <= 0) throw std::domain_error("beam_radius needs positive w0, d_ra");
  if (d < 0) throw std::domain_error("beam_radius needs d >= 0");
  double q = d / d_ra;
  return w0 * std::sqrt(1.0 + q * q);
}

double intensity(double r, double d, double p_t, double w_d) {
  (void)d;
  if (p_t < 0 || w_d <= 0 || r < 0) throw std::domain_error("intensity preconditions");
  return (2.0 * p_t / (M_PI * w_d * w_d)) * std::exp(-2.0 * r * r / (w_d * w_d));
}

double received_power_onaxis(double p_t, double r_m, double w_d) {
  if (p_t < 0 || r_m < 0 || w_d <= 0)
    throw std::domain_error("received_power_onaxis preconditions");
  return p_t * (1.0 - std::exp(-2.0 * r_m * r_m / (w_d * w_d)));
}

double noise_variance(const PhysicalConstants& c) {
  return c.nsd * c.nsd * c.bandwidth;
}

double channel_gain(const Vec3& ap, const Vec3& user, const Vec3& pd_normal,
                    const PhysicalConstants& c) {
  Vec3 v = ap - user;
  if (v.z() <= 0) throw std::domain_error("AP must be strictly above the user plane");
  double dist = v.norm();
  double cospsi = pd_normal.dot(v) / dist;  // incidence on the photodiode
  if (cospsi <= std::cos(c.fov_half_angle)) return 0.0;

  double d_ra = rayleigh_distance(c.beam_waist, c.wavelength);
  double r_m = c.pd_radius();
  double dz = v.z();
  double rh = std::hypot(v.x(), v.y());
  double reach = std::tan(c.steering_cone_half_angle) * dz;

  double z_axial, r_perp;
  if (rh <= reach) {
    // beam aimed at the user: on axis at the slant distance
    z_axial = dist;
    r_perp = 0.0;
  } else {
    // axis clamped to the cone edge at the user's azimuth
    Vec3 edge(-v.x() / rh * reach, -v.y() / rh * reach, -dz);  // ap -> edge point
    Vec3 bdir = edge.normalized();
    Vec3 w = user - ap;
    z_axial = w.dot(bdir);
    r_perp = (w - z_axial * bdir).norm();
  }
  double w_d = beam_radius(c.beam_waist, z_axial, d_ra);
  double captured = (1.0 - std::exp(-2.0 * r_m * r_m / (w_d * w_d))) *
                    std::exp(-2.0 * r_perp * r_perp / (w_d * w_d));
  return c.responsivity * captured * cospsi;
}

ChannelMatrix build_channel(const Scenario& s) {
  s.validate();
  int k_users = s.num_users();
  int l_aps = s.num_aps();
  ChannelMatrix cm;
  cm.gains.resize(k_users, l_aps);
  cm.selected_pd.resize(k_users);
  cm.noise_variance = noise_variance(s.constants);
  for (int k = 0; k < k_users; ++k) {
    double best_sum = -1.0;
    Eigen::VectorXd best_row = Eigen::VectorXd::Zero(l_aps);
    int best_m = 0;
    for (int m = 0; m < s.constants.num_photodiodes; ++m) {
      Eigen::VectorXd row(l_aps);
      for (int l = 0; l < l_aps; ++l)
        row(l) = channel_gain(s.ap_positions[l], s.user_positions[k],
                              s.pd_orientations[k][m], s.constants);
      double sum = row.sum();
      if (sum > best_sum) {
        best_sum = sum;
        best_row = row;
        best_m = m;
      }
    }
    if (best_row.maxCoeff() <= 0.0) throw DisconnectedUserError(k);
    cm.gains.row(k) = best_row;
    cm.selected_pd[k] = best_m;
  }
  return cm;
}

std::vector<Vec3> default_ap_grid(const std::array<double, 3>& room) {
  double x1 = room[0] * 0.25, x2 = room[0] * 0.75;
  double y1 = room[1] * 0.25, y2 = room[1] * 0.75;
  return {Vec3(x1, y1, room[2]), Vec3(x1, y2, room[2]), Vec3(x2, y1, room[2]),
          Vec3(x2, y2, room[2])};
}

std::vector<Vec3> default_pd_normals(const PhysicalConstants& c) {
  std::vector<Vec3> out;
  double t = c.pd_tilt;
  for (int i = 0; i < c.num_photodiodes; ++i) {
    double az = M_PI / 4.0 + 2.0 * M_PI * i / c.num_photodiodes;
    out.emplace_back(std::sin(t) * std::cos(az), std::sin(t) * std::sin(az),
                     std::cos(t));
  }
  return out;
}

Scenario random_scenario(int k, uint64_t seed, const PhysicalConstants& c,
                         double height, double demand_min, double demand_max,
                         const std::array<double, 3>& room) {
  Scenario s;
  s.room = room;
  s.constants = c;
  s.rng_seed = seed;
  s.ap_positions = default_ap_grid(room);
  auto normals = default_pd_normals(c);
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    double x = rng.uniform(0.0, room[0]);
    double y = rng.uniform(0.0, room[1]);
    s.user_positions.emplace_back(x, y, height);
    s.pd_orientations.push_back(normals);
  }
  for (int i = 0; i < k; ++i) s.demands.push_back(rng.uniform(demand_min, demand_max));
  return s;
}

}  // namespace owcrs
