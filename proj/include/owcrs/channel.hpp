#pragma once
#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace owcrs {

using Vec3 = Eigen::Vector3d;

struct PhysicalConstants {
  double wavelength = 850e-9;        // m
  double beam_waist = 5e-6;          // m, W_0
  double bandwidth = 5e9;            // Hz
  double responsivity = 0.4;         // A/W
  double nsd = 4.47e-12;             // A/sqrt(Hz)
  double receiver_area_total = 15e-6;  // m^2, shared by the M photodiodes
  double fov_half_angle = 45.0 * M_PI / 180.0;  // rad, per photodiode
  int num_photodiodes = 4;
  double pd_tilt = 35.0 * M_PI / 180.0;  // rad from vertical
  // each AP steers its beam toward the served user, limited to this cone
  // about the vertical; past the edge the axis clamps and the user sits
  // off-axis on the Gaussian profile
  double steering_cone_half_angle = 40.0 * M_PI / 180.0;  // rad

  void validate() const;
  double pd_area() const { return receiver_area_total / num_photodiodes; }
  double pd_radius() const;  // r_m = sqrt(A_m / pi)
};

struct Scenario {
  std::array<double, 3> room{5.0, 5.0, 3.0};
  std::vector<Vec3> ap_positions;
  std::vector<Vec3> user_positions;
  std::vector<std::vector<Vec3>> pd_orientations;  // per user, M unit normals
  std::vector<double> demands;                     // bit/s/Hz per user
  PhysicalConstants constants;
  uint64_t rng_seed = 0;

  int num_users() const { return static_cast<int>(user_positions.size()); }
  int num_aps() const { return static_cast<int>(ap_positions.size()); }
  void validate() const;
};

struct ChannelMatrix {
  Eigen::MatrixXd gains;  // K x L, A/W
  std::vector<int> selected_pd;
  double noise_variance = 0.0;  // A^2
};

struct DisconnectedUserError : std::runtime_error {
  int user;
  explicit DisconnectedUserError(int k)
      : std::runtime_error("disconnected user " + std::to_string(k)), user(k) {}
};

double rayleigh_distance(double w0, double wavelength);
double beam_radius(double w0, double d, double d_ra);
double intensity(double r, double d, double p_t, double w_d);
double received_power_onaxis(double p_t, double r_m, double w_d);
double noise_variance(const PhysicalConstants& c);

// gain of the (ap -> user) link through one photodiode, per watt transmitted
double channel_gain(const Vec3& ap, const Vec3& user, const Vec3& pd_normal,
                    const PhysicalConstants& c);

ChannelMatrix build_channel(const Scenario& s);

// default 2x2 ceiling grid and the 4-photodiode receiver normals
std::vector<Vec3> default_ap_grid(const std::array<double, 3>& room);
std::vector<Vec3> default_pd_normals(const PhysicalConstants& c);

// scenario with K users placed uniformly on the floor at the given height,
// demands uniform in [demand_min, demand_max]; fully seeded
Scenario random_scenario(int k, uint64_t seed, const PhysicalConstants& c,
                         double height = 0.85, double demand_min = 0.5,
                         double demand_max = 2.0,
                         const std::array<double, 3>& room = {5.0, 5.0, 3.0});

}  // namespace owcrs
