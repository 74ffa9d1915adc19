#include <doctest.h>

#include <cmath>

#include "owcrs/channel.hpp"
#include "owcrs/rng.hpp"

using namespace owcrs;

namespace {

// Simpson quadrature of the radial intensity integral
double quad_power(double p_t, double w_d, double r_max, int n = 40001) {
  auto f = [&](double r) { return intensity(r, 0.0, p_t, w_d) * 2.0 * M_PI * r; };
  double h = r_max / (n - 1);
  double s = f(0.0) + f(r_max);
  for (int i = 1; i < n - 1; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Scenario fixture_scenario(int k, uint64_t seed) { return random_scenario(k, seed, PhysicalConstants{}); }

}  // namespace

TEST_CASE("rayleigh distance values and scaling") {
  CHECK(rayleigh_distance(5e-6, 850e-9) ==
        doctest::Approx(9.239978392911157e-5).epsilon(1e-12));
  CHECK(rayleigh_distance(20e-6, 850e-9) ==
        doctest::Approx(1.4783965428657852e-3).epsilon(1e-12));
  CHECK(rayleigh_distance(10e-6, 850e-9) ==
        doctest::Approx(4.0 * rayleigh_distance(5e-6, 850e-9)).epsilon(1e-12));
  CHECK_THROWS_AS(rayleigh_distance(0.0, 850e-9), std::domain_error);
  CHECK_THROWS_AS(rayleigh_distance(5e-6, -1.0), std::domain_error);
}

TEST_CASE("beam radius endpoints and growth") {
  double d_ra = rayleigh_distance(5e-6, 850e-9);
  CHECK(beam_radius(5e-6, 0.0, d_ra) == 5e-6);
  CHECK(beam_radius(5e-6, d_ra, d_ra) ==
        doctest::Approx(5e-6 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(beam_radius(5e-6, 3.0, d_ra) ==
        doctest::Approx(0.16233804203073307).epsilon(1e-12));
  double prev = 0.0;
  for (double d : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    double w = beam_radius(5e-6, d, d_ra);
    CHECK(w > prev);
    prev = w;
  }
  CHECK_THROWS_AS(beam_radius(5e-6, -0.1, d_ra), std::domain_error);
  CHECK_THROWS_AS(beam_radius(0.0, 1.0, d_ra), std::domain_error);
}

TEST_CASE("intensity peak, e^-2 point, conservation") {
  double p_t = 1.7, w_d = 0.11;
  CHECK(intensity(0.0, 0.0, p_t, w_d) ==
        doctest::Approx(2.0 * p_t / (M_PI * w_d * w_d)).epsilon(1e-15));
  CHECK(intensity(w_d, 0.0, p_t, w_d) ==
        doctest::Approx(intensity(0.0, 0.0, p_t, w_d) * std::exp(-2.0))
            .epsilon(1e-14));
  Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    double p = rng.uniform(0.1, 5.0);
    double w = rng.uniform(0.02, 0.5);
    double integral = quad_power(p, w, 10.0 * w);
    CHECK(std::abs(integral - p) <= 1e-9 * p);
  }
  CHECK_THROWS_AS(intensity(-1.0, 0.0, 1.0, 0.1), std::domain_error);
}

TEST_CASE("received power closed form matches quadrature") {
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    double p = rng.uniform(0.1, 5.0);
    double w = rng.uniform(0.01, 0.5);
    double r_m = rng.uniform(1e-4, 0.05);
    double closed = received_power_onaxis(p, r_m, w);
    double quad = quad_power(p, w, r_m);
    CHECK(std::abs(closed - quad) <= 1e-9 * std::max(closed, 1e-300));
  }
}

TEST_CASE("received power limits and table values") {
  CHECK(received_power_onaxis(1.0, 0.0, 0.1) == 0.0);
  CHECK(received_power_onaxis(2.5, 100.0, 0.1) == doctest::Approx(2.5).epsilon(1e-15));
  PhysicalConstants c;
  CHECK(c.pd_area() == doctest::Approx(3.75e-6).epsilon(1e-15));
  CHECK(c.pd_radius() == doctest::Approx(1.0925484305920792e-3).epsilon(1e-12));
  double w_d = beam_radius(5e-6, 3.0, rayleigh_distance(5e-6, 850e-9));
  CHECK(received_power_onaxis(1.0, c.pd_radius(), w_d) ==
        doctest::Approx(9.058392040284247e-5).epsilon(1e-12));
  CHECK(received_power_onaxis(1.0, c.pd_radius(), 0.16235) ==
        doctest::Approx(9.06e-5).epsilon(1e-3));
}

TEST_CASE("noise variance") {
  PhysicalConstants c;
  CHECK(noise_variance(c) == doctest::Approx(9.99045e-14).epsilon(1e-12));
  c.nsd *= 2.0;
  CHECK(noise_variance(c) == doctest::Approx(4.0 * 9.99045e-14).epsilon(1e-12));
  c.nsd = 4.47e-12;
  c.bandwidth = 0.0;
  CHECK(noise_variance(c) == 0.0);
}

TEST_CASE("channel gain on-axis reduces to the captured-power form") {
  PhysicalConstants c;
  Vec3 ap(2.0, 2.0, 3.0), user(2.0, 2.0, 0.85);
  double g = channel_gain(ap, user, Vec3(0, 0, 1), c);
  double d_ra = rayleigh_distance(c.beam_waist, c.wavelength);
  double w_d = beam_radius(c.beam_waist, 2.15, d_ra);
  double expected = c.responsivity * received_power_onaxis(1.0, c.pd_radius(), w_d);
  CHECK(g == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("channel gain inside the steering cone uses the slant distance") {
  PhysicalConstants c;
  Vec3 ap(1.0, 1.0, 3.0), user(1.9, 1.3, 0.85);
  Vec3 n(0, 0, 1);
  Vec3 v = ap - user;
  double dist = v.norm();
  REQUIRE(std::hypot(v.x(), v.y()) <= std::tan(c.steering_cone_half_angle) * v.z());
  double d_ra = rayleigh_distance(c.beam_waist, c.wavelength);
  double w_d = beam_radius(c.beam_waist, dist, d_ra);
  double expected = c.responsivity *
                    received_power_onaxis(1.0, c.pd_radius(), w_d) *
                    (v.z() / dist);
  CHECK(channel_gain(ap, user, n, c) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("channel gain beyond the cone clamps the axis and decays") {
  PhysicalConstants c;
  Vec3 ap(0.0, 0.0, 3.0);
  Vec3 user(2.0, 0.0, 0.85);  // rh = 2.0 > tan(40 deg) * 2.15
  Vec3 n(0, 0, 1);
  Vec3 v = ap - user;
  double dz = v.z(), rh = std::hypot(v.x(), v.y());
  double reach = std::tan(c.steering_cone_half_angle) * dz;
  REQUIRE(rh > reach);
  Vec3 edge(-v.x() / rh * reach, -v.y() / rh * reach, -dz);
  Vec3 bdir = edge.normalized();
  Vec3 w = user - ap;
  double z = w.dot(bdir);
  double r_perp = (w - z * bdir).norm();
  double d_ra = rayleigh_distance(c.beam_waist, c.wavelength);
  double w_d = beam_radius(c.beam_waist, z, d_ra);
  double cospsi = n.dot(v) / v.norm();
  double expected = c.responsivity *
                    (1.0 - std::exp(-2.0 * std::pow(c.pd_radius() / w_d, 2))) *
                    std::exp(-2.0 * r_perp * r_perp / (w_d * w_d)) * cospsi;
  CHECK(channel_gain(ap, user, n, c) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("channel gain decreases with horizontal offset and gates at the FOV") {
  PhysicalConstants c;
  Vec3 ap(0.0, 0.0, 3.0);
  Vec3 n(0, 0, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (double off : {0.0, 0.4, 0.8, 1.2, 1.6, 2.0}) {
    double g = channel_gain(ap, Vec3(off, 0.0, 0.85), n, c);
    CHECK(g > 0.0);
    CHECK(g < prev);
    prev = g;
  }
  // straight-up photodiode: 45 deg FOV cuts off past rh = dz
  CHECK(channel_gain(ap, Vec3(2.4, 0.0, 0.85), n, c) == 0.0);
  CHECK(channel_gain(ap, Vec3(0.0, 0.0, 0.85), Vec3(1, 0, 0), c) == 0.0);
  CHECK_THROWS_AS(channel_gain(Vec3(0, 0, 1), Vec3(0, 0, 1), n, c),
                  std::domain_error);
}

TEST_CASE("build_channel is pure and bounded") {
  Scenario s = fixture_scenario(6, 42);
  ChannelMatrix a = build_channel(s);
  ChannelMatrix b = build_channel(fixture_scenario(6, 42));
  CHECK((a.gains - b.gains).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.selected_pd == b.selected_pd);
  CHECK(a.noise_variance == doctest::Approx(9.99045e-14).epsilon(1e-12));
  CHECK(a.gains.minCoeff() >= 0.0);
  CHECK(a.gains.maxCoeff() <= s.constants.responsivity);
  CHECK(a.gains.allFinite());
}

TEST_CASE("build_channel puts the largest gain at the nearest AP") {
  Scenario s;
  s.ap_positions = default_ap_grid(s.room);
  PhysicalConstants c;
  s.user_positions = {Vec3(1.25, 1.25, 0.85)};  // directly under AP 0
  s.pd_orientations = {default_pd_normals(c)};
  s.demands = {1.0};
  s.constants = c;
  ChannelMatrix ch = build_channel(s);
  int argmax = 0;
  ch.gains.row(0).maxCoeff(&argmax);
  CHECK(argmax == 0);
  for (int l = 1; l < 4; ++l) CHECK(ch.gains(0, 0) > ch.gains(0, l));
}

TEST_CASE("build_channel flags a disconnected user") {
  Scenario s;
  s.ap_positions = default_ap_grid(s.room);
  s.user_positions = {Vec3(2.5, 2.5, 0.85)};
  s.pd_orientations = {{Vec3(0, 0, -1), Vec3(0, 0, -1), Vec3(0, 0, -1),
                        Vec3(0, 0, -1)}};
  s.demands = {1.0};
  CHECK_THROWS_AS(build_channel(s), DisconnectedUserError);
  try {
    build_channel(s);
  } catch (const DisconnectedUserError& e) {
    CHECK(e.user == 0);
  }
}

TEST_CASE("scenario validation rejects bad inputs") {
  Scenario s = fixture_scenario(3, 5);
  Scenario bad = s;
  bad.user_positions[0].x() = 99.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = s;
  bad.pd_orientations[1][2] *= 2.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = s;
  bad.demands[2] = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = s;
  bad.constants.fov_half_angle = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("random_scenario is seeded and in range") {
  Scenario a = random_scenario(6, 9, PhysicalConstants{});
  Scenario b = random_scenario(6, 9, PhysicalConstants{});
  Scenario c = random_scenario(6, 10, PhysicalConstants{});
  for (int i = 0; i < 6; ++i) {
    CHECK(a.user_positions[i] == b.user_positions[i]);
    CHECK(a.demands[i] == b.demands[i]);
    CHECK(a.user_positions[i].z() == 0.85);
    CHECK(a.user_positions[i].x() >= 0.0);
    CHECK(a.user_positions[i].x() <= 5.0);
    CHECK(a.demands[i] >= 0.5);
    CHECK(a.demands[i] <= 2.0);
  }
  bool same = true;
  for (int i = 0; i < 6; ++i)
    if (a.user_positions[i] != c.user_positions[i]) same = false;
  CHECK_FALSE(same);
  CHECK(a.ap_positions.size() == 4);
  CHECK(a.ap_positions[0] == Vec3(1.25, 1.25, 3.0));
}
