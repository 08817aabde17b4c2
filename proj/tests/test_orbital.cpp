#include "leofl/orbital.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <stdexcept>

#include <doctest.h>

using namespace leofl::orbital;

namespace {

double norm3(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// Independent brute-force oracle: sample visibility on a fixed grid and read
// the intervals off the boolean sequence. Each crossing lies inside a one-step
// bracket, so the midpoint estimate is accurate to step/2.
std::vector<ContactWindow> dense_windows(const GroundStation& gs,
                                         const SatelliteSpec& sat, double t0,
                                         double t1, double step = 1.0) {
  std::vector<ContactWindow> out;
  bool open = false;
  double rise = t0;
  for (double t = t0; t <= t1; t += step) {
    const bool vis = is_visible(gs, sat, t);
    if (vis && !open) {
      rise = t == t0 ? t0 : t - 0.5 * step;
      open = true;
    } else if (!vis && open) {
      out.push_back({sat.id, rise, t - 0.5 * step});
      open = false;
    }
  }
  if (open) out.push_back({sat.id, rise, t1});
  return out;
}

const GroundStation kNorthPole{kPi / 2.0, 0.0, 0.0, deg_to_rad(10.0)};

}  // namespace

TEST_CASE("orbital period follows Kepler's third law") {
  // mu = 398600.4418 km^3/s^2, direct evaluation
  CHECK(orbital_period(8371.0) == doctest::Approx(7622.141262852221).epsilon(1e-12));
  CHECK(orbital_period(8371.0) / 60.0 == doctest::Approx(127.0).epsilon(0.005));
  CHECK(orbital_period(6871.0) == doctest::Approx(5668.144369061165).epsilon(1e-12));

  SUBCASE("quadrupling the radius scales the period by eight") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> alt(200.0, 40000.0);
    for (int i = 0; i < 25; ++i) {
      const double a = kEarthRadiusKm + alt(rng);
      CHECK(orbital_period(4.0 * a) / orbital_period(a) ==
            doctest::Approx(8.0).epsilon(1e-12));
    }
  }

  SUBCASE("rejects radii at or below the Earth surface") {
    CHECK_THROWS_AS(orbital_period(6371.0), std::invalid_argument);
    CHECK_THROWS_AS(orbital_period(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(orbital_period(std::nan("")), std::invalid_argument);
  }
}

TEST_CASE("satellite propagation geometry") {
  SUBCASE("equatorial reference direction at t = 0") {
    const SatelliteSpec sat{0, 7000.0, 0.0, 0.0, 0.0};
    const Vec3 p = propagate_satellite(sat, 0.0);
    CHECK(p[0] == doctest::Approx(7000.0));
    CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("polar orbit reaches the pole a quarter period in") {
    const double a = 6871.0;
    const SatelliteSpec sat{0, a, kPi / 2.0, 0.0, 0.0};
    const Vec3 p = propagate_satellite(sat, orbital_period(a) / 4.0);
    CHECK(std::abs(p[0]) < 1e-6 * a);
    CHECK(std::abs(p[1]) < 1e-6 * a);
    CHECK(p[2] == doctest::Approx(a).epsilon(1e-9));
  }

  SUBCASE("periodicity and radius conservation") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
      const SatelliteSpec sat{i, kEarthRadiusKm + 300.0 + 30000.0 * u01(rng),
                              kPi * u01(rng), kTwoPi * u01(rng), kTwoPi * u01(rng)};
      const double t = 90000.0 * u01(rng);
      const double period = orbital_period(sat.semi_major_axis_km);
      const Vec3 p1 = propagate_satellite(sat, t);
      const Vec3 p2 = propagate_satellite(sat, t + period);
      CHECK(std::abs(p1[0] - p2[0]) < 1e-6);
      CHECK(std::abs(p1[1] - p2[1]) < 1e-6);
      CHECK(std::abs(p1[2] - p2[2]) < 1e-6);
      CHECK(std::abs(norm3(p1) - sat.semi_major_axis_km) <
            1e-9 * sat.semi_major_axis_km);
    }
  }
}

TEST_CASE("ground station propagation") {
  SUBCASE("the pole is rotation invariant") {
    const Vec3 p = propagate_ground_station(kNorthPole, 12345.6);
    CHECK(std::abs(p[0]) < 1e-9);
    CHECK(std::abs(p[1]) < 1e-9);
    CHECK(p[2] == doctest::Approx(kEarthRadiusKm));
  }

  SUBCASE("equatorial site frame convention at t = 0") {
    const GroundStation gs{0.0, 0.0, 0.0, 0.0};
    const Vec3 p = propagate_ground_station(gs, 0.0);
    CHECK(p[0] == doctest::Approx(kEarthRadiusKm));
    CHECK(std::abs(p[1]) < 1e-9);
    CHECK(std::abs(p[2]) < 1e-9);
  }

  SUBCASE("half a sidereal day moves an equatorial site to the antipode") {
    const GroundStation gs{0.0, 0.0, 0.0, 0.0};
    const double t = kPi / kEarthRotationRate;  // 43082.045 s
    const Vec3 p = propagate_ground_station(gs, t);
    CHECK(p[0] == doctest::Approx(-kEarthRadiusKm).epsilon(1e-9));
    CHECK(std::abs(p[1]) < 1e-5);
  }

  SUBCASE("altitude adds to the site radius") {
    const GroundStation gs{0.7, 1.1, 2.5, 0.0};
    CHECK(norm3(propagate_ground_station(gs, 777.0)) ==
          doctest::Approx(kEarthRadiusKm + 2.5).epsilon(1e-12));
  }
}

TEST_CASE("elevation angle") {
  const Vec3 site{kEarthRadiusKm, 0.0, 0.0};

  SUBCASE("zenith") {
    CHECK(elevation_angle(site, {2.0 * kEarthRadiusKm, 0.0, 0.0}) ==
          doctest::Approx(kPi / 2.0));
  }
  SUBCASE("horizon: offset tangent to the surface") {
    CHECK(elevation_angle(site, {kEarthRadiusKm, 500.0, 0.0}) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("below the horizon is negative") {
    CHECK(elevation_angle(site, {kEarthRadiusKm - 100.0, 500.0, 0.0}) < 0.0);
  }
  SUBCASE("coincident positions are rejected") {
    CHECK_THROWS_AS(elevation_angle(site, site), std::invalid_argument);
    CHECK_THROWS_AS(elevation_angle({0.0, 0.0, 0.0}, site), std::invalid_argument);
  }

  SUBCASE("invariant under a rigid rotation of both positions") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 30; ++i) {
      const Vec3 g{kEarthRadiusKm * (1.0 + 0.1 * u(rng)), kEarthRadiusKm * u(rng),
                   kEarthRadiusKm * u(rng)};
      const Vec3 s{8000.0 * u(rng), 8000.0 * u(rng), 8000.0 + 8000.0 * u(rng)};
      const double ang = kPi * u(rng);
      const double c = std::cos(ang), sn = std::sin(ang);
      const auto rot = [&](const Vec3& v) {
        return Vec3{c * v[0] - sn * v[1], sn * v[0] + c * v[1], v[2]};
      };
      CHECK(elevation_angle(g, s) ==
            doctest::Approx(elevation_angle(rot(g), rot(s))).epsilon(1e-9));
    }
  }
}

TEST_CASE("visibility predicate") {
  const SatelliteSpec overhead{0, kEarthRadiusKm + 500.0, kPi / 2.0, 0.0,
                               kPi / 2.0};  // starts above the pole
  CHECK(is_visible(kNorthPole, overhead, 0.0));

  const SatelliteSpec equatorial{1, kEarthRadiusKm + 500.0, 0.0, 0.0, 0.0};
  CHECK_FALSE(is_visible(kNorthPole, equatorial, 0.0));
}

TEST_CASE("contact windows for a polar orbit over the pole") {
  const double a = kEarthRadiusKm + 500.0;
  // Phase pi puts the first polar overflight at 3T/4; over 24 h that yields
  // floor(86400 / T) = 15 complete passes with none clipped at the horizon.
  const SatelliteSpec sat{0, a, kPi / 2.0, 0.0, kPi};
  const auto ws = contact_windows(kNorthPole, sat, 0.0, 86400.0);
  CHECK(ws.size() == 15);

  const auto oracle = dense_windows(kNorthPole, sat, 0.0, 86400.0);
  REQUIRE(oracle.size() == ws.size());
  const double period = orbital_period(a);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(std::abs(ws[i].rise_s - oracle[i].rise_s) <= 1.0);
    CHECK(std::abs(ws[i].set_s - oracle[i].set_s) <= 1.0);
    if (i > 0)  // one pass per orbital period
      CHECK(ws[i].rise_s - ws[i - 1].rise_s == doctest::Approx(period).epsilon(1e-3));
  }
}

TEST_CASE("equatorial orbit is never visible from the pole") {
  const SatelliteSpec sat{0, kEarthRadiusKm + 500.0, 0.0, 0.0, 0.0};
  CHECK(contact_windows(kNorthPole, sat, 0.0, 86400.0).empty());
}

TEST_CASE("an 80 degree constellation still reaches a polar station every period") {
  // Empirical check: at 500 km and 2000 km an 80-degree-inclined satellite
  // clears a 10-degree mask from the pole once per orbital period.
  for (const double alt : {500.0, 2000.0}) {
    const SatelliteSpec sat{0, kEarthRadiusKm + alt, deg_to_rad(80.0), 0.3, 1.0};
    const auto ws = contact_windows(kNorthPole, sat, 0.0, 86400.0);
    const double period = orbital_period(sat.semi_major_axis_km);
    const auto expected = static_cast<std::size_t>(86400.0 / period);
    CHECK(ws.size() >= expected);
    CHECK(ws.size() <= expected + 1);
    for (std::size_t i = 1; i < ws.size(); ++i)
      CHECK(ws[i].rise_s - ws[i - 1].rise_s == doctest::Approx(period).epsilon(1e-2));
  }
}

TEST_CASE("window search matches the dense sampling oracle on random scenarios") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const GroundStation gs{(u01(rng) - 0.5) * kPi, u01(rng) * kTwoPi, 0.0,
                           deg_to_rad(5.0 + 20.0 * u01(rng))};
    const SatelliteSpec sat{trial, kEarthRadiusKm + 400.0 + 1800.0 * u01(rng),
                            deg_to_rad(50.0 + 48.0 * u01(rng)), kTwoPi * u01(rng),
                            kTwoPi * u01(rng)};
    const double horizon = 86400.0;
    const auto found = contact_windows(gs, sat, 0.0, horizon);
    const auto oracle = dense_windows(gs, sat, 0.0, horizon);

    // Every oracle window longer than 2 s must be matched within 1 s.
    for (const auto& ow : oracle) {
      if (ow.set_s - ow.rise_s <= 2.0) continue;
      bool matched = false;
      for (const auto& fw : found)
        if (std::abs(fw.rise_s - ow.rise_s) <= 1.0 &&
            std::abs(fw.set_s - ow.set_s) <= 1.0)
          matched = true;
      CHECK_MESSAGE(matched, "oracle window [", ow.rise_s, ", ", ow.set_s,
                    "] not found (trial ", trial, ")");
    }
    // And nothing longer than 2 s may be invented.
    for (const auto& fw : found) {
      if (fw.set_s - fw.rise_s <= 2.0) continue;
      bool matched = false;
      for (const auto& ow : oracle)
        if (fw.rise_s <= ow.set_s && ow.rise_s <= fw.set_s) matched = true;
      CHECK_MESSAGE(matched, "spurious window [", fw.rise_s, ", ", fw.set_s, "]");
    }
    // Windows are sorted and disjoint.
    for (std::size_t i = 1; i < found.size(); ++i)
      CHECK(found[i].rise_s > found[i - 1].set_s);
  }
}

TEST_CASE("Walker Delta generator") {
  SUBCASE("five planes, one satellite each") {
    const WalkerSpec w{5, 5, 0, deg_to_rad(80.0), 500.0, 0.0};
    const auto sats = generate_walker(w, 0);
    REQUIRE(sats.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(sats[static_cast<std::size_t>(i)].id == i);
      CHECK(sats[static_cast<std::size_t>(i)].raan_rad ==
            doctest::Approx(i * kTwoPi / 5.0));
      CHECK(sats[static_cast<std::size_t>(i)].initial_phase_rad ==
            doctest::Approx(0.0));
      CHECK(sats[static_cast<std::size_t>(i)].semi_major_axis_km ==
            doctest::Approx(kEarthRadiusKm + 500.0));
    }
  }

  SUBCASE("phasing factor shifts successive planes by F * 2*pi / T") {
    const WalkerSpec w{5, 5, 1, deg_to_rad(80.0), 500.0, 0.0};
    const auto sats = generate_walker(w, 0);
    for (int p = 0; p < 5; ++p)
      CHECK(sats[static_cast<std::size_t>(p)].initial_phase_rad ==
            doctest::Approx(p * kTwoPi / 5.0).epsilon(1e-12));
  }

  SUBCASE("single satellite sits at the offset") {
    const WalkerSpec w{1, 1, 0, 0.5, 800.0, 0.25};
    const auto sats = generate_walker(w, 7);
    REQUIRE(sats.size() == 1);
    CHECK(sats[0].id == 7);
    CHECK(sats[0].raan_rad == doctest::Approx(0.25));
  }

  SUBCASE("two shells offset by 36 degrees") {
    const WalkerSpec a{5, 5, 1, deg_to_rad(80.0), 500.0, 0.0};
    const WalkerSpec b{5, 5, 1, deg_to_rad(80.0), 2000.0, deg_to_rad(36.0)};
    const auto sa = generate_walker(a, 0);
    const auto sb = generate_walker(b, 5);
    double min_diff = kTwoPi;
    for (const auto& s1 : sa)
      for (const auto& s2 : sb) {
        double d = std::abs(s1.raan_rad - s2.raan_rad);
        d = std::min(d, kTwoPi - d);
        min_diff = std::min(min_diff, d);
      }
    CHECK(min_diff == doctest::Approx(deg_to_rad(36.0)).epsilon(1e-9));
  }

  SUBCASE("plane count must divide the satellite count") {
    const WalkerSpec w{5, 3, 0, 1.0, 500.0, 0.0};
    CHECK_THROWS_AS(generate_walker(w, 0), std::invalid_argument);
  }
}
