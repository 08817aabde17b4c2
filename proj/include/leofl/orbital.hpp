#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace leofl::orbital {

using Vec3 = std::array<double, 3>;

// Units throughout: kilometers, seconds, radians. Degrees exist only at the
// config/CLI boundary.
inline constexpr double kMuEarth = 398600.4418;          // km^3/s^2
inline constexpr double kEarthRadiusKm = 6371.0;         // spherical Earth
inline constexpr double kEarthRotationRate = 7.2921159e-5;  // rad/s, sidereal
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// One satellite on an ideal circular orbit, parameterized by its plane
/// (inclination, RAAN) and in-plane phase at the simulation epoch t = 0.
struct SatelliteSpec {
  int id = 0;
  double semi_major_axis_km = 0.0;
  double inclination_rad = 0.0;
  double raan_rad = 0.0;
  double initial_phase_rad = 0.0;  // argument of latitude at t = 0
};

/// Fixed site on the rotating Earth. The rotation offset is zero at t = 0,
/// i.e. at the epoch the site's inertial longitude equals its geodetic one.
struct GroundStation {
  double latitude_rad = 0.0;
  double longitude_rad = 0.0;
  double altitude_km = 0.0;
  double min_elevation_rad = 0.0;
};

/// Walker Delta pattern: `planes` equally spaced orbital planes holding
/// total_sats/planes satellites each, with inter-plane phasing factor F.
struct WalkerSpec {
  int total_sats = 0;
  int planes = 0;
  int phasing = 1;
  double inclination_rad = 0.0;
  double altitude_km = 0.0;
  double raan_offset_rad = 0.0;
};

/// One visibility interval of a satellite from the ground station.
struct ContactWindow {
  int satellite_id = 0;
  double rise_s = 0.0;
  double set_s = 0.0;
};

void validate(const SatelliteSpec& spec);
void validate(const GroundStation& gs);
void validate(const WalkerSpec& spec);

/// Circular orbital period from Kepler's third law.
double orbital_period(double semi_major_axis_km);

/// ECI position of a satellite at time t (two-body circular motion, no
/// perturbations).
Vec3 propagate_satellite(const SatelliteSpec& spec, double t);

/// ECI position of a ground station at time t (uniform Earth rotation about
/// the z-axis).
Vec3 propagate_ground_station(const GroundStation& gs, double t);

/// Elevation of the satellite above the station's local horizon, in
/// [-pi/2, pi/2].
double elevation_angle(const Vec3& gs_pos, const Vec3& sat_pos);

/// True iff the satellite is above the station's minimum elevation at t.
bool is_visible(const GroundStation& gs, const SatelliteSpec& sat, double t);

struct WindowSearchParams {
  double coarse_step_s = 10.0;  // scan stride; short passes are recovered by
                                // peak refinement, see contact_windows()
  double refine_tol_s = 0.1;    // bisection tolerance on rise/set times
};

/// All visibility intervals of `sat` within [t0, t1], sorted and disjoint.
/// Intervals that straddle t0 or t1 are clipped to the horizon. Rise/set
/// times are refined by bisection to `refine_tol_s`; between coarse samples
/// the elevation peak is located as well, so passes shorter than the coarse
/// stride are not missed.
std::vector<ContactWindow> contact_windows(const GroundStation& gs,
                                           const SatelliteSpec& sat,
                                           double t0, double t1,
                                           const WindowSearchParams& params = {});

/// Expands a Walker Delta spec into satellite specs with ids
/// id_base, id_base+1, ...
std::vector<SatelliteSpec> generate_walker(const WalkerSpec& spec, int id_base = 0);

}  // namespace leofl::orbital
