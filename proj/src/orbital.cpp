#include "leofl/orbital.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace leofl::orbital {

namespace {

bool finite(double x) { return std::isfinite(x); }

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1],
          a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace

void validate(const SatelliteSpec& spec) {
  if (!finite(spec.semi_major_axis_km) || spec.semi_major_axis_km <= kEarthRadiusKm)
    throw std::invalid_argument("satellite " + std::to_string(spec.id) +
                                ": semi-major axis must exceed the Earth radius");
  if (!finite(spec.inclination_rad) || spec.inclination_rad < 0.0 ||
      spec.inclination_rad > kPi)
    throw std::invalid_argument("satellite inclination must lie in [0, pi]");
  if (!finite(spec.raan_rad) || spec.raan_rad < 0.0 || spec.raan_rad >= kTwoPi)
    throw std::invalid_argument("satellite RAAN must lie in [0, 2*pi)");
  if (!finite(spec.initial_phase_rad) || spec.initial_phase_rad < 0.0 ||
      spec.initial_phase_rad >= kTwoPi)
    throw std::invalid_argument("satellite phase must lie in [0, 2*pi)");
}

void validate(const GroundStation& gs) {
  if (!finite(gs.latitude_rad) || std::abs(gs.latitude_rad) > kPi / 2.0)
    throw std::invalid_argument("ground station latitude must lie in [-pi/2, pi/2]");
  if (!finite(gs.longitude_rad))
    throw std::invalid_argument("ground station longitude must be finite");
  if (!finite(gs.altitude_km) || gs.altitude_km < 0.0)
    throw std::invalid_argument("ground station altitude must be non-negative");
  if (!finite(gs.min_elevation_rad) || gs.min_elevation_rad < 0.0 ||
      gs.min_elevation_rad >= kPi / 2.0)
    throw std::invalid_argument("minimum elevation must lie in [0, pi/2)");
}

void validate(const WalkerSpec& spec) {
  if (spec.total_sats <= 0 || spec.planes <= 0)
    throw std::invalid_argument("Walker spec needs positive satellite and plane counts");
  if (spec.total_sats % spec.planes != 0)
    throw std::invalid_argument("Walker spec: plane count must divide satellite count");
  if (spec.phasing < 0 || spec.phasing >= spec.planes)
    throw std::invalid_argument("Walker spec: phasing F must lie in [0, planes)");
  if (!finite(spec.altitude_km) || spec.altitude_km <= 0.0)
    throw std::invalid_argument("Walker spec: altitude must be positive");
  if (!finite(spec.inclination_rad) || spec.inclination_rad < 0.0 ||
      spec.inclination_rad > kPi)
    throw std::invalid_argument("Walker spec: inclination must lie in [0, pi]");
}

double orbital_period(double semi_major_axis_km) {
  if (!finite(semi_major_axis_km) || semi_major_axis_km <= kEarthRadiusKm)
    throw std::invalid_argument("orbital_period: semi-major axis must exceed the Earth radius");
  const double a3 = semi_major_axis_km * semi_major_axis_km * semi_major_axis_km;
  return kTwoPi * std::sqrt(a3 / kMuEarth);
}

Vec3 propagate_satellite(const SatelliteSpec& spec, double t) {
  const double a = spec.semi_major_axis_km;
  const double mean_motion = std::sqrt(kMuEarth / (a * a * a));
  const double u = spec.initial_phase_rad + mean_motion * t;  // argument of latitude
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(spec.raan_rad), so = std::sin(spec.raan_rad);
  const double ci = std::cos(spec.inclination_rad), si = std::sin(spec.inclination_rad);
  return {a * (co * cu - so * su * ci),
          a * (so * cu + co * su * ci),
          a * (su * si)};
}

Vec3 propagate_ground_station(const GroundStation& gs, double t) {
  const double r = kEarthRadiusKm + gs.altitude_km;
  const double ang = gs.longitude_rad + kEarthRotationRate * t;
  const double cl = std::cos(gs.latitude_rad);
  return {r * cl * std::cos(ang), r * cl * std::sin(ang),
          r * std::sin(gs.latitude_rad)};
}

double elevation_angle(const Vec3& gs_pos, const Vec3& sat_pos) {
  const Vec3 d = {sat_pos[0] - gs_pos[0], sat_pos[1] - gs_pos[1],
                  sat_pos[2] - gs_pos[2]};
  if (norm(gs_pos) == 0.0)
    throw std::invalid_argument("elevation_angle: ground position is the origin");
  if (norm(d) == 0.0)
    throw std::invalid_argument("elevation_angle: coincident positions");
  // atan2 of |g x d| against g.d is stable for near-zenith and near-horizon
  // geometry where acos of the normalized dot product loses digits.
  const double angle = std::atan2(norm(cross(gs_pos, d)), dot(gs_pos, d));
  return kPi / 2.0 - angle;
}

bool is_visible(const GroundStation& gs, const SatelliteSpec& sat, double t) {
  const Vec3 g = propagate_ground_station(gs, t);
  const Vec3 s = propagate_satellite(sat, t);
  return elevation_angle(g, s) >= gs.min_elevation_rad;
}

namespace {

// Elevation margin above the visibility threshold; positive means visible.
double margin(const GroundStation& gs, const SatelliteSpec& sat, double t) {
  return elevation_angle(propagate_ground_station(gs, t),
                         propagate_satellite(sat, t)) -
         gs.min_elevation_rad;
}

// Refine a sign change of the margin inside [lo, hi] down to `tol`.
// `rising` selects which side of the bracket is below threshold.
double bisect_crossing(const GroundStation& gs, const SatelliteSpec& sat,
                       double lo, double hi, bool rising, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const bool vis = margin(gs, sat, mid) >= 0.0;
    if (vis == rising)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Locate the maximum of the margin inside [lo, hi] by golden-section search.
double refine_peak(const GroundStation& gs, const SatelliteSpec& sat,
                   double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = margin(gs, sat, c);
  double fd = margin(gs, sat, d);
  for (int it = 0; it < 60 && b - a > 1e-3; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = margin(gs, sat, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = margin(gs, sat, d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::vector<ContactWindow> contact_windows(const GroundStation& gs,
                                           const SatelliteSpec& sat,
                                           double t0, double t1,
                                           const WindowSearchParams& params) {
  validate(gs);
  validate(sat);
  if (!(t0 < t1))
    throw std::invalid_argument("contact_windows: need t0 < t1");
  if (params.coarse_step_s <= 0.0 || params.refine_tol_s <= 0.0)
    throw std::invalid_argument("contact_windows: search parameters must be positive");

  const double step = params.coarse_step_s;
  const double tol = params.refine_tol_s;
  const std::size_t count =
      static_cast<std::size_t>(std::ceil((t1 - t0) / step)) + 1;

  std::vector<double> times(count);
  std::vector<double> margins(count);
  for (std::size_t i = 0; i < count; ++i)
    times[i] = std::min(t0 + static_cast<double>(i) * step, t1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < static_cast<long long>(count); ++i)
    margins[i] = margin(gs, sat, times[i]);

  std::vector<ContactWindow> windows;
  bool open = margins[0] >= 0.0;
  double rise = t0;
  for (std::size_t i = 1; i < count; ++i) {
    const bool vis = margins[i] >= 0.0;
    if (vis && !open) {
      rise = bisect_crossing(gs, sat, times[i - 1], times[i], true, tol);
      open = true;
    } else if (!vis && open) {
      const double set = bisect_crossing(gs, sat, times[i - 1], times[i], false, tol);
      windows.push_back({sat.id, rise, set});
      open = false;
    } else if (!vis && !open && i + 1 < count) {
      // A pass shorter than the stride leaves no visible sample. Detect it
      // from a sub-threshold local maximum of the elevation margin.
      if (margins[i] > margins[i - 1] && i + 1 < count && margins[i] >= margins[i + 1]) {
        const double peak = refine_peak(gs, sat, times[i - 1], times[i + 1]);
        if (margin(gs, sat, peak) >= 0.0) {
          const double r = bisect_crossing(gs, sat, times[i - 1], peak, true, tol);
          const double s = bisect_crossing(gs, sat, peak, times[i + 1], false, tol);
          windows.push_back({sat.id, r, s});
        }
      }
    }
  }
  if (open) windows.push_back({sat.id, rise, t1});

  for (auto& w : windows) {
    w.rise_s = std::max(w.rise_s, t0);
    w.set_s = std::min(w.set_s, t1);
  }
  std::erase_if(windows, [](const ContactWindow& w) { return !(w.rise_s < w.set_s); });
  std::sort(windows.begin(), windows.end(),
            [](const ContactWindow& a, const ContactWindow& b) {
              return a.rise_s < b.rise_s;
            });
  return windows;
}

std::vector<SatelliteSpec> generate_walker(const WalkerSpec& spec, int id_base) {
  validate(spec);
  const int per_plane = spec.total_sats / spec.planes;
  std::vector<SatelliteSpec> sats;
  sats.reserve(static_cast<std::size_t>(spec.total_sats));
  int id = id_base;
  for (int p = 0; p < spec.planes; ++p) {
    const double raan =
        std::fmod(spec.raan_offset_rad + p * kTwoPi / spec.planes, kTwoPi);
    for (int q = 0; q < per_plane; ++q) {
      // In-plane spacing 2*pi*P/T plus the inter-plane phasing shift F*2*pi/T.
      double phase = q * kTwoPi * spec.planes / spec.total_sats +
                     p * spec.phasing * kTwoPi / spec.total_sats;
      phase = std::fmod(phase, kTwoPi);
      if (phase < 0.0) phase += kTwoPi;
      sats.push_back({id++, kEarthRadiusKm + spec.altitude_km,
                      spec.inclination_rad, raan < 0.0 ? raan + kTwoPi : raan,
                      phase});
    }
  }
  return sats;
}

}  // namespace leofl::orbital
