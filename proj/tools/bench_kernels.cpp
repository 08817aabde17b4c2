// Compares the OpenMP kernels against their serial references on
// synthetic data: wall time, speedup and result agreement.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "leofl/dataset.hpp"
#include "leofl/kernels.hpp"
#include "leofl/orbital.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
double best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, double max_diff) {
  std::printf("%-18s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   max|diff| %.3g\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms, max_diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run serially\n");
#endif

  const std::int64_t n = 8192;
  const std::int64_t m = 784;
  const std::int32_t classes = 10;
  const auto data = leofl::learn::synth_dataset(classes, n / classes, m, 7);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 0.05);
  std::vector<double> params(static_cast<std::size_t>((m + 1) * classes));
  for (auto& p : params) p = gauss(rng);

  std::vector<std::int32_t> idx(static_cast<std::size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), 0);

  // --- evaluation -----------------------------------------------------
  leofl::kernels::EvalResult es{}, ep{};
  const double eval_serial = best_of(3, [&] {
    es = leofl::kernels::serial::softmax_eval(params.data(), data.features.data(),
                                              data.labels.data(), data.size(), m,
                                              classes);
  });
  const double eval_parallel = best_of(3, [&] {
    ep = leofl::kernels::softmax_eval(params.data(), data.features.data(),
                                      data.labels.data(), data.size(), m, classes);
  });
  report("softmax_eval", eval_serial, eval_parallel,
         std::max(std::abs(es.accuracy - ep.accuracy),
                  std::abs(es.mean_loss - ep.mean_loss)));

  // --- batch gradient ---------------------------------------------------
  std::vector<double> gs(params.size()), gp(params.size());
  double ls = 0.0, lp = 0.0;
  const double grad_serial = best_of(3, [&] {
    ls = leofl::kernels::serial::softmax_grad(params.data(), data.features.data(),
                                              data.labels.data(), idx, m, classes,
                                              gs.data());
  });
  const double grad_parallel = best_of(3, [&] {
    lp = leofl::kernels::softmax_grad(params.data(), data.features.data(),
                                      data.labels.data(), idx, m, classes,
                                      gp.data());
  });
  double grad_diff = std::abs(ls - lp);
  for (std::size_t j = 0; j < gs.size(); ++j)
    grad_diff = std::max(grad_diff, std::abs(gs[j] - gp[j]));
  report("softmax_grad", grad_serial, grad_parallel, grad_diff);

  // --- elevation sampling ------------------------------------------------
  const leofl::orbital::GroundStation gs_site{
      leofl::orbital::deg_to_rad(53.07), leofl::orbital::deg_to_rad(8.80), 0.0,
      leofl::orbital::deg_to_rad(10.0)};
  const leofl::orbital::SatelliteSpec sat{
      0, leofl::orbital::kEarthRadiusKm + 500.0,
      leofl::orbital::deg_to_rad(80.0), 0.0, 0.0};
  const std::int64_t samples = 2'000'000;
  std::vector<double> elev_serial(static_cast<std::size_t>(samples));
  std::vector<double> elev_parallel(static_cast<std::size_t>(samples));
  const double scan_serial = best_of(3, [&] {
    for (std::int64_t i = 0; i < samples; ++i) {
      const double t = 0.1 * static_cast<double>(i);
      elev_serial[static_cast<std::size_t>(i)] = leofl::orbital::elevation_angle(
          leofl::orbital::propagate_ground_station(gs_site, t),
          leofl::orbital::propagate_satellite(sat, t));
    }
  });
  const double scan_parallel = best_of(3, [&] {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < samples; ++i) {
      const double t = 0.1 * static_cast<double>(i);
      elev_parallel[static_cast<std::size_t>(i)] = leofl::orbital::elevation_angle(
          leofl::orbital::propagate_ground_station(gs_site, t),
          leofl::orbital::propagate_satellite(sat, t));
    }
  });
  double scan_diff = 0.0;
  for (std::int64_t i = 0; i < samples; ++i)
    scan_diff = std::max(scan_diff, std::abs(elev_serial[static_cast<std::size_t>(i)] -
                                             elev_parallel[static_cast<std::size_t>(i)]));
  report("elevation_scan", scan_serial, scan_parallel, scan_diff);

  return 0;
}
