// Timed comparison of the OpenMP kernels against their serial twins.
//
//   bench_kernels [n] [p] [order] [reps]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "fgwas/kernels.hpp"
#include "fgwas/model.hpp"
#include "fgwas/parallel.hpp"
#include "fgwas/simgen.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(int reps, F&& fn) {
  fn();  // warm caches
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const std::chrono::duration<double, std::milli> dt = Clock::now() - t0;
  return dt.count() / reps;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-22s %10.4f %10.4f %8.2fx\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  fgwas::SimDesign design = fgwas::SimDesign::desk_default();
  design.n = argc > 1 ? std::atoi(argv[1]) : 300;
  design.p = argc > 2 ? std::atoi(argv[2]) : 500;
  design.truth = fgwas::TruthTable::cubic_default(design.p);
  const int order = argc > 3 ? std::atoi(argv[3]) : 4;
  const int reps = argc > 4 ? std::atoi(argv[4]) : 20;

  const auto sim = fgwas::simulate_dataset(design, 7);
  const auto d = fgwas::kernels::PackedDesign::build(sim.data, order);
  fgwas::kernels::Workspace ws_s, ws_p;
  ws_s.allocate(d);
  ws_p.allocate(d);

  auto state = fgwas::ParameterState::zeros(order, d.q, d.p);
  state.b = sim.truth.b;
  state.c = sim.truth.c;
  state.m = sim.truth.m;
  state.r = sim.truth.r;

  std::printf("n=%d p=%d order=%d total_obs=%ld threads=%d reps=%d\n", d.n, d.p, order, d.total,
              fgwas::max_threads(), reps);
  std::printf("%-22s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

  row("build_gamma_caches",
      time_ms(reps, [&] { fgwas::kernels::build_gamma_caches_serial(d, 0.4, ws_s); }),
      time_ms(reps, [&] { fgwas::kernels::build_gamma_caches(d, 0.4, ws_p); }));
  row("build_block_grams",
      time_ms(reps, [&] { fgwas::kernels::build_block_grams_serial(d, ws_s); }),
      time_ms(reps, [&] { fgwas::kernels::build_block_grams(d, ws_p); }));
  row("refresh_residual",
      time_ms(reps,
              [&] {
                fgwas::kernels::refresh_residual_serial(d, state.m.data(), state.r.data(),
                                                        state.b.data(), state.c.data(), ws_s);
              }),
      time_ms(reps, [&] {
        fgwas::kernels::refresh_residual(d, state.m.data(), state.r.data(), state.b.data(),
                                         state.c.data(), ws_p);
      }));
  row("rebuild_scores", time_ms(reps, [&] { fgwas::kernels::rebuild_scores_serial(d, ws_s); }),
      time_ms(reps, [&] { fgwas::kernels::rebuild_scores(d, ws_p); }));
  row("quad_logdet",
      time_ms(reps, [&] { (void)fgwas::kernels::quad_logdet_serial(d, 0.4, ws_s.e); }),
      time_ms(reps, [&] { (void)fgwas::kernels::quad_logdet(d, 0.4, ws_p.e); }));

  std::vector<double> theta(static_cast<std::size_t>(d.n) * order);
  row("coefficient_totals",
      time_ms(reps,
              [&] {
                fgwas::kernels::coefficient_totals_serial(d, state.m.data(), state.r.data(),
                                                          state.b.data(), state.c.data(),
                                                          theta.data());
              }),
      time_ms(reps, [&] {
        fgwas::kernels::coefficient_totals(d, state.m.data(), state.r.data(), state.b.data(),
                                           state.c.data(), theta.data());
      }));
  return 0;
}
