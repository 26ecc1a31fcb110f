// Compares the OpenMP coverage kernel against the serial reference on one
// grid cell: same seed, results must be identical, wall time reported.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "crr/simulation.hpp"

int main(int argc, char** argv) {
    crr::SimulationConfig cfg;
    cfg.scenario = crr::scenario_by_number(1, 0.3, 1.0);
    cfg.n = 10;
    cfg.replicates = argc > 1 ? std::atoi(argv[1]) : 200;
    cfg.seed = 20240901;

    using clock = std::chrono::steady_clock;

    const auto t0 = clock::now();
    const crr::CoverageResult serial = crr::coverage_study_serial(cfg);
    const auto t1 = clock::now();
    const crr::CoverageResult parallel = crr::coverage_study(cfg);
    const auto t2 = clock::now();

    const double serial_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double parallel_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif

    std::printf("replicates          %d (scenario 1, n=%d, tau=%.2f)\n", cfg.replicates, cfg.n,
                cfg.scenario.tau);
    std::printf("serial reference    %8.1f ms\n", serial_ms);
    std::printf("openmp (%d threads) %8.1f ms   speedup %.2fx\n", threads, parallel_ms,
                serial_ms / parallel_ms);
    std::printf("coverage (r_bar)    %.4f (serial) vs %.4f (parallel)\n",
                serial.r_bar.coverage(), parallel.r_bar.coverage());

    if (!(serial == parallel)) {
        std::printf("MISMATCH: serial and parallel results differ\n");
        return 1;
    }
    std::printf("results identical\n");
    return 0;
}
