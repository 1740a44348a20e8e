// Timings for the OpenMP kernels against their serial references:
// the blocked compensated reduction, the power-law functionals built on
// it, and the Monte Carlo trial loop. Run with different OMP_NUM_THREADS
// to see the scaling; results are bit-identical either way.

#include "deteq/reduce.hpp"
#include "deteq/simulator.hpp"
#include "deteq/spectral_model.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>

namespace {

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

void bench_reduction() {
    const std::size_t n = 50'000'000;
    auto f = [](std::size_t k) {
        const double x = static_cast<double>(k);
        return std::pow(x, -1.5) / (std::pow(x, -1.5) + 1e-6);
    };

    auto t0 = clock_type::now();
    const double serial = deteq::reduce::sum_serial(n, f);
    const double t_serial = ms_since(t0);

    t0 = clock_type::now();
    const double blocked = deteq::reduce::sum_blocked(n, f);
    const double t_blocked = ms_since(t0);

    std::printf("reduction   n=%zu  serial %.1f ms  blocked %.1f ms  (threads %d)\n", n,
                t_serial, t_blocked, omp_get_max_threads());
    std::printf("            serial %.17g  blocked %.17g\n", serial, blocked);
}

void bench_functionals() {
    const auto model = deteq::SpectralModel::power_law(1.5, 0.4, 0.01);
    const int reps = 200;
    auto t0 = clock_type::now();
    double acc = 0.0;
    for (int i = 0; i < reps; ++i) acc += model.degrees_of_freedom(1e-4 + i * 1e-7).df1;
    std::printf("df1 x%d     %.1f ms  (acc %.6g)\n", reps, ms_since(t0), acc);
}

void bench_trials() {
    std::vector<double> eig(400), coef(400);
    for (std::size_t k = 1; k <= eig.size(); ++k) {
        eig[k - 1] = 1.0 / static_cast<double>(k);
        coef[k - 1] = std::pow(static_cast<double>(k), -1.5);
    }
    const auto model = deteq::SpectralModel::finite(eig, coef, 4e-4);
    deteq::SimConfig cfg;
    cfg.n = 200;
    cfg.d_or_p = 400;
    cfg.lambda = 0.005;
    cfg.trials = 16;
    cfg.seed = 7;

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    auto t0 = clock_type::now();
    const auto st_serial = deteq::simulate_linear(model, cfg);
    const double t_serial = ms_since(t0);

    omp_set_num_threads(saved);
    t0 = clock_type::now();
    const auto st_par = deteq::simulate_linear(model, cfg);
    const double t_par = ms_since(t0);

    std::printf("mc trials   serial %.1f ms  parallel(%d) %.1f ms\n", t_serial, saved, t_par);
    std::printf("            risk %.17g / %.17g (must match bitwise)\n",
                st_serial.risk_total.mean, st_par.risk_total.mean);
}

} // namespace

int main() {
    bench_reduction();
    bench_functionals();
    bench_trials();
    return 0;
}
