#ifndef DETEQ_REDUCE_HPP
#define DETEQ_REDUCE_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace deteq {

/// Neumaier variant of compensated summation. Long decaying sums lose
/// digits under naive accumulation; this keeps the identity checks in
/// the tests at the 1e-10 level and below.
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if ((sum >= 0 ? sum : -sum) >= (x >= 0 ? x : -x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    double value() const { return sum + comp; }
};

namespace reduce {

/// Fixed block length for the parallel kernels. The decomposition into
/// blocks never depends on the thread count, so the result is
/// bit-identical under any OpenMP schedule.
inline constexpr std::size_t kBlock = 8192;

/// Serial reference: one compensated pass over f(1), ..., f(n).
/// Kept alongside the parallel kernel for testing and benchmarking.
template <typename F>
double sum_serial(std::size_t n, F&& f) {
    NeumaierSum acc;
    for (std::size_t k = 1; k <= n; ++k) acc.add(f(k));
    return acc.value();
}

/// OpenMP kernel: per-block compensated partial sums computed in
/// parallel, then combined in block order. Deterministic: the value is
/// a function of (n, f) only, not of the number of threads.
template <typename F>
double sum_blocked(std::size_t n, F&& f) {
    if (n == 0) return 0.0;
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks);
    const std::int64_t nb = static_cast<std::int64_t>(nblocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nb; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock + 1;
        const std::size_t hi = lo + kBlock - 1 < n ? lo + kBlock - 1 : n;
        NeumaierSum acc;
        for (std::size_t k = lo; k <= hi; ++k) acc.add(f(k));
        partial[static_cast<std::size_t>(b)] = acc.value();
    }
    NeumaierSum acc;
    for (double v : partial) acc.add(v);
    return acc.value();
}

/// Compensated sum of an array in index order.
double sum_ordered(const std::vector<double>& xs);

/// Mean and standard error (sample sd / sqrt(count)) of an array,
/// reduced in index order. count == 1 yields se = 0.
struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
};
MeanSE mean_se(const std::vector<double>& xs);

} // namespace reduce
} // namespace deteq

#endif
