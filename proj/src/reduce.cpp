#include "deteq/reduce.hpp"

#include <cmath>

namespace deteq {
namespace reduce {

double sum_ordered(const std::vector<double>& xs) {
    NeumaierSum acc;
    for (double v : xs) acc.add(v);
    return acc.value();
}

MeanSE mean_se(const std::vector<double>& xs) {
    MeanSE out;
    const std::size_t n = xs.size();
    if (n == 0) return out;
    out.mean = sum_ordered(xs) / static_cast<double>(n);
    if (n == 1) return out;
    NeumaierSum sq;
    for (double v : xs) {
        const double d = v - out.mean;
        sq.add(d * d);
    }
    const double var = sq.value() / static_cast<double>(n - 1);
    out.se = std::sqrt(var / static_cast<double>(n));
    return out;
}

} // namespace reduce
} // namespace deteq
