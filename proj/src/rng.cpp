#include "linproxy/rng.hpp"

#include <cmath>
#include <numbers>

namespace linproxy::rng {

double Rng::next_normal(double mean, double sd) {
    // u1 in (0, 1] so the log is finite.
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace linproxy::rng
