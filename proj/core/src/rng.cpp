#include "f2f/rng.hpp"

#include <cmath>
#include <numbers>

namespace f2f {

double Rng::normal() {
    // 1 - u lies in (0, 1], keeping the log finite
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace f2f
