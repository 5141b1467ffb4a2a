#include "siamq/quality.hpp"

#include <algorithm>

#include "siamq/errors.hpp"

namespace siamq {

double artifact_fraction(const std::vector<bool>& mask) {
    if (mask.empty()) throw DataError("empty artifact mask");
    const auto n_true = static_cast<double>(std::count(mask.begin(), mask.end(), true));
    return n_true / static_cast<double>(mask.size());
}

QualityClass classify_binary(double y, double good_threshold) {
    if (good_threshold < 0.0 || good_threshold > 1.0)
        throw DataError("good_threshold outside [0,1]");
    return y <= good_threshold ? QualityClass::Good : QualityClass::Bad;
}

}  // namespace siamq
