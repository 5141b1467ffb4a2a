#pragma once

#include <vector>

namespace siamq {

enum class QualityClass { Good, Bad };

// Fraction of artifact-corrupted samples, y in [0,1].
double artifact_fraction(const std::vector<bool>& mask);

// Good iff y <= good_threshold (boundary inclusive on the Good side).
QualityClass classify_binary(double y, double good_threshold);

}  // namespace siamq
