#pragma once

#include <optional>
#include <string>

#include "siamq/model.hpp"

namespace siamq {

// "SQCK v1": magic 'S''Q''C''K', u16 LE version = 1, u32 LE config blob
// length + UTF-8 key=value lines, u32 LE tensor count, then per tensor:
// u16 LE name length + name, u8 ndim, u32 LE dims, float32 LE data.
// Round trips are bit-exact.
void save_checkpoint(const ModelBundle& bundle, const std::string& path);

// Loads a checkpoint; if `expected` is given, the stored config must match it
// exactly or the load fails with DataError("incompatible checkpoint ...").
ModelBundle load_checkpoint(const std::string& path,
                            const std::optional<EncoderConfig>& expected = std::nullopt);

}  // namespace siamq
