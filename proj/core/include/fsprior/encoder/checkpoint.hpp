#pragma once

#include <filesystem>

#include "fsprior/encoder/encoder.hpp"
#include "fsprior/encoder/tensor.hpp"

namespace fsprior::encoder {

// Checkpoints use the QGN1 container: the header is the architecture
// descriptor JSON and the blob is the parameter vector in declaration order.

void save_encoder(const std::filesystem::path& path, const EncoderParams& params);

/// Throws IoError when the file is missing, malformed, or its blob length
/// disagrees with the architecture.
EncoderParams load_encoder(const std::filesystem::path& path);

/// Feature-map dump: header {"kind":"tensor","shape":[h,w,c]}.
void save_tensor(const std::filesystem::path& path, const FeatureMap& t);
FeatureMap load_tensor(const std::filesystem::path& path);

}  // namespace fsprior::encoder
