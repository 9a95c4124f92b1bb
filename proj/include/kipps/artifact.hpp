#pragma once

#include <string>

#include "kipps/gan.hpp"

namespace kipps {

inline constexpr const char* kModelFormatVersion = "kipps-model-1";

// Self-describing single-file container; save -> load round-trips bit-exactly
// and the embedded fingerprint covers every section.
void save_model(const Synthesizer& model, const std::string& path);
Synthesizer load_model(const std::string& path);  // verifies the fingerprint
std::string model_fingerprint(const std::string& path);

}  // namespace kipps
