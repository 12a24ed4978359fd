#pragma once

#include "cbir/color_features.hpp"
#include "cbir/layout.hpp"
#include "cbir/texture_features.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cbir {

/// Everything that determines how an image becomes a feature vector. Two
/// signatures are comparable only if their configs hash identically.
struct ExtractionConfig {
    HsvGrid hsv;
    int glcm_levels = 16;
    std::vector<Offset> glcm_offsets{{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    bool tamura = true;
    int fourier_harmonics = 10;

    FeatureLayout layout() const;

    /// Throws InvalidArgument when a parameter is out of range.
    void validate() const;

    /// Hex digest over the canonical JSON form plus the fixed extraction
    /// constants (Tamura threshold, boundary resampling, ...).
    std::string hash() const;

    bool operator==(const ExtractionConfig&) const = default;
};

nlohmann::json to_json(const ExtractionConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ExtractionConfig config_from_json(const nlohmann::json& j);
ExtractionConfig load_config(const std::filesystem::path& path);

} // namespace cbir
