#pragma once

#include "cbir/config.hpp"
#include "cbir/image.hpp"

#include <string>
#include <vector>

namespace cbir {

/// Set when a descriptor could not be computed; its block is all zeros.
struct SignatureFlags {
    bool shape_absent = false;
    bool texture_absent = false;
    bool tamura_absent = false;

    bool operator==(const SignatureFlags&) const = default;
};

struct Signature {
    std::string image_id;
    std::vector<double> raw_fv;
    /// Corpus-normalized vector; empty until normalized against a store.
    std::vector<double> fv;
    std::string config_hash;
    SignatureFlags flags;

    bool operator==(const Signature&) const = default;
};

/// Deterministic color | texture | shape feature vector for one image. Gray
/// images are replicated to RGB for the color block. Descriptors that cannot
/// be computed (no segmentable shape, image too small for texture windows)
/// leave a zero block and set the matching flag instead of failing.
Signature extract_signature(const Image& img, const ExtractionConfig& cfg, std::string image_id = {});

} // namespace cbir
