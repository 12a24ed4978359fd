#include "cbir/signature.hpp"

#include "cbir/color_features.hpp"
#include "cbir/error.hpp"
#include "cbir/shape_features.hpp"
#include "cbir/texture_features.hpp"

#include <cmath>

namespace cbir {

Signature extract_signature(const Image& img, const ExtractionConfig& cfg, std::string image_id) {
    cfg.validate();
    const FeatureLayout layout = cfg.layout();
    const Image rgb = to_rgb(img);
    const Image gray = to_grayscale(img);

    Signature sig;
    sig.image_id = std::move(image_id);
    sig.config_hash = cfg.hash();
    sig.raw_fv.reserve(layout.total());
    auto& fv = sig.raw_fv;

    const ColorHistogramFeature hist = hsv_histogram(rgb, cfg.hsv);
    fv.insert(fv.end(), hist.bins.begin(), hist.bins.end());
    const auto moments = color_moments(rgb).flatten();
    fv.insert(fv.end(), moments.begin(), moments.end());

    try {
        const auto glcm = glcm_features(gray, cfg.glcm_offsets, cfg.glcm_levels).flatten();
        fv.insert(fv.end(), glcm.begin(), glcm.end());
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ImageTooSmall) {
            throw;
        }
        fv.insert(fv.end(), layout.glcm, 0.0);
        sig.flags.texture_absent = true;
    }

    if (cfg.tamura) {
        try {
            const auto tamura = tamura_features(gray).flatten();
            fv.insert(fv.end(), tamura.begin(), tamura.end());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ImageTooSmall) {
                throw;
            }
            fv.insert(fv.end(), layout.tamura, 0.0);
            sig.flags.tamura_absent = true;
        }
    }

    try {
        const ShapeFeature shape = shape_features(gray, cfg.fourier_harmonics);
        fv.insert(fv.end(), shape.hu.begin(), shape.hu.end());
        fv.insert(fv.end(), shape.fourier.begin(), shape.fourier.end());
    } catch (const Error& e) {
        switch (e.code()) {
        case ErrorCode::NoShape:
        case ErrorCode::BoundaryTooShort:
        case ErrorCode::UndefinedInput:
            fv.insert(fv.end(), layout.hu + layout.fourier, 0.0);
            sig.flags.shape_absent = true;
            break;
        default:
            throw;
        }
    }

    for (double v : fv) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::UndefinedInput, "non-finite feature value for " + sig.image_id);
        }
    }
    return sig;
}

} // namespace cbir
