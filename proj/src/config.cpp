#include "cbir/config.hpp"

#include "cbir/error.hpp"
#include "cbir/shape_features.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <set>

namespace cbir {

namespace {

// Bump whenever a feature formula changes, so stale indexes stop matching.
constexpr int kFeatureRevision = 1;

std::string sha256_hex(const std::string& text) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0F]);
    }
    return out;
}

} // namespace

FeatureLayout ExtractionConfig::layout() const {
    FeatureLayout l;
    l.color_histogram = static_cast<std::size_t>(hsv.size());
    l.color_moments = 9;
    l.glcm = 5;
    l.tamura = tamura ? 3 : 0;
    l.hu = 7;
    l.fourier = static_cast<std::size_t>(fourier_harmonics);
    return l;
}

void ExtractionConfig::validate() const {
    if (hsv.hue < 1 || hsv.saturation < 1 || hsv.value < 1) {
        throw Error(ErrorCode::InvalidArgument, "hsv grid dimensions must be >= 1");
    }
    if (glcm_levels < 2 || glcm_levels > 256) {
        throw Error(ErrorCode::InvalidArgument, "glcm_levels must be in [2, 256]");
    }
    if (glcm_offsets.empty()) {
        throw Error(ErrorCode::InvalidArgument, "at least one GLCM offset is required");
    }
    for (const Offset& o : glcm_offsets) {
        if (o.dx == 0 && o.dy == 0) {
            throw Error(ErrorCode::InvalidArgument, "GLCM offset (0, 0) is not allowed");
        }
    }
    if (fourier_harmonics < 2 || fourier_harmonics >= kBoundarySamples / 2) {
        throw Error(ErrorCode::InvalidArgument, "fourier_harmonics must be in [2, 63]");
    }
}

std::string ExtractionConfig::hash() const {
    nlohmann::json j = to_json(*this);
    j["_revision"] = kFeatureRevision;
    j["_tamura_threshold"] = kTamuraGradientThreshold;
    j["_tamura_direction_bins"] = kTamuraDirectionBins;
    j["_tamura_max_scale"] = kTamuraMaxScale;
    j["_boundary_samples"] = kBoundarySamples;
    return sha256_hex(j.dump()).substr(0, 16);
}

nlohmann::json to_json(const ExtractionConfig& cfg) {
    nlohmann::json offsets = nlohmann::json::array();
    for (const Offset& o : cfg.glcm_offsets) {
        offsets.push_back({o.dx, o.dy});
    }
    return {
        {"hsv_grid", {cfg.hsv.hue, cfg.hsv.saturation, cfg.hsv.value}},
        {"glcm_levels", cfg.glcm_levels},
        {"glcm_offsets", offsets},
        {"tamura", cfg.tamura},
        {"fourier_harmonics", cfg.fourier_harmonics},
    };
}

ExtractionConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "extraction config must be a JSON object");
    }
    static const std::set<std::string> known = {"hsv_grid", "glcm_levels", "glcm_offsets", "tamura",
                                                "fourier_harmonics"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) {
            throw Error(ErrorCode::InvalidArgument, "unknown extraction config key: " + key);
        }
    }
    ExtractionConfig cfg;
    try {
        if (j.contains("hsv_grid")) {
            const auto& g = j.at("hsv_grid");
            if (!g.is_array() || g.size() != 3) {
                throw Error(ErrorCode::InvalidArgument, "hsv_grid must be [hue, saturation, value]");
            }
            cfg.hsv = {g[0].get<int>(), g[1].get<int>(), g[2].get<int>()};
        }
        if (j.contains("glcm_levels")) {
            cfg.glcm_levels = j.at("glcm_levels").get<int>();
        }
        if (j.contains("glcm_offsets")) {
            cfg.glcm_offsets.clear();
            for (const auto& o : j.at("glcm_offsets")) {
                if (!o.is_array() || o.size() != 2) {
                    throw Error(ErrorCode::InvalidArgument, "each GLCM offset must be [dx, dy]");
                }
                cfg.glcm_offsets.push_back({o[0].get<int>(), o[1].get<int>()});
            }
        }
        if (j.contains("tamura")) {
            cfg.tamura = j.at("tamura").get<bool>();
        }
        if (j.contains("fourier_harmonics")) {
            cfg.fourier_harmonics = j.at("fourier_harmonics").get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed extraction config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExtractionConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::FileNotFound, "cannot open config: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptData, "config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

} // namespace cbir
