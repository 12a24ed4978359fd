#pragma once

#include "cbir/config.hpp"
#include "cbir/signature.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cbir {

// --- metrics over signatures ------------------------------------------------

enum class MetricKind { L1, L2, Minkowski, Histogram, Intersection, Osm, Spd, Cosine };

struct Metric {
    MetricKind kind = MetricKind::L2;
    double p = 2.0; ///< Minkowski order; ignored otherwise

    /// Higher scores mean more similar (OSM, intersection).
    bool is_similarity() const noexcept;
    std::string name() const;

    bool operator==(const Metric&) const = default;
};

/// Accepts l1, l2, minkowski:P, histogram, intersection, osm, spd, cosine.
Metric parse_metric(std::string_view text);
std::vector<std::string> metric_names();

/// Score of `candidate` for `query`. Histogram metrics compare the raw color
/// histogram block; everything else works on the normalized vectors.
double score(const Metric& metric, const Signature& query, const Signature& candidate,
             const FeatureLayout& layout);

// --- store ------------------------------------------------------------------

inline constexpr int kIndexFormatVersion = 1;

struct Normalization {
    std::vector<double> min;
    std::vector<double> max;

    /// (x - min) / (max - min), 0 where the dimension is constant.
    std::vector<double> apply(const std::vector<double>& raw) const;

    bool operator==(const Normalization&) const = default;
};

/// Immutable feature database: signatures sorted by image id plus the corpus
/// normalization they were built with.
class IndexStore {
public:
    IndexStore() = default;
    IndexStore(ExtractionConfig config, Normalization normalization, std::vector<Signature> signatures,
               std::string root = {});

    const ExtractionConfig& config() const noexcept { return config_; }
    const std::string& config_hash() const noexcept { return config_hash_; }
    const FeatureLayout& layout() const noexcept { return layout_; }
    const Normalization& normalization() const noexcept { return normalization_; }
    const std::vector<Signature>& signatures() const noexcept { return signatures_; }
    /// Directory the image ids are relative to (may be empty).
    const std::string& root() const noexcept { return root_; }
    int version() const noexcept { return kIndexFormatVersion; }

    std::size_t size() const noexcept { return signatures_.size(); }
    bool empty() const noexcept { return signatures_.empty(); }

    const Signature* find(std::string_view image_id) const;
    /// Throws UnknownImage.
    const Signature& at(std::string_view image_id) const;

    /// Fills `sig.fv` from `sig.raw_fv`; throws ConfigMismatch for foreign signatures.
    Signature normalize(Signature sig) const;

    bool operator==(const IndexStore&) const = default;

private:
    ExtractionConfig config_;
    std::string config_hash_;
    FeatureLayout layout_;
    Normalization normalization_;
    std::vector<Signature> signatures_;
    std::string root_;
};

struct NamedImage {
    std::string id;
    Image image;
};

struct LoadFailure {
    std::string path;
    std::string message;
};

struct BuildResult {
    IndexStore store;
    std::vector<LoadFailure> failures;
};

struct BuildOptions {
    /// Worker threads for extraction; 0 picks the hardware concurrency.
    unsigned threads = 0;
};

/// Per-dimension min/max over the raw vectors.
Normalization compute_normalization(const std::vector<Signature>& signatures, std::size_t length);

IndexStore build_index(std::vector<NamedImage> images, const ExtractionConfig& cfg, const BuildOptions& options = {});

/// Indexes every .pgm/.ppm/.pnm/.png/.bmp file under `image_dir` (recursive).
/// Image ids are paths relative to `image_dir` with '/' separators. Files that
/// fail to load are reported in BuildResult::failures.
BuildResult build_index(const std::filesystem::path& image_dir, const ExtractionConfig& cfg,
                        const BuildOptions& options = {});

// --- querying ---------------------------------------------------------------

struct RankedItem {
    std::string image_id;
    double score = 0.0;

    bool operator==(const RankedItem&) const = default;
};

struct RankedResults {
    Metric metric;
    std::vector<RankedItem> items;

    bool descending() const noexcept { return metric.is_similarity(); }
};

struct QueryOptions {
    /// Distances above (similarities below) this value are dropped.
    std::optional<double> threshold;
};

/// Exhaustive scan. Returns min(k, size) results, best first, ties broken by
/// ascending image id. `query` must carry a normalized vector for this store.
RankedResults query(const IndexStore& store, const Signature& query, std::size_t k, const Metric& metric,
                    const QueryOptions& options = {});

/// Extracts and normalizes `img` with the store's config, then queries.
RankedResults query(const IndexStore& store, const Image& img, std::size_t k, const Metric& metric,
                    const QueryOptions& options = {});

/// Query by target color proportions such as {"blue", 0.51}. Only the
/// histogram and intersection metrics apply; others throw InvalidArgument.
RankedResults query_color_proportions(const IndexStore& store,
                                      const std::vector<std::pair<std::string, double>>& proportions, std::size_t k,
                                      const Metric& metric, const QueryOptions& options = {});

// --- persistence ------------------------------------------------------------

void save_index(const IndexStore& store, const std::filesystem::path& path);
IndexStore load_index(const std::filesystem::path& path);

nlohmann::json index_to_json(const IndexStore& store);
IndexStore index_from_json(const nlohmann::json& j);

} // namespace cbir
