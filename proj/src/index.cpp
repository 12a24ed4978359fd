#include "cbir/index.hpp"

#include "cbir/color_features.hpp"
#include "cbir/error.hpp"
#include "cbir/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

namespace cbir {

// --- metrics ----------------------------------------------------------------

bool Metric::is_similarity() const noexcept {
    return kind == MetricKind::Osm || kind == MetricKind::Intersection;
}

std::string Metric::name() const {
    switch (kind) {
    case MetricKind::L1: return "l1";
    case MetricKind::L2: return "l2";
    case MetricKind::Minkowski: return fmt::format("minkowski:{}", p);
    case MetricKind::Histogram: return "histogram";
    case MetricKind::Intersection: return "intersection";
    case MetricKind::Osm: return "osm";
    case MetricKind::Spd: return "spd";
    case MetricKind::Cosine: return "cosine";
    }
    return "unknown";
}

Metric parse_metric(std::string_view text) {
    static constexpr std::pair<std::string_view, MetricKind> simple[] = {
        {"l1", MetricKind::L1},
        {"l2", MetricKind::L2},
        {"histogram", MetricKind::Histogram},
        {"intersection", MetricKind::Intersection},
        {"osm", MetricKind::Osm},
        {"spd", MetricKind::Spd},
        {"cosine", MetricKind::Cosine},
    };
    for (const auto& [name, kind] : simple) {
        if (text == name) {
            return {kind, kind == MetricKind::L1 ? 1.0 : 2.0};
        }
    }
    constexpr std::string_view prefix = "minkowski:";
    if (text.starts_with(prefix)) {
        const std::string_view number = text.substr(prefix.size());
        double p = 0.0;
        const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), p);
        if (ec != std::errc{} || end != number.data() + number.size()) {
            throw Error(ErrorCode::UnknownMetric, "malformed Minkowski order in metric: " + std::string(text));
        }
        if (!(p >= 1.0) || !std::isfinite(p)) {
            throw Error(ErrorCode::InvalidArgument, "Minkowski order must be >= 1");
        }
        return {MetricKind::Minkowski, p};
    }
    throw Error(ErrorCode::UnknownMetric, "unknown metric: " + std::string(text));
}

std::vector<std::string> metric_names() {
    return {"l1", "l2", "minkowski:p", "histogram", "intersection", "osm", "spd", "cosine"};
}

double score(const Metric& metric, const Signature& query, const Signature& candidate, const FeatureLayout& layout) {
    switch (metric.kind) {
    case MetricKind::L1: return minkowski(query.fv, candidate.fv, 1.0);
    case MetricKind::L2: return minkowski(query.fv, candidate.fv, 2.0);
    case MetricKind::Minkowski: return minkowski(query.fv, candidate.fv, metric.p);
    case MetricKind::Cosine: return cosine_disparity(query.fv, candidate.fv);
    case MetricKind::Spd: return stabilized_distance(query.fv, candidate.fv);
    case MetricKind::Osm: return osm(query.fv, candidate.fv, layout).osm;
    case MetricKind::Histogram:
    case MetricKind::Intersection: {
        const BlockRange r = layout.color_histogram_range();
        if (query.raw_fv.size() != layout.total() || candidate.raw_fv.size() != layout.total()) {
            throw Error(ErrorCode::DimensionMismatch, "raw feature vector does not match the layout");
        }
        const std::span<const double> q = r.slice(std::span<const double>(query.raw_fv));
        const std::span<const double> c = r.slice(std::span<const double>(candidate.raw_fv));
        return metric.kind == MetricKind::Histogram ? histogram_distance(q, c) : histogram_intersection(q, c);
    }
    }
    throw Error(ErrorCode::UnknownMetric, "unhandled metric");
}

// --- store ------------------------------------------------------------------

std::vector<double> Normalization::apply(const std::vector<double>& raw) const {
    if (raw.size() != min.size()) {
        throw Error(ErrorCode::DimensionMismatch, "feature vector length does not match normalization");
    }
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double range = max[i] - min[i];
        out[i] = range > 0.0 ? (raw[i] - min[i]) / range : 0.0;
    }
    return out;
}

IndexStore::IndexStore(ExtractionConfig config, Normalization normalization, std::vector<Signature> signatures,
                       std::string root)
    : config_(std::move(config)),
      config_hash_(config_.hash()),
      layout_(config_.layout()),
      normalization_(std::move(normalization)),
      signatures_(std::move(signatures)),
      root_(std::move(root)) {
    const std::size_t length = layout_.total();
    if (normalization_.min.size() != length || normalization_.max.size() != length) {
        throw Error(ErrorCode::DimensionMismatch, "normalization arrays must match the feature length");
    }
    std::sort(signatures_.begin(), signatures_.end(),
              [](const Signature& a, const Signature& b) { return a.image_id < b.image_id; });
    for (std::size_t i = 0; i < signatures_.size(); ++i) {
        const Signature& s = signatures_[i];
        if (i > 0 && signatures_[i - 1].image_id == s.image_id) {
            throw Error(ErrorCode::InvalidArgument, "duplicate image id: " + s.image_id);
        }
        if (s.config_hash != config_hash_) {
            throw Error(ErrorCode::ConfigMismatch, "signature " + s.image_id + " was extracted with another config");
        }
        if (s.raw_fv.size() != length || s.fv.size() != length) {
            throw Error(ErrorCode::DimensionMismatch, "signature " + s.image_id + " has the wrong length");
        }
    }
}

const Signature* IndexStore::find(std::string_view image_id) const {
    const auto it = std::lower_bound(signatures_.begin(), signatures_.end(), image_id,
                                     [](const Signature& s, std::string_view id) { return s.image_id < id; });
    return it != signatures_.end() && it->image_id == image_id ? &*it : nullptr;
}

const Signature& IndexStore::at(std::string_view image_id) const {
    const Signature* s = find(image_id);
    if (s == nullptr) {
        throw Error(ErrorCode::UnknownImage, "image not in index: " + std::string(image_id));
    }
    return *s;
}

Signature IndexStore::normalize(Signature sig) const {
    if (sig.config_hash != config_hash_) {
        throw Error(ErrorCode::ConfigMismatch, "query was extracted with a different config");
    }
    sig.fv = normalization_.apply(sig.raw_fv);
    return sig;
}

Normalization compute_normalization(const std::vector<Signature>& signatures, std::size_t length) {
    Normalization n;
    if (signatures.empty()) {
        n.min.assign(length, 0.0);
        n.max.assign(length, 0.0);
        return n;
    }
    n.min = signatures.front().raw_fv;
    n.max = signatures.front().raw_fv;
    for (const Signature& s : signatures) {
        if (s.raw_fv.size() != length) {
            throw Error(ErrorCode::DimensionMismatch, "signature length differs from the layout");
        }
        for (std::size_t i = 0; i < length; ++i) {
            n.min[i] = std::min(n.min[i], s.raw_fv[i]);
            n.max[i] = std::max(n.max[i], s.raw_fv[i]);
        }
    }
    return n;
}

namespace {

IndexStore assemble(std::vector<Signature> signatures, const ExtractionConfig& cfg, std::string root) {
    const std::size_t length = cfg.layout().total();
    Normalization norm = compute_normalization(signatures, length);
    for (Signature& s : signatures) {
        s.fv = norm.apply(s.raw_fv);
    }
    return IndexStore(cfg, std::move(norm), std::move(signatures), std::move(root));
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = next++; i < count; i = next++) {
                        fn(i);
                    }
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

bool has_image_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png" || ext == ".bmp";
}

} // namespace

IndexStore build_index(std::vector<NamedImage> images, const ExtractionConfig& cfg, const BuildOptions& options) {
    cfg.validate();
    if (images.empty()) {
        throw Error(ErrorCode::EmptyInput, "no images to index");
    }
    std::sort(images.begin(), images.end(), [](const NamedImage& a, const NamedImage& b) { return a.id < b.id; });
    std::vector<Signature> signatures(images.size());
    parallel_for(images.size(), options.threads,
                 [&](std::size_t i) { signatures[i] = extract_signature(images[i].image, cfg, images[i].id); });
    return assemble(std::move(signatures), cfg, {});
}

BuildResult build_index(const std::filesystem::path& image_dir, const ExtractionConfig& cfg,
                        const BuildOptions& options) {
    cfg.validate();
    std::error_code ec;
    if (!std::filesystem::is_directory(image_dir, ec)) {
        throw Error(ErrorCode::FileNotFound, "not a directory: " + image_dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (auto it = std::filesystem::recursive_directory_iterator(image_dir, ec);
         !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
        if (it->is_regular_file() && has_image_extension(it->path())) {
            files.push_back(it->path());
        }
    }
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot scan " + image_dir.string() + ": " + ec.message());
    }
    std::vector<std::string> ids(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        ids[i] = files[i].lexically_relative(image_dir).generic_string();
    }
    std::vector<std::size_t> order(files.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });

    std::vector<std::optional<Signature>> extracted(files.size());
    std::vector<std::optional<LoadFailure>> failed(files.size());
    parallel_for(order.size(), options.threads, [&](std::size_t slot) {
        const std::size_t i = order[slot];
        try {
            extracted[slot] = extract_signature(load_image(files[i]), cfg, ids[i]);
        } catch (const Error& e) {
            failed[slot] = LoadFailure{ids[i], e.what()};
        }
    });

    BuildResult result;
    std::vector<Signature> signatures;
    for (std::size_t slot = 0; slot < order.size(); ++slot) {
        if (extracted[slot]) {
            signatures.push_back(std::move(*extracted[slot]));
        } else if (failed[slot]) {
            result.failures.push_back(std::move(*failed[slot]));
        }
    }
    if (signatures.empty()) {
        throw Error(ErrorCode::EmptyInput, "no loadable images in " + image_dir.string());
    }
    const std::string root = std::filesystem::absolute(image_dir).lexically_normal().generic_string();
    result.store = assemble(std::move(signatures), cfg, root);
    return result;
}

// --- querying ---------------------------------------------------------------

RankedResults query(const IndexStore& store, const Signature& q, std::size_t k, const Metric& metric,
                    const QueryOptions& options) {
    if (store.empty()) {
        throw Error(ErrorCode::EmptyInput, "the index is empty");
    }
    if (k == 0) {
        throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    }
    if (q.config_hash != store.config_hash()) {
        throw Error(ErrorCode::ConfigMismatch, "query config does not match the index");
    }
    if (q.fv.size() != store.layout().total()) {
        throw Error(ErrorCode::DimensionMismatch, "query is not normalized for this index");
    }

    RankedResults out;
    out.metric = metric;
    out.items.reserve(store.size());
    for (const Signature& s : store.signatures()) {
        const double value = score(metric, q, s, store.layout());
        if (options.threshold) {
            const bool keep = metric.is_similarity() ? value >= *options.threshold : value <= *options.threshold;
            if (!keep) {
                continue;
            }
        }
        out.items.push_back({s.image_id, value});
    }
    const bool desc = metric.is_similarity();
    auto better = [desc](const RankedItem& a, const RankedItem& b) {
        if (a.score != b.score) {
            return desc ? a.score > b.score : a.score < b.score;
        }
        return a.image_id < b.image_id;
    };
    const std::size_t keep = std::min(k, out.items.size());
    std::partial_sort(out.items.begin(), out.items.begin() + static_cast<std::ptrdiff_t>(keep), out.items.end(),
                      better);
    out.items.resize(keep);
    return out;
}

RankedResults query(const IndexStore& store, const Image& img, std::size_t k, const Metric& metric,
                    const QueryOptions& options) {
    const Signature sig = store.normalize(extract_signature(img, store.config()));
    return query(store, sig, k, metric, options);
}

RankedResults query_color_proportions(const IndexStore& store,
                                      const std::vector<std::pair<std::string, double>>& proportions, std::size_t k,
                                      const Metric& metric, const QueryOptions& options) {
    if (metric.kind != MetricKind::Histogram && metric.kind != MetricKind::Intersection) {
        throw Error(ErrorCode::InvalidArgument, "color-proportion queries need the histogram or intersection metric");
    }
    const ColorHistogramFeature target = histogram_from_proportions(proportions, store.config().hsv);
    Signature q;
    q.image_id = "color-proportions";
    q.config_hash = store.config_hash();
    q.raw_fv.assign(store.layout().total(), 0.0);
    std::copy(target.bins.begin(), target.bins.end(), q.raw_fv.begin());
    q.fv.assign(store.layout().total(), 0.0);
    return query(store, q, k, metric, options);
}

// --- persistence ------------------------------------------------------------

namespace {

nlohmann::json flags_to_json(const SignatureFlags& f) {
    nlohmann::json out = nlohmann::json::array();
    if (f.shape_absent) {
        out.push_back("shape_absent");
    }
    if (f.texture_absent) {
        out.push_back("texture_absent");
    }
    if (f.tamura_absent) {
        out.push_back("tamura_absent");
    }
    return out;
}

SignatureFlags flags_from_json(const nlohmann::json& j) {
    SignatureFlags f;
    for (const auto& item : j) {
        const auto name = item.get<std::string>();
        if (name == "shape_absent") {
            f.shape_absent = true;
        } else if (name == "texture_absent") {
            f.texture_absent = true;
        } else if (name == "tamura_absent") {
            f.tamura_absent = true;
        } else {
            throw Error(ErrorCode::CorruptIndex, "unknown signature flag: " + name);
        }
    }
    return f;
}

} // namespace

nlohmann::json index_to_json(const IndexStore& store) {
    nlohmann::json sigs = nlohmann::json::array();
    for (const Signature& s : store.signatures()) {
        sigs.push_back({{"id", s.image_id}, {"raw_fv", s.raw_fv}, {"norm_fv", s.fv}, {"flags", flags_to_json(s.flags)}});
    }
    return {
        {"format", "cbir-index"},
        {"version", kIndexFormatVersion},
        {"config", to_json(store.config())},
        {"config_hash", store.config_hash()},
        {"root", store.root()},
        {"feature_length", store.layout().total()},
        {"normalization", {{"min", store.normalization().min}, {"max", store.normalization().max}}},
        {"signatures", sigs},
    };
}

IndexStore index_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version") || !j.at("version").is_number_integer()) {
        throw Error(ErrorCode::CorruptIndex, "index has no format version");
    }
    const int version = j.at("version").get<int>();
    if (version != kIndexFormatVersion) {
        throw Error(ErrorCode::VersionMismatch,
                    fmt::format("index format version {} is not supported (expected {})", version, kIndexFormatVersion));
    }
    if (!j.contains("config_hash") || !j.at("config_hash").is_string()) {
        throw Error(ErrorCode::CorruptIndex, "index header has no config_hash");
    }
    try {
        ExtractionConfig cfg = config_from_json(j.at("config"));
        const auto hash = j.at("config_hash").get<std::string>();
        if (hash != cfg.hash()) {
            throw Error(ErrorCode::ConfigMismatch, "index config_hash does not match its config");
        }
        Normalization norm{j.at("normalization").at("min").get<std::vector<double>>(),
                           j.at("normalization").at("max").get<std::vector<double>>()};
        std::vector<Signature> sigs;
        for (const auto& r : j.at("signatures")) {
            Signature s;
            s.image_id = r.at("id").get<std::string>();
            s.raw_fv = r.at("raw_fv").get<std::vector<double>>();
            s.fv = r.at("norm_fv").get<std::vector<double>>();
            s.flags = flags_from_json(r.at("flags"));
            s.config_hash = hash;
            sigs.push_back(std::move(s));
        }
        return IndexStore(std::move(cfg), std::move(norm), std::move(sigs), j.value("root", std::string{}));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptIndex, std::string("malformed index: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigMismatch) {
            throw;
        }
        throw Error(ErrorCode::CorruptIndex, std::string("malformed index: ") + e.what());
    }
}

void save_index(const IndexStore& store, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoError, "cannot write index: " + path.string());
        }
        out << index_to_json(store).dump() << '\n';
        if (!out) {
            throw Error(ErrorCode::IoError, "failed writing index: " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot move index into place: " + ec.message());
    }
}

IndexStore load_index(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(ErrorCode::FileNotFound, "no such index file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open index: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptIndex, "index is not valid JSON: " + std::string(e.what()));
    }
    return index_from_json(j);
}

} // namespace cbir
