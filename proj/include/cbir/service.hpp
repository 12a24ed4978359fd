#pragma once

#include "cbir/error.hpp"
#include "cbir/feedback.hpp"
#include "cbir/index.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace cbir {

/// HTTP status plus machine-readable code for an API failure.
struct ApiError {
    int status = 500;
    std::string code;
    std::string message;
};

/// The single (status, code) pair each library error maps to.
ApiError api_error(const Error& e);

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

struct ServiceConfig {
    /// Bearer token required on every /api route except health; empty disables auth.
    std::string token;
    /// Directory image ids resolve against; defaults to the index root.
    std::filesystem::path image_root;
    /// Optional directory served at "/" (the browser UI bundle).
    std::filesystem::path static_dir;
    std::chrono::seconds session_ttl{30 * 60};
    std::size_t default_k = 10;
    std::string default_metric = "l2";
};

struct QueryRequest {
    /// Raw bytes of an uploaded image file.
    std::optional<std::string> image;
    /// Id of an indexed image to use as the query instead of an upload.
    std::optional<std::string> image_id;
    std::optional<std::string> k;
    std::optional<std::string> metric;
};

inline constexpr int kThumbnailSize = 128;

/// Request handlers independent of the transport. `mount` wires them to
/// cpp-httplib routes; tests may call the handlers directly.
class Service {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    explicit Service(ServiceConfig config = {}, Clock clock = [] { return std::chrono::steady_clock::now(); });

    void set_index(std::shared_ptr<const IndexStore> store);
    std::shared_ptr<const IndexStore> index() const;

    /// True when `authorization` satisfies the configured token.
    bool authorized(std::string_view authorization) const;

    ApiResponse handle_health() const;
    ApiResponse handle_query(const QueryRequest& request);
    ApiResponse handle_feedback(const std::string& session_id, const std::string& body);
    ApiResponse handle_image(const std::string& image_id, bool thumbnail) const;

    std::size_t session_count() const;
    /// Drops sessions idle for longer than the TTL; returns how many went.
    std::size_t purge_expired();

    void mount(httplib::Server& server);

private:
    struct Entry {
        /// Serializes feedback rounds; `last_used` is guarded by the table mutex.
        std::mutex mutex;
        FeedbackSession session;
        std::size_t k = 0;
        Metric metric;
        std::chrono::steady_clock::time_point last_used;
    };

    std::shared_ptr<const IndexStore> require_index() const;
    std::shared_ptr<Entry> find_session(const std::string& id);
    std::filesystem::path image_path(const IndexStore& store, const std::string& image_id) const;

    ServiceConfig config_;
    Clock clock_;
    mutable std::mutex index_mutex_;
    std::shared_ptr<const IndexStore> index_;
    mutable std::mutex table_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    /// Per-instance so a restarted service hands out the same ids again.
    std::atomic<std::uint64_t> session_counter_{0};
};

/// JSON body for a ranking: [{rank, image_id, score, thumbnail_url}].
nlohmann::json results_to_json(const RankedResults& results);
std::string thumbnail_url(const std::string& image_id);

/// Blocks serving `service` on host:port until the server is stopped.
void serve(Service& service, const std::string& host, int port);

/// Splits "host:port" (or ":port") into its parts. Throws InvalidArgument.
std::pair<std::string, int> parse_listen_address(std::string_view text);

} // namespace cbir
