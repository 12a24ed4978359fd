#include "cbir/service.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <charconv>
#include <fstream>
#include <iterator>

namespace cbir {

ApiError api_error(const Error& e) {
    auto make = [&](int status, std::string code) { return ApiError{status, std::move(code), e.what()}; };
    switch (e.code()) {
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::CorruptData: return make(400, "malformed_image");
    case ErrorCode::InvalidArgument: return make(400, "invalid_argument");
    case ErrorCode::UnknownMetric: return make(400, "unknown_metric");
    case ErrorCode::UnknownName: return make(400, "unknown_name");
    case ErrorCode::UnknownImage: return make(404, "unknown_image");
    case ErrorCode::FileNotFound: return make(404, "file_not_found");
    case ErrorCode::ConfigMismatch: return make(409, "config_mismatch");
    case ErrorCode::AllNeutral: return make(422, "all_neutral");
    case ErrorCode::WrongChannelCount:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyInput:
    case ErrorCode::UndefinedInput:
    case ErrorCode::NoShape:
    case ErrorCode::ImageTooSmall:
    case ErrorCode::BoundaryTooShort: return make(422, "unprocessable_input");
    case ErrorCode::IoError: return make(500, "io_error");
    case ErrorCode::VersionMismatch:
    case ErrorCode::CorruptIndex: return make(500, "index_error");
    }
    return make(500, "internal_error");
}

namespace {

ApiResponse json_response(int status, const nlohmann::json& body) {
    return {status, "application/json", body.dump()};
}

ApiResponse error_response(const ApiError& e) {
    return json_response(e.status, {{"error", {{"code", e.code}, {"message", e.message}}}});
}

ApiResponse error_response(int status, std::string code, std::string message) {
    return error_response(ApiError{status, std::move(code), std::move(message)});
}

std::size_t parse_k(const std::optional<std::string>& text, std::size_t fallback) {
    if (!text) {
        return fallback;
    }
    std::size_t k = 0;
    const auto [end, ec] = std::from_chars(text->data(), text->data() + text->size(), k);
    if (ec != std::errc{} || end != text->data() + text->size() || k == 0) {
        throw Error(ErrorCode::InvalidArgument, "k must be a positive integer");
    }
    return k;
}

std::string content_type_for(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    for (char& c : ext) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (ext == ".png") {
        return "image/png";
    }
    if (ext == ".bmp") {
        return "image/bmp";
    }
    if (ext == ".pgm") {
        return "image/x-portable-graymap";
    }
    if (ext == ".ppm") {
        return "image/x-portable-pixmap";
    }
    return "image/x-portable-anymap";
}

} // namespace

std::string thumbnail_url(const std::string& image_id) {
    std::string out = "/api/images/";
    for (unsigned char c : image_id) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '/') {
            out += static_cast<char>(c);
        } else {
            out += fmt::format("%{:02X}", c);
        }
    }
    return out + "?thumb=1";
}

nlohmann::json results_to_json(const RankedResults& results) {
    nlohmann::json items = nlohmann::json::array();
    std::size_t rank = 0;
    for (const auto& item : results.items) {
        items.push_back({{"rank", ++rank},
                         {"image_id", item.image_id},
                         {"score", item.score},
                         {"thumbnail_url", thumbnail_url(item.image_id)}});
    }
    return items;
}

Service::Service(ServiceConfig config, Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {}

void Service::set_index(std::shared_ptr<const IndexStore> store) {
    std::scoped_lock lock(index_mutex_);
    index_ = std::move(store);
}

std::shared_ptr<const IndexStore> Service::index() const {
    std::scoped_lock lock(index_mutex_);
    return index_;
}

std::shared_ptr<const IndexStore> Service::require_index() const {
    auto store = index();
    if (!store) {
        throw ApiError{503, "index_not_loaded", "no index is loaded"};
    }
    return store;
}

bool Service::authorized(std::string_view authorization) const {
    if (config_.token.empty()) {
        return true;
    }
    constexpr std::string_view prefix = "Bearer ";
    return authorization.starts_with(prefix) && authorization.substr(prefix.size()) == config_.token;
}

ApiResponse Service::handle_health() const {
    const auto store = index();
    nlohmann::json body = {{"status", "ok"}, {"index_loaded", store != nullptr}, {"sessions", session_count()}, {"metrics", metric_names()}};
    if (store) {
        body["images"] = store->size();
        body["config_hash"] = store->config_hash();
    }
    return json_response(200, body);
}

ApiResponse Service::handle_query(const QueryRequest& request) {
    try {
        const auto store = require_index();
        const std::size_t k = parse_k(request.k, config_.default_k);
        const Metric metric = parse_metric(request.metric.value_or(config_.default_metric));

        Signature q;
        if (request.image) {
            const auto* bytes = reinterpret_cast<const std::uint8_t*>(request.image->data());
            q = store->normalize(extract_signature(decode_image({bytes, request.image->size()}), store->config()));
        } else if (request.image_id) {
            q = store->at(*request.image_id);
        } else {
            return error_response(400, "malformed_request", "expected a multipart \"image\" file or an image_id");
        }

        auto entry = std::make_shared<Entry>();
        entry->session = start_session(q, *store, fmt::format("s{:08d}", ++session_counter_));
        entry->k = k;
        entry->metric = metric;
        entry->last_used = clock_();
        const RankedResults results = session_query(entry->session, *store, k, metric);
        const std::string id = entry->session.session_id;
        {
            std::scoped_lock lock(table_mutex_);
            sessions_[id] = std::move(entry);
        }
        return json_response(200, {{"session_id", id},
                                   {"round", 0},
                                   {"metric", metric.name()},
                                   {"k", k},
                                   {"results", results_to_json(results)}});
    } catch (const ApiError& e) {
        return error_response(e);
    } catch (const Error& e) {
        return error_response(api_error(e));
    }
}

std::shared_ptr<Service::Entry> Service::find_session(const std::string& id) {
    std::scoped_lock lock(table_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        return nullptr;
    }
    const auto now = clock_();
    if (now - it->second->last_used > config_.session_ttl) {
        sessions_.erase(it);
        return nullptr;
    }
    it->second->last_used = now;
    return it->second;
}

ApiResponse Service::handle_feedback(const std::string& session_id, const std::string& body) {
    try {
        const auto store = require_index();
        const auto entry = find_session(session_id);
        if (!entry) {
            return error_response(404, "unknown_session", "no such session: " + session_id);
        }
        LabelMap labels;
        try {
            const nlohmann::json j = nlohmann::json::parse(body);
            if (!j.is_object()) {
                return error_response(400, "malformed_request", "feedback body must be {image_id: label}");
            }
            for (const auto& [id, label] : j.items()) {
                if (!label.is_string()) {
                    return error_response(400, "malformed_request", "labels must be strings");
                }
                labels[id] = parse_label(label.get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            return error_response(400, "malformed_request", std::string("invalid JSON: ") + e.what());
        }

        std::scoped_lock lock(entry->mutex);
        apply_feedback(entry->session, labels, *store);
        const RankedResults results = session_query(entry->session, *store, entry->k, entry->metric);
        return json_response(200, {{"session_id", session_id},
                                   {"round", entry->session.rounds.size()},
                                   {"metric", entry->metric.name()},
                                   {"k", entry->k},
                                   {"results", results_to_json(results)}});
    } catch (const ApiError& e) {
        return error_response(e);
    } catch (const Error& e) {
        return error_response(api_error(e));
    }
}

std::filesystem::path Service::image_path(const IndexStore& store, const std::string& image_id) const {
    const std::filesystem::path root = config_.image_root.empty() ? std::filesystem::path(store.root())
                                                                  : config_.image_root;
    return root / std::filesystem::path(image_id);
}

ApiResponse Service::handle_image(const std::string& image_id, bool thumbnail) const {
    try {
        const auto store = require_index();
        store->at(image_id);
        const std::filesystem::path path = image_path(*store, image_id);
        if (thumbnail) {
            const auto png = encode_png(fit_within(load_image(path), kThumbnailSize));
            return {200, "image/png", std::string(png.begin(), png.end())};
        }
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw Error(ErrorCode::FileNotFound, "image file is missing: " + path.string());
        }
        return {200, content_type_for(path), std::string(std::istreambuf_iterator<char>(in), {})};
    } catch (const ApiError& e) {
        return error_response(e);
    } catch (const Error& e) {
        return error_response(api_error(e));
    }
}

std::size_t Service::session_count() const {
    std::scoped_lock lock(table_mutex_);
    return sessions_.size();
}

std::size_t Service::purge_expired() {
    std::scoped_lock lock(table_mutex_);
    const auto now = clock_();
    return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_used > config_.session_ttl; });
}

void Service::mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    auto guard = [this, send](const httplib::Request& req, httplib::Response& res) {
        if (authorized(req.get_header_value("Authorization"))) {
            return true;
        }
        send(res, error_response(401, "unauthorized", "missing or invalid bearer token"));
        return false;
    };
    auto param = [](const httplib::Request& req, const char* name) -> std::optional<std::string> {
        if (req.has_param(name)) {
            return req.get_param_value(name);
        }
        if (req.has_file(name)) {
            return req.get_file_value(name).content;
        }
        return std::nullopt;
    };

    server.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, handle_health());
    });
    server.Post("/api/query", [this, send, guard, param](const httplib::Request& req, httplib::Response& res) {
        if (!guard(req, res)) {
            return;
        }
        purge_expired();
        QueryRequest q;
        if (req.has_file("image")) {
            q.image = req.get_file_value("image").content;
        }
        q.image_id = param(req, "image_id");
        q.k = param(req, "k");
        q.metric = param(req, "metric");
        send(res, handle_query(q));
    });
    server.Post(R"(/api/sessions/([^/]+)/feedback)",
                [this, send, guard](const httplib::Request& req, httplib::Response& res) {
                    if (!guard(req, res)) {
                        return;
                    }
                    send(res, handle_feedback(req.matches[1], req.body));
                });
    server.Get(R"(/api/images/(.+))", [this, send, guard](const httplib::Request& req, httplib::Response& res) {
        if (!guard(req, res)) {
            return;
        }
        const bool thumb = req.has_param("thumb") && req.get_param_value("thumb") != "0";
        send(res, handle_image(req.matches[1], thumb));
    });
    if (!config_.static_dir.empty()) {
        server.set_mount_point("/", config_.static_dir.string());
    }
}

void serve(Service& service, const std::string& host, int port) {
    httplib::Server server;
    service.mount(server);
    if (!server.listen(host, port)) {
        throw Error(ErrorCode::IoError, fmt::format("cannot listen on {}:{}", host, port));
    }
}

std::pair<std::string, int> parse_listen_address(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
        throw Error(ErrorCode::InvalidArgument, "listen address must be host:port");
    }
    std::string host(text.substr(0, colon));
    const std::string_view port_text = text.substr(colon + 1);
    int port = 0;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || end != port_text.data() + port_text.size() || port < 0 || port > 65535) {
        throw Error(ErrorCode::InvalidArgument, "invalid port in listen address: " + std::string(text));
    }
    return {host.empty() ? "0.0.0.0" : host, port};
}

} // namespace cbir
