#include "cbir/cli.hpp"

#include "cbir/color_features.hpp"
#include "cbir/error.hpp"
#include "cbir/evaluation.hpp"
#include "cbir/index.hpp"
#include "cbir/service.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace cbir::cli {

namespace {

struct IndexArgs {
    std::string dir;
    std::string out;
    std::string config;
    unsigned threads = 0;
};

struct QueryArgs {
    std::string index;
    std::string image;
    std::string image_id;
    std::string colors;
    std::size_t k = 10;
    std::string metric = "l2";
    std::optional<double> threshold;
};

struct EvaluateArgs {
    std::string index;
    std::string truth;
    std::size_t k = 10;
    std::string metric = "l2";
    std::string report;
};

struct ServeArgs {
    std::string index;
    std::string listen = "127.0.0.1:8080";
    std::string token;
    std::string images;
    std::string static_dir;
};

struct InspectArgs {
    std::string image;
    std::string config;
};

ExtractionConfig config_or_default(const std::string& path) {
    return path.empty() ? ExtractionConfig{} : load_config(path);
}

void print_ranking(std::ostream& out, const RankedResults& results) {
    std::size_t rank = 0;
    for (const auto& item : results.items) {
        out << fmt::format("{}  {}  {}\n", ++rank, item.score, item.image_id);
    }
}

int cmd_index(const IndexArgs& a, std::ostream& out, std::ostream& err) {
    const ExtractionConfig cfg = config_or_default(a.config);
    const BuildResult built = build_index(std::filesystem::path(a.dir), cfg, {a.threads});
    for (const auto& f : built.failures) {
        err << fmt::format("skipped {}: {}\n", f.path, f.message);
    }
    save_index(built.store, a.out);
    out << fmt::format("indexed {} images into {} (config {})\n", built.store.size(), a.out,
                       built.store.config_hash());
    return kExitOk;
}

int cmd_query(const QueryArgs& a, std::ostream& out) {
    const int sources = (a.image.empty() ? 0 : 1) + (a.image_id.empty() ? 0 : 1) + (a.colors.empty() ? 0 : 1);
    if (sources != 1) {
        throw CLI::ValidationError("query", "give exactly one of --image, --id, --colors");
    }
    const IndexStore store = load_index(a.index);
    const Metric metric = parse_metric(a.metric);
    const QueryOptions options{a.threshold};
    RankedResults results;
    if (!a.image.empty()) {
        results = query(store, load_image(a.image), a.k, metric, options);
    } else if (!a.image_id.empty()) {
        results = query(store, store.at(a.image_id), a.k, metric, options);
    } else {
        results = query_color_proportions(store, parse_proportions(a.colors), a.k, metric, options);
    }
    print_ranking(out, results);
    return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const IndexStore store = load_index(a.index);
    const GroundTruth truth = load_ground_truth(a.truth);
    const EvaluationReport report = evaluate_corpus(store, truth, a.k, parse_metric(a.metric));
    out << format_report_table(report);
    std::filesystem::path path = a.report;
    if (path.empty()) {
        path = a.index;
        path.replace_extension(".eval.json");
    }
    std::ofstream file(path);
    if (!file) {
        throw Error(ErrorCode::IoError, "cannot write report: " + path.string());
    }
    file << report_to_json(report).dump(2) << '\n';
    out << fmt::format("report written to {}\n", path.string());
    return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    if (a.index.empty()) {
        throw CLI::ValidationError("serve", "--index (or CBIR_INDEX) is required");
    }
    const auto [host, port] = parse_listen_address(a.listen);
    ServiceConfig cfg;
    cfg.token = a.token;
    cfg.image_root = a.images;
    cfg.static_dir = a.static_dir;
    Service service(cfg);
    service.set_index(std::make_shared<const IndexStore>(load_index(a.index)));
    out << fmt::format("serving {} images on {}:{}\n", service.index()->size(), host, port) << std::flush;
    serve(service, host, port);
    return kExitOk;
}

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
    const ExtractionConfig cfg = config_or_default(a.config);
    const Image img = load_image(a.image);
    const Signature sig = extract_signature(img, cfg, a.image);
    const FeatureLayout layout = cfg.layout();
    out << fmt::format("image  {}  {}x{}  channels {}\n", a.image, img.width(), img.height(), img.channels());
    out << fmt::format("config_hash  {}\n", sig.config_hash);
    out << fmt::format("flags  shape_absent={} texture_absent={} tamura_absent={}\n", sig.flags.shape_absent,
                       sig.flags.texture_absent, sig.flags.tamura_absent);
    const std::span<const double> fv(sig.raw_fv);
    const std::pair<const char*, BlockRange> blocks[] = {
        {"color_histogram", layout.color_histogram_range()},
        {"color_moments", layout.color_moments_range()},
        {"glcm", layout.glcm_range()},
        {"tamura", layout.tamura_range()},
        {"hu", layout.hu_range()},
        {"fourier", layout.fourier_range()},
    };
    for (const auto& [name, range] : blocks) {
        out << fmt::format("{}  {}\n", name, fmt::join(range.slice(fv), " "));
    }
    const Histogram h = histogram(to_grayscale(img));
    out << fmt::format("gray_histogram  {}\n", fmt::join(h.bins, " "));
    out << fmt::format("cdf  {}\n", fmt::join(cdf(h).values, " "));
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Content-based image retrieval: index, query, evaluate, serve, inspect", "cbir"};
    app.require_subcommand(1);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "Extract signatures for a directory and save the index");
    index_cmd->add_option("--dir", index_args.dir, "Image directory (searched recursively)")->required();
    index_cmd->add_option("--out", index_args.out, "Index file to write")->required();
    index_cmd->add_option("--config", index_args.config, "Extraction config JSON");
    index_cmd->add_option("--threads", index_args.threads, "Extraction threads (0 = all cores)");

    QueryArgs query_args;
    auto* query_cmd = app.add_subcommand("query", "Rank the index against a query");
    query_cmd->add_option("--index", query_args.index, "Index file")->required()->envname("CBIR_INDEX");
    query_cmd->add_option("--image", query_args.image, "Query image file");
    query_cmd->add_option("--id", query_args.image_id, "Use an indexed image as the query");
    query_cmd->add_option("--colors", query_args.colors, "Color proportions, e.g. blue=0.51,red=0.2");
    query_cmd->add_option("--k", query_args.k, "Number of results")->check(CLI::PositiveNumber);
    query_cmd->add_option("--metric", query_args.metric,
                          fmt::format("Metric: {}", fmt::join(metric_names(), ", ")));
    query_cmd->add_option("--threshold", query_args.threshold, "Drop results worse than this score");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Precision/recall over a ground-truth file");
    eval_cmd->add_option("--index", eval_args.index, "Index file")->required()->envname("CBIR_INDEX");
    eval_cmd->add_option("--truth", eval_args.truth, "Ground truth JSON {query_id: [relevant ids]}")->required();
    eval_cmd->add_option("--k", eval_args.k, "Cutoff")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--metric", eval_args.metric, "Metric name");
    eval_cmd->add_option("--report", eval_args.report, "JSON report path (default: <index>.eval.json)");

    ServeArgs serve_args;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--index", serve_args.index, "Index file")->envname("CBIR_INDEX");
    serve_cmd->add_option("--listen", serve_args.listen, "host:port")->envname("CBIR_LISTEN");
    serve_cmd->add_option("--token", serve_args.token, "Bearer token required by /api routes")->envname("CBIR_TOKEN");
    serve_cmd->add_option("--images", serve_args.images, "Image directory (default: index root)");
    serve_cmd->add_option("--static", serve_args.static_dir, "Directory served at /");

    InspectArgs inspect_args;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print the signature, histogram and CDF of one image");
    inspect_cmd->add_option("--image", inspect_args.image, "Image file")->required();
    inspect_cmd->add_option("--config", inspect_args.config, "Extraction config JSON");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (*index_cmd) {
            return cmd_index(index_args, out, err);
        }
        if (*query_cmd) {
            return cmd_query(query_args, out);
        }
        if (*eval_cmd) {
            return cmd_evaluate(eval_args, out);
        }
        if (*serve_cmd) {
            return cmd_serve(serve_args, out);
        }
        return cmd_inspect(inspect_args, out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const Error& e) {
        err << fmt::format("error ({}): {}\n", to_string(e.code()), e.what());
        return is_io_error(e.code()) ? kExitIo : kExitDomain;
    }
}

int run(int argc, const char* const* argv) {
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace cbir::cli
