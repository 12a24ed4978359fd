#include "cbir/evaluation.hpp"

#include "cbir/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

namespace cbir {

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error(ErrorCode::CorruptData, "ground truth must be an object {query_id: [relevant ids]}");
    }
    GroundTruth truth;
    for (const auto& [query_id, relevant] : j.items()) {
        if (!relevant.is_array()) {
            throw Error(ErrorCode::CorruptData, "relevant set for " + query_id + " must be an array");
        }
        auto& set = truth[query_id];
        for (const auto& id : relevant) {
            if (!id.is_string()) {
                throw Error(ErrorCode::CorruptData, "relevant ids must be strings");
            }
            set.insert(id.get<std::string>());
        }
    }
    return truth;
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::FileNotFound, "cannot open ground truth: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptData, "ground truth is not valid JSON: " + std::string(e.what()));
    }
    return ground_truth_from_json(j);
}

void validate_ground_truth(const GroundTruth& truth, const IndexStore& store) {
    for (const auto& [query_id, relevant] : truth) {
        if (store.find(query_id) == nullptr) {
            throw Error(ErrorCode::UnknownImage, "ground-truth query not in index: " + query_id);
        }
        for (const auto& id : relevant) {
            if (store.find(id) == nullptr) {
                throw Error(ErrorCode::UnknownImage, "ground-truth image not in index: " + id);
            }
        }
    }
}

double precision(const EvalCounts& c) {
    if (c.tid == 0) {
        throw Error(ErrorCode::EmptyInput, "precision is undefined when nothing was retrieved");
    }
    return static_cast<double>(c.nir) / static_cast<double>(c.tid);
}

double recall(const EvalCounts& c) {
    if (c.nid == 0) {
        throw Error(ErrorCode::EmptyInput, "recall is undefined without relevant images");
    }
    return static_cast<double>(c.nir) / static_cast<double>(c.nid);
}

EvalCounts count_at_cutoff(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                           std::size_t cutoff) {
    EvalCounts c;
    c.tid = std::min(cutoff, ranked.size());
    c.nid = relevant.size();
    for (std::size_t i = 0; i < c.tid; ++i) {
        c.nir += relevant.contains(ranked[i]) ? 1 : 0;
    }
    return c;
}

std::vector<PrPoint> pr_curve(const std::vector<std::string>& ranked, const std::set<std::string>& relevant) {
    if (ranked.empty() || relevant.empty()) {
        throw Error(ErrorCode::EmptyInput, "PR curve needs a nonempty ranking and relevant set");
    }
    std::vector<PrPoint> curve;
    curve.reserve(ranked.size());
    EvalCounts c;
    c.nid = relevant.size();
    for (const auto& id : ranked) {
        ++c.tid;
        c.nir += relevant.contains(id) ? 1 : 0;
        curve.push_back({recall(c), precision(c)});
    }
    return curve;
}

std::vector<PrPoint> pr_curve(const RankedResults& ranked, const std::set<std::string>& relevant) {
    std::vector<std::string> ids;
    ids.reserve(ranked.items.size());
    for (const auto& item : ranked.items) {
        ids.push_back(item.image_id);
    }
    return pr_curve(ids, relevant);
}

EvaluationReport evaluate_queries(const IndexStore& store, const std::vector<EvalQuery>& queries, std::size_t k,
                                  const Metric& metric) {
    if (queries.empty()) {
        throw Error(ErrorCode::EmptyInput, "no evaluation queries");
    }
    EvaluationReport report;
    report.metric = metric.name();
    report.k = k;
    for (const EvalQuery& q : queries) {
        const RankedResults ranked = query(store, q.signature, k, metric);
        QueryEvaluation e;
        e.query_id = q.query_id;
        for (const auto& item : ranked.items) {
            e.ranked.push_back(item.image_id);
        }
        e.counts = count_at_cutoff(e.ranked, q.relevant, k);
        e.precision = precision(e.counts);
        e.recall = recall(e.counts);
        e.curve = pr_curve(e.ranked, q.relevant);
        report.mean_precision += e.precision;
        report.mean_recall += e.recall;
        report.queries.push_back(std::move(e));
    }
    report.mean_precision /= static_cast<double>(report.queries.size());
    report.mean_recall /= static_cast<double>(report.queries.size());
    return report;
}

EvaluationReport evaluate_corpus(const IndexStore& store, const GroundTruth& truth, std::size_t k,
                                 const Metric& metric) {
    validate_ground_truth(truth, store);
    std::vector<EvalQuery> queries;
    for (const auto& [query_id, relevant] : truth) {
        queries.push_back({query_id, store.at(query_id), relevant});
    }
    return evaluate_queries(store, queries, k, metric);
}

nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : report.queries) {
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& p : q.curve) {
            curve.push_back({{"recall", p.recall}, {"precision", p.precision}});
        }
        queries.push_back({
            {"query_id", q.query_id},
            {"nir", q.counts.nir},
            {"tid", q.counts.tid},
            {"nid", q.counts.nid},
            {"precision", q.precision},
            {"recall", q.recall},
            {"ranked", q.ranked},
            {"pr_curve", curve},
        });
    }
    return {
        {"metric", report.metric},
        {"k", report.k},
        {"mean_precision", report.mean_precision},
        {"mean_recall", report.mean_recall},
        {"queries", queries},
    };
}

std::string format_report_table(const EvaluationReport& report) {
    std::size_t width = 8;
    for (const auto& q : report.queries) {
        width = std::max(width, q.query_id.size());
    }
    std::string out = fmt::format("{:<{}}  {:>5}  {:>5}  {:>5}  {:>9}  {:>9}\n", "query", width, "nir", "tid", "nid",
                                  fmt::format("P@{}", report.k), fmt::format("R@{}", report.k));
    for (const auto& q : report.queries) {
        out += fmt::format("{:<{}}  {:>5}  {:>5}  {:>5}  {:>9.4f}  {:>9.4f}\n", q.query_id, width, q.counts.nir,
                           q.counts.tid, q.counts.nid, q.precision, q.recall);
    }
    out += fmt::format("{:<{}}  {:>5}  {:>5}  {:>5}  {:>9.4f}  {:>9.4f}\n", "mean", width, "", "", "",
                       report.mean_precision, report.mean_recall);
    return out;
}

} // namespace cbir
