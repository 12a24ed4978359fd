#pragma once

#include "cbir/index.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace cbir {

/// query id -> ids of the images relevant to it.
using GroundTruth = std::map<std::string, std::set<std::string>>;

GroundTruth ground_truth_from_json(const nlohmann::json& j);
GroundTruth load_ground_truth(const std::filesystem::path& path);
/// Throws UnknownImage if any query or relevant id is missing from the store.
void validate_ground_truth(const GroundTruth& truth, const IndexStore& store);

struct EvalCounts {
    std::size_t nir = 0; ///< retrieved and relevant
    std::size_t tid = 0; ///< retrieved
    std::size_t nid = 0; ///< relevant in the corpus
};

double precision(const EvalCounts& c);
double recall(const EvalCounts& c);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// One (recall, precision) point per cutoff 1..ranked.size(), no interpolation.
std::vector<PrPoint> pr_curve(const std::vector<std::string>& ranked, const std::set<std::string>& relevant);
std::vector<PrPoint> pr_curve(const RankedResults& ranked, const std::set<std::string>& relevant);

EvalCounts count_at_cutoff(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                           std::size_t cutoff);

struct QueryEvaluation {
    std::string query_id;
    EvalCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    std::vector<PrPoint> curve;
    std::vector<std::string> ranked;
};

struct EvaluationReport {
    std::string metric;
    std::size_t k = 0;
    std::vector<QueryEvaluation> queries;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
};

struct EvalQuery {
    std::string query_id;
    Signature signature; ///< normalized against the evaluated store
    std::set<std::string> relevant;
};

EvaluationReport evaluate_queries(const IndexStore& store, const std::vector<EvalQuery>& queries, std::size_t k,
                                  const Metric& metric);

/// Every ground-truth query id is looked up in the store and used as the query.
EvaluationReport evaluate_corpus(const IndexStore& store, const GroundTruth& truth, std::size_t k,
                                 const Metric& metric);

nlohmann::json report_to_json(const EvaluationReport& report);
std::string format_report_table(const EvaluationReport& report);

} // namespace cbir
