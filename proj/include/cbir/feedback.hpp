#pragma once

#include "cbir/index.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cbir {

enum class Label { Relevant, NotRelevant, Neutral };

std::string to_string(Label label);
/// Accepts relevant, not_relevant, neutral. Throws InvalidArgument.
Label parse_label(std::string_view text);

using LabelMap = std::map<std::string, Label>;

struct RocchioParams {
    double alpha = 1.0;
    double beta = 0.75;
    double gamma = 0.25;

    bool operator==(const RocchioParams&) const = default;
};

/// alpha*q + beta*mean(relevant) - gamma*mean(not_relevant), clipped at 0.
/// An empty class contributes nothing.
std::vector<double> rocchio(const std::vector<double>& q, const std::vector<std::vector<double>>& relevant,
                            const std::vector<std::vector<double>>& not_relevant, const RocchioParams& params = {});

struct FeedbackRound {
    LabelMap labels;
    std::vector<double> resulting_fv;
    /// Refined color histogram used by the histogram metrics (sums to 1).
    std::vector<double> resulting_histogram;

    bool operator==(const FeedbackRound&) const = default;
};

struct FeedbackSession {
    std::string session_id;
    std::string config_hash;
    RocchioParams params;
    Signature original;
    /// Query used for the next search: `fv` is the refined normalized vector,
    /// the color-histogram block of `raw_fv` is refined alongside it.
    Signature current;
    std::vector<FeedbackRound> rounds;

    bool operator==(const FeedbackSession&) const = default;
};

/// Returns a fresh id. Ids come from a process-wide counter, not randomness.
std::string next_session_id();

/// `q` must already be normalized against `store`; throws ConfigMismatch otherwise.
FeedbackSession start_session(const Signature& q, const IndexStore& store, const RocchioParams& params = {});
FeedbackSession start_session(const Signature& q, const IndexStore& store, std::string session_id,
                              const RocchioParams& params = {});

/// Looks up the labeled images in `store`, applies one Rocchio round and
/// appends it to the history. Throws AllNeutral when no label is relevant or
/// not relevant, UnknownImage for ids outside the store. Returns the new fv.
const std::vector<double>& apply_feedback(FeedbackSession& session, const LabelMap& labels, const IndexStore& store);

RankedResults session_query(const FeedbackSession& session, const IndexStore& store, std::size_t k,
                            const Metric& metric, const QueryOptions& options = {});

/// Recomputes every round from the original query; returns the final query.
Signature replay(const FeedbackSession& session, const IndexStore& store);

nlohmann::json session_to_json(const FeedbackSession& session);
FeedbackSession session_from_json(const nlohmann::json& j);

} // namespace cbir
