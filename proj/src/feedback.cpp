#include "cbir/feedback.hpp"

#include "cbir/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>

namespace cbir {

std::string to_string(Label label) {
    switch (label) {
    case Label::Relevant: return "relevant";
    case Label::NotRelevant: return "not_relevant";
    case Label::Neutral: return "neutral";
    }
    return "neutral";
}

Label parse_label(std::string_view text) {
    if (text == "relevant") {
        return Label::Relevant;
    }
    if (text == "not_relevant") {
        return Label::NotRelevant;
    }
    if (text == "neutral") {
        return Label::Neutral;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown feedback label: " + std::string(text));
}

namespace {

std::vector<double> mean_of(const std::vector<std::vector<double>>& rows, std::size_t length) {
    std::vector<double> m(length, 0.0);
    if (rows.empty()) {
        return m;
    }
    for (const auto& r : rows) {
        if (r.size() != length) {
            throw Error(ErrorCode::DimensionMismatch, "feedback vector length differs from the query");
        }
        for (std::size_t i = 0; i < length; ++i) {
            m[i] += r[i];
        }
    }
    for (double& v : m) {
        v /= static_cast<double>(rows.size());
    }
    return m;
}

struct LabeledSets {
    std::vector<const Signature*> relevant;
    std::vector<const Signature*> not_relevant;
};

LabeledSets collect(const LabelMap& labels, const IndexStore& store) {
    LabeledSets sets;
    for (const auto& [id, label] : labels) {
        const Signature& s = store.at(id);
        if (label == Label::Relevant) {
            sets.relevant.push_back(&s);
        } else if (label == Label::NotRelevant) {
            sets.not_relevant.push_back(&s);
        }
    }
    if (sets.relevant.empty() && sets.not_relevant.empty()) {
        throw Error(ErrorCode::AllNeutral, "feedback needs at least one relevant or not_relevant label");
    }
    return sets;
}

// The histogram metrics read the raw color histogram, so it follows the same
// update and is then renormalized to a distribution.
std::vector<double> refine_histogram(std::span<const double> current, const LabeledSets& sets,
                                     const BlockRange& range, const RocchioParams& params) {
    auto block = [&](const std::vector<const Signature*>& from) {
        std::vector<std::vector<double>> rows;
        for (const Signature* s : from) {
            const auto b = range.slice(std::span<const double>(s->raw_fv));
            rows.emplace_back(b.begin(), b.end());
        }
        return rows;
    };
    std::vector<double> h = rocchio(std::vector<double>(current.begin(), current.end()), block(sets.relevant),
                                    block(sets.not_relevant), params);
    double sum = 0.0;
    for (double v : h) {
        sum += v;
    }
    if (!(sum > 0.0)) {
        return {current.begin(), current.end()};
    }
    for (double& v : h) {
        v /= sum;
    }
    return h;
}

FeedbackRound make_round(const Signature& current, const LabelMap& labels, const IndexStore& store,
                         const RocchioParams& params) {
    const LabeledSets sets = collect(labels, store);
    auto rows = [](const std::vector<const Signature*>& from) {
        std::vector<std::vector<double>> out;
        for (const Signature* s : from) {
            out.push_back(s->fv);
        }
        return out;
    };
    FeedbackRound round;
    round.labels = labels;
    round.resulting_fv = rocchio(current.fv, rows(sets.relevant), rows(sets.not_relevant), params);
    const BlockRange range = store.layout().color_histogram_range();
    round.resulting_histogram =
        refine_histogram(range.slice(std::span<const double>(current.raw_fv)), sets, range, params);
    return round;
}

void adopt(Signature& current, const FeedbackRound& round, const BlockRange& range) {
    current.fv = round.resulting_fv;
    std::copy(round.resulting_histogram.begin(), round.resulting_histogram.end(),
              current.raw_fv.begin() + static_cast<std::ptrdiff_t>(range.offset));
}

} // namespace

std::vector<double> rocchio(const std::vector<double>& q, const std::vector<std::vector<double>>& relevant,
                            const std::vector<std::vector<double>>& not_relevant, const RocchioParams& params) {
    const std::vector<double> pos = mean_of(relevant, q.size());
    const std::vector<double> neg = mean_of(not_relevant, q.size());
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        double v = params.alpha * q[i];
        if (!relevant.empty()) {
            v += params.beta * pos[i];
        }
        if (!not_relevant.empty()) {
            v -= params.gamma * neg[i];
        }
        out[i] = std::max(v, 0.0);
    }
    return out;
}

std::string next_session_id() {
    static std::atomic<std::uint64_t> counter{0};
    return fmt::format("s{:08d}", ++counter);
}

FeedbackSession start_session(const Signature& q, const IndexStore& store, std::string session_id,
                              const RocchioParams& params) {
    if (q.config_hash != store.config_hash()) {
        throw Error(ErrorCode::ConfigMismatch, "query config does not match the index");
    }
    if (q.fv.size() != store.layout().total() || q.raw_fv.size() != store.layout().total()) {
        throw Error(ErrorCode::DimensionMismatch, "query is not normalized for this index");
    }
    FeedbackSession s;
    s.session_id = std::move(session_id);
    s.config_hash = store.config_hash();
    s.params = params;
    s.original = q;
    s.current = q;
    return s;
}

FeedbackSession start_session(const Signature& q, const IndexStore& store, const RocchioParams& params) {
    return start_session(q, store, next_session_id(), params);
}

const std::vector<double>& apply_feedback(FeedbackSession& session, const LabelMap& labels, const IndexStore& store) {
    if (session.config_hash != store.config_hash()) {
        throw Error(ErrorCode::ConfigMismatch, "session belongs to a different index");
    }
    FeedbackRound round = make_round(session.current, labels, store, session.params);
    adopt(session.current, round, store.layout().color_histogram_range());
    session.rounds.push_back(std::move(round));
    return session.current.fv;
}

RankedResults session_query(const FeedbackSession& session, const IndexStore& store, std::size_t k,
                            const Metric& metric, const QueryOptions& options) {
    return query(store, session.current, k, metric, options);
}

Signature replay(const FeedbackSession& session, const IndexStore& store) {
    Signature current = session.original;
    for (const FeedbackRound& recorded : session.rounds) {
        const FeedbackRound round = make_round(current, recorded.labels, store, session.params);
        adopt(current, round, store.layout().color_histogram_range());
    }
    return current;
}

namespace {

nlohmann::json signature_to_json(const Signature& s) {
    return {{"image_id", s.image_id},
            {"raw_fv", s.raw_fv},
            {"fv", s.fv},
            {"flags",
             {{"shape_absent", s.flags.shape_absent},
              {"texture_absent", s.flags.texture_absent},
              {"tamura_absent", s.flags.tamura_absent}}}};
}

Signature signature_from_json(const nlohmann::json& j, const std::string& hash) {
    Signature s;
    s.image_id = j.at("image_id").get<std::string>();
    s.raw_fv = j.at("raw_fv").get<std::vector<double>>();
    s.fv = j.at("fv").get<std::vector<double>>();
    if (j.contains("flags")) {
        const auto& f = j.at("flags");
        s.flags = {f.value("shape_absent", false), f.value("texture_absent", false), f.value("tamura_absent", false)};
    }
    s.config_hash = hash;
    return s;
}

} // namespace

nlohmann::json session_to_json(const FeedbackSession& session) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const FeedbackRound& r : session.rounds) {
        nlohmann::json labels = nlohmann::json::object();
        for (const auto& [id, label] : r.labels) {
            labels[id] = to_string(label);
        }
        rounds.push_back(
            {{"labels", labels}, {"resulting_fv", r.resulting_fv}, {"resulting_histogram", r.resulting_histogram}});
    }
    return {
        {"session_id", session.session_id},
        {"config_hash", session.config_hash},
        {"params", {{"alpha", session.params.alpha}, {"beta", session.params.beta}, {"gamma", session.params.gamma}}},
        {"original", signature_to_json(session.original)},
        {"current", signature_to_json(session.current)},
        {"rounds", rounds},
    };
}

FeedbackSession session_from_json(const nlohmann::json& j) {
    try {
        FeedbackSession s;
        s.session_id = j.at("session_id").get<std::string>();
        s.config_hash = j.at("config_hash").get<std::string>();
        const auto& p = j.at("params");
        s.params = {p.at("alpha").get<double>(), p.at("beta").get<double>(), p.at("gamma").get<double>()};
        s.original = signature_from_json(j.at("original"), s.config_hash);
        s.current = signature_from_json(j.at("current"), s.config_hash);
        for (const auto& r : j.at("rounds")) {
            FeedbackRound round;
            for (const auto& [id, label] : r.at("labels").items()) {
                round.labels[id] = parse_label(label.get<std::string>());
            }
            round.resulting_fv = r.at("resulting_fv").get<std::vector<double>>();
            round.resulting_histogram = r.at("resulting_histogram").get<std::vector<double>>();
            s.rounds.push_back(std::move(round));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptData, std::string("malformed session: ") + e.what());
    }
}

} // namespace cbir
