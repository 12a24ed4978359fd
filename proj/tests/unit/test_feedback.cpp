#include "cbir/error.hpp"
#include "cbir/feedback.hpp"
#include "cbir/metrics.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace cbir;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

const IndexStore& store() {
    static const IndexStore s = build_index(fixtures::named(fixtures::oracle_corpus()), ExtractionConfig{}, {1});
    return s;
}

double l2(const std::vector<double>& a, const std::vector<double>& b) {
    return minkowski(a, b, 2.0);
}

} // namespace

TEST_CASE("rocchio update on small vectors") {
    CHECK(rocchio({0, 0}, {{1, 1}}, {}) == std::vector<double>{0.75, 0.75});
    CHECK(rocchio({1, 1}, {}, {{2, 0}}) == std::vector<double>{0.5, 1.0});
    CHECK(rocchio({1, 1}, {{0, 2}, {2, 0}}, {}) == std::vector<double>{1.75, 1.75});
    // Clipped at zero.
    CHECK(rocchio({0.1, 0}, {}, {{1, 1}}) == std::vector<double>{0.0, 0.0});
    CHECK(rocchio({0.3, 0.6}, {{1, 0}}, {{0, 1}}, {1.0, 0.0, 0.0}) == std::vector<double>{0.3, 0.6});
    CHECK(code_of([] { rocchio({1, 1}, {{1}}, {}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("rocchio stays within bounds for unit-range inputs") {
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto vec = [&] {
        std::vector<double> v(20);
        for (auto& x : v) {
            x = u(rng);
        }
        return v;
    };
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> rel(trial % 3), non(trial % 4);
        for (auto& r : rel) {
            r = vec();
        }
        for (auto& r : non) {
            r = vec();
        }
        for (double v : rocchio(vec(), rel, non)) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.75);
        }
    }
}

TEST_CASE("labels") {
    CHECK(parse_label("relevant") == Label::Relevant);
    CHECK(parse_label("not_relevant") == Label::NotRelevant);
    CHECK(parse_label("neutral") == Label::Neutral);
    CHECK(to_string(Label::NotRelevant) == "not_relevant");
    CHECK(code_of([] { parse_label("yes"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sessions have distinct ids and identical starting vectors") {
    const Signature& q = store().at("shape_07.ppm");
    const FeedbackSession a = start_session(q, store());
    const FeedbackSession b = start_session(q, store());
    CHECK(a.session_id != b.session_id);
    CHECK(a.session_id.size() == 9);
    CHECK(a.current.fv == b.current.fv);
    CHECK(a.rounds.empty());

    Signature foreign = q;
    foreign.config_hash = "0000";
    CHECK(code_of([&] { start_session(foreign, store()); }) == ErrorCode::ConfigMismatch);
    Signature raw = q;
    raw.fv.clear();
    CHECK(code_of([&] { start_session(raw, store()); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("a session without rounds queries like a plain query") {
    const Signature& q = store().at("texture_14.pgm");
    const FeedbackSession s = start_session(q, store());
    for (const std::string name : {"l2", "osm", "histogram"}) {
        const Metric m = parse_metric(name);
        CHECK(session_query(s, store(), 12, m).items == query(store(), q, 12, m).items);
    }
}

TEST_CASE("feedback errors") {
    FeedbackSession s = start_session(store().at("color_00.ppm"), store());
    CHECK(code_of([&] { apply_feedback(s, {{"color_07.ppm", Label::Neutral}}, store()); }) == ErrorCode::AllNeutral);
    CHECK(code_of([&] { apply_feedback(s, {}, store()); }) == ErrorCode::AllNeutral);
    CHECK(code_of([&] { apply_feedback(s, {{"nope", Label::Relevant}}, store()); }) == ErrorCode::UnknownImage);
    CHECK(s.rounds.empty());
    CHECK(s.current == s.original);
}

TEST_CASE("neutral labels are ignored") {
    FeedbackSession a = start_session(store().at("color_00.ppm"), store());
    FeedbackSession b = start_session(store().at("color_00.ppm"), store());
    apply_feedback(a, {{"color_07.ppm", Label::Relevant}}, store());
    apply_feedback(b, {{"color_07.ppm", Label::Relevant}, {"noise_0.ppm", Label::Neutral}}, store());
    CHECK(a.current == b.current);
}

TEST_CASE("marking the top result relevant does not move away from it") {
    const auto& st = store();
    std::vector<Signature> queries = st.signatures();
    for (int i : {3, 11}) {
        queries.push_back(st.normalize(extract_signature(fixtures::blue_shape(i), st.config(), "b")));
        queries.push_back(st.normalize(extract_signature(fixtures::checkerboard(i), st.config(), "c")));
        queries.push_back(st.normalize(extract_signature(fixtures::color_field(i), st.config(), "f")));
    }
    for (const Signature& q : queries) {
        const RankedResults r = query(st, q, 1, parse_metric("l2"));
        const std::string& top = r.items[0].image_id;
        FeedbackSession s = start_session(q, st);
        const double before = cosine_disparity(q.fv, st.at(top).fv);
        apply_feedback(s, {{top, Label::Relevant}}, st);
        CHECK(cosine_disparity(s.current.fv, st.at(top).fv) <= before + 1e-12);
        CHECK(session_query(s, st, 12, parse_metric("l2")).items == session_query(s, st, 12, parse_metric("l2")).items);
    }
}

TEST_CASE("beta and gamma zero leave the query unchanged") {
    const Signature& q = store().at("noise_1.ppm");
    FeedbackSession s = start_session(q, store(), RocchioParams{1.0, 0.0, 0.0});
    apply_feedback(s, {{"color_00.ppm", Label::Relevant}, {"shape_00.ppm", Label::NotRelevant}}, store());
    CHECK(s.current.fv == q.fv);
    CHECK(l2(s.current.raw_fv, q.raw_fv) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("refined histogram stays a distribution") {
    FeedbackSession s = start_session(store().at("shape_00.ppm"), store());
    apply_feedback(s, {{"shape_07.ppm", Label::Relevant}, {"color_00.ppm", Label::NotRelevant}}, store());
    const auto h = store().layout().color_histogram_range().slice(std::span<const double>(s.current.raw_fv));
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : h) {
        CHECK(v >= 0.0);
    }
    CHECK(s.rounds.back().resulting_histogram == std::vector<double>(h.begin(), h.end()));
}

TEST_CASE("feedback is deterministic and replayable") {
    const LabelMap round1{{"shape_07.ppm", Label::Relevant}, {"noise_0.ppm", Label::NotRelevant}};
    const LabelMap round2{{"shape_14.ppm", Label::Relevant}, {"color_14.ppm", Label::NotRelevant}};
    FeedbackSession a = start_session(store().at("shape_00.ppm"), store(), "a");
    FeedbackSession b = start_session(store().at("shape_00.ppm"), store(), "b");
    for (FeedbackSession* s : {&a, &b}) {
        apply_feedback(*s, round1, store());
        apply_feedback(*s, round2, store());
    }
    CHECK(a.current == b.current);
    CHECK(a.rounds == b.rounds);
    CHECK(a.rounds.size() == 2);
    CHECK(replay(a, store()) == a.current);

    const FeedbackSession back = session_from_json(nlohmann::json::parse(session_to_json(a).dump()));
    CHECK(back == a);
    CHECK(code_of([] { session_from_json(nlohmann::json{{"session_id", 3}}); }) == ErrorCode::CorruptData);
}
