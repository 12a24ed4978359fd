// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "cbir/error.hpp"
#include "cbir/evaluation.hpp"
#include "cbir/feedback.hpp"
#include "cbir/metrics.hpp"
#include "cbir/shape_features.hpp"
#include "synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

using namespace cbir;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(std::string why) {
        if (pass) {
            detail = std::move(why);
        }
        pass = false;
    }
};

const std::vector<std::string> kMetrics{"l1", "l2", "minkowski:3", "spd", "cosine", "osm", "histogram", "intersection"};

// --- independent oracles ------------------------------------------------------

long double oracle_minkowski(std::span<const double> a, std::span<const double> b, long double p) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::pow(std::fabs(static_cast<long double>(a[i]) - b[i]), p);
    }
    return std::pow(s, 1.0L / p);
}

long double oracle_score(const std::string& metric, const Signature& q, const Signature& c, const FeatureLayout& l) {
    const std::span<const double> u(q.fv), v(c.fv);
    if (metric == "l1") {
        return oracle_minkowski(u, v, 1);
    }
    if (metric == "l2") {
        return oracle_minkowski(u, v, 2);
    }
    if (metric == "minkowski:3") {
        return oracle_minkowski(u, v, 3);
    }
    if (metric == "cosine") {
        long double dot = 0, nu = 0, nv = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            dot += static_cast<long double>(u[i]) * v[i];
            nu += static_cast<long double>(u[i]) * u[i];
            nv += static_cast<long double>(v[i]) * v[i];
        }
        return 1.0L - std::clamp(dot / std::sqrt(nu * nv), -1.0L, 1.0L);
    }
    if (metric == "spd") {
        const auto n = static_cast<long double>(u.size());
        long double mean = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            mean += static_cast<long double>(u[i]) - v[i];
        }
        mean /= n;
        long double ss = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const long double d = static_cast<long double>(u[i]) - v[i] - mean;
            ss += d * d;
        }
        const long double sd = std::sqrt(ss / (n - 1));
        if (sd == 0) {
            return mean == 0 ? 0.0L : std::numeric_limits<long double>::infinity();
        }
        return std::sqrt(n) * std::fabs(mean) / sd;
    }
    if (metric == "osm") {
        auto part = [&](BlockRange r) { return 1.0L / (1.0L + oracle_minkowski(r.slice(u), r.slice(v), 2)); };
        return (part(l.texture()) + part(l.color()) + part(l.shape())) / 3.0L;
    }
    const BlockRange r = l.color_histogram_range();
    const auto hq = r.slice(std::span<const double>(q.raw_fv));
    const auto hc = r.slice(std::span<const double>(c.raw_fv));
    if (metric == "histogram") {
        return oracle_minkowski(hq, hc, 2);
    }
    long double overlap = 0;
    for (std::size_t i = 0; i < hq.size(); ++i) {
        overlap += std::min(hq[i], hc[i]);
    }
    return overlap;
}

bool higher_is_better(const std::string& metric) {
    return metric == "osm" || metric == "intersection";
}

std::vector<std::pair<long double, std::string>> oracle_ranking(const IndexStore& store, const Signature& q,
                                                                const std::string& metric) {
    std::vector<std::pair<long double, std::string>> out;
    for (const Signature& c : store.signatures()) {
        out.emplace_back(oracle_score(metric, q, c, store.layout()), c.image_id);
    }
    const bool desc = higher_is_better(metric);
    std::sort(out.begin(), out.end(), [desc](const auto& a, const auto& b) {
        if (a.first != b.first) {
            return desc ? a.first > b.first : a.first < b.first;
        }
        return a.second < b.second;
    });
    return out;
}

std::vector<double> random_vec(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = d(rng);
    }
    return v;
}

Mask mask_from(int w, int h, const std::function<bool(int, int)>& inside) {
    Mask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            m.set(x, y, inside(x, y));
        }
    }
    return m;
}

Mask notched_l(int ox, int oy) {
    return mask_from(96, 96, [=](int x, int y) {
        const int u = x - ox, v = y - oy;
        const bool bar = u >= 0 && u < 12 && v >= 0 && v < 40;
        const bool foot = u >= 0 && u < 30 && v >= 28 && v < 40;
        const bool notch = u >= 20 && u < 24 && v >= 28 && v < 32;
        return (bar || foot) && !notch;
    });
}

Mask via_image(const Mask& m, const std::function<Image(const Image&)>& op) {
    Image img(m.width(), m.height(), 1);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            img.at(x, y) = m.at(x, y) ? 0 : 255;
        }
    }
    const Image out = op(img);
    return mask_from(out.width(), out.height(), [&](int x, int y) { return out.at(x, y) == 0; });
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

// --- criteria -----------------------------------------------------------------

Outcome golden_pixel_distance() {
    Outcome o;
    const Image a(3, 3, 1, {4, 3, 7, 0, 0, 1, 9, 5, 5});
    const Image b(3, 3, 1, {5, 3, 5, 0, 0, 0, 8, 5, 1});
    const double sq = pixel_distance(a, b, PixelDistanceKind::Squared);
    const double eu = pixel_distance(a, b, PixelDistanceKind::Euclidean);
    if (sq != 23.0) {
        o.fail(fmt::format("squared = {}", sq));
    }
    if (std::abs(eu - std::sqrt(23.0)) > 1e-12) {
        o.fail(fmt::format("euclidean = {}", eu));
    }
    o.detail = o.pass ? fmt::format("squared={} euclidean={}", sq, eu) : o.detail;
    return o;
}

Outcome metric_axioms() {
    Outcome o;
    std::mt19937 rng(20240611);
    std::vector<std::pair<std::string, std::function<double(std::span<const double>, std::span<const double>)>>> ds{
        {"l1", [](auto a, auto b) { return minkowski(a, b, 1.0); }},
        {"l2", [](auto a, auto b) { return minkowski(a, b, 2.0); }},
        {"minkowski:1", [](auto a, auto b) { return minkowski(a, b, 1.0); }},
        {"minkowski:2", [](auto a, auto b) { return minkowski(a, b, 2.0); }},
        {"minkowski:3", [](auto a, auto b) { return minkowski(a, b, 3.0); }},
        {"histogram", [](auto a, auto b) { return histogram_distance(a, b); }},
    };
    for (const auto& [name, d] : ds) {
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 2 + trial % 7;
            const auto x = random_vec(rng, n), y = random_vec(rng, n), z = random_vec(rng, n);
            const double dxy = d(x, y), dyx = d(y, x), dxz = d(x, z), dyz = d(y, z);
            if (dxy < 0.0) {
                o.fail(name + ": negative distance");
            }
            if (d(x, x) != 0.0 || !(dxy > 0.0)) {
                o.fail(name + ": identity of indiscernibles");
            }
            if (std::abs(dxy - dyx) > 1e-9) {
                o.fail(name + ": symmetry");
            }
            if (dxz > dxy + dyz + 1e-9) {
                o.fail(name + ": triangle inequality");
            }
        }
    }
    if (o.pass) {
        o.detail = fmt::format("{} metrics x 100 instances", ds.size());
    }
    return o;
}

Outcome oracle_ranking_equivalence() {
    Outcome o;
    const IndexStore store = build_index(fixtures::named(fixtures::oracle_corpus()), ExtractionConfig{}, {});
    std::size_t rankings = 0;
    for (const std::string& name : kMetrics) {
        const Metric m = parse_metric(name);
        for (const Signature& q : store.signatures()) {
            const auto expected = oracle_ranking(store, q, name);
            const auto got = query(store, q, store.size(), m);
            if (got.items.size() != expected.size()) {
                o.fail(fmt::format("{} / {}: {} results", name, q.image_id, got.items.size()));
                continue;
            }
            for (std::size_t i = 0; i < expected.size(); ++i) {
                const long double want = expected[i].first;
                const double tol = std::isinf(want) ? 0.0 : 1e-9 * std::max(1.0L, std::fabs(want));
                if (got.items[i].image_id != expected[i].second ||
                    (std::isinf(want) ? !std::isinf(got.items[i].score)
                                      : std::fabs(got.items[i].score - want) > tol)) {
                    o.fail(fmt::format("{} / {} rank {}: got {} ({}), oracle {} ({})", name, q.image_id, i + 1,
                                       got.items[i].image_id, got.items[i].score, expected[i].second,
                                       static_cast<double>(want)));
                    break;
                }
            }
            ++rankings;
        }
    }
    const auto dup = query(store, store.at("color_07_copy.ppm"), 2, parse_metric("l2"));
    if (dup.items.size() != 2 || dup.items[0].image_id != "color_07.ppm" || dup.items[1].image_id != "color_07_copy.ppm") {
        o.fail("duplicate tie not broken by ascending id");
    }
    if (o.pass) {
        o.detail = fmt::format("{} images, {} rankings over {} metrics", store.size(), rankings, kMetrics.size());
    }
    return o;
}

Outcome self_retrieval(const IndexStore& store) {
    Outcome o;
    std::size_t hits = 0, total = 0;
    for (const std::string& name : kMetrics) {
        const Metric m = parse_metric(name);
        const double best = m.is_similarity() ? 1.0 : 0.0;
        for (const Signature& q : store.signatures()) {
            ++total;
            const auto r = query(store, q, 1, m);
            if (r.items.empty() || r.items[0].image_id != q.image_id || std::abs(r.items[0].score - best) > 1e-12) {
                o.fail(fmt::format("{} / {}: rank 1 is {} ({})", name, q.image_id,
                                   r.items.empty() ? "-" : r.items[0].image_id,
                                   r.items.empty() ? 0.0 : r.items[0].score));
                continue;
            }
            ++hits;
        }
    }
    o.detail = fmt::format("{}/{} queries rank themselves first ({} images, {} metrics)", hits, total, store.size(),
                           kMetrics.size()) +
               (o.pass ? "" : "; first miss: " + o.detail);
    return o;
}

Outcome invariance_suite() {
    Outcome o;
    std::vector<std::string> notes;

    const auto base = hu_moments(notched_l(10, 12));
    const auto moved = hu_moments(notched_l(41, 37));
    const auto rotated = hu_moments(via_image(notched_l(10, 12), rotate90));
    const auto scaled = hu_moments(via_image(notched_l(10, 12), [](const Image& i) { return upscale(i, 2); }));
    const double dt = max_abs_diff(base, moved), dr = max_abs_diff(base, rotated), ds = max_abs_diff(base, scaled);
    if (dt > 1e-9) {
        o.fail(fmt::format("hu translation {}", dt));
    }
    if (dr > 1e-6) {
        o.fail(fmt::format("hu rotation {}", dr));
    }
    if (ds > 1e-3) {
        o.fail(fmt::format("hu scale {}", ds));
    }

    double df = 0.0;
    const Mask disk = mask_from(70, 70, [](int x, int y) { return (x - 33) * (x - 33) + (y - 36) * (y - 36) <= 400; });
    for (const Mask& m : {notched_l(10, 12), disk}) {
        const auto fd = fourier_descriptors(m, 10);
        df = std::max(df, max_abs_diff(fd, fourier_descriptors(via_image(m, rotate90), 10)));
        df = std::max(df, max_abs_diff(fd, fourier_descriptors(via_image(m, [](const Image& i) { return upscale(i, 2); }), 10)));
    }
    if (df > 0.02) {
        o.fail(fmt::format("fourier rotation/scale {}", df));
    }

    std::mt19937 rng(7);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 20; ++trial) {
        Image img(9 + trial, 7, 3);
        for (auto& v : img.data()) {
            v = static_cast<std::uint8_t>(byte(rng));
        }
        std::vector<std::size_t> order(img.pixel_count());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Image perm(img.width(), img.height(), 3);
        for (std::size_t i = 0; i < order.size(); ++i) {
            for (int c = 0; c < 3; ++c) {
                perm.data()[3 * i + c] = img.data()[3 * order[i] + c];
            }
        }
        if (hsv_histogram(img).bins != hsv_histogram(perm).bins ||
            histogram(to_grayscale(img)).bins != histogram(to_grayscale(perm)).bins) {
            o.fail("histogram changed under pixel permutation");
        }
    }

    std::uniform_real_distribution<double> scale(0.01, 100.0);
    double dc = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto u = random_vec(rng, 16);
        const auto v = random_vec(rng, 16);
        const double before = cosine_disparity(u, v);
        const double s = scale(rng);
        for (double& x : u) {
            x *= s;
        }
        dc = std::max(dc, std::abs(cosine_disparity(u, v) - before));
    }
    if (dc > 1e-9) {
        o.fail(fmt::format("cosine scaling {}", dc));
    }
    if (o.pass) {
        o.detail = fmt::format("hu t={:.1e} r={:.1e} s={:.1e}; fourier {:.3f}; cosine {:.1e}", dt, dr, ds, df, dc);
    }
    return o;
}

Outcome separable_retrieval(const IndexStore& store, const GroundTruth& truth) {
    Outcome o;
    // Separability check with a brute-force l2 sort that does not use query().
    std::size_t separable = 0;
    for (const Signature& q : store.signatures()) {
        const auto ranked = oracle_ranking(store, q, "l2");
        const auto& relevant = truth.at(q.image_id);
        const bool ok = std::all_of(ranked.begin(), ranked.begin() + 5,
                                    [&](const auto& r) { return relevant.count(r.second) > 0; });
        separable += ok ? 1 : 0;
    }
    if (separable != store.size()) {
        o.fail(fmt::format("corpus not separable: {}/{} queries have a pure top 5 under the oracle", separable,
                           store.size()));
        return o;
    }
    const auto report = evaluate_corpus(store, truth, 5, parse_metric("l2"));
    if (report.mean_precision != 1.0) {
        o.fail(fmt::format("mean P@5 = {}", report.mean_precision));
    }
    o.detail = fmt::format("oracle-separable {}/{}; mean P@5 = {:.4f}", separable, store.size(), report.mean_precision) +
               (o.pass ? "" : "; " + o.detail);
    return o;
}

Outcome golden_precision_recall() {
    Outcome o;
    const double p = precision({8, 10, 20});
    const double r = recall({8, 10, 20});
    if (p != 0.8) {
        o.fail(fmt::format("precision(8, 10) = {}", p));
    }
    if (r != 0.4) {
        o.fail(fmt::format("recall(8, 20) = {}", r));
    }
    const auto curve = pr_curve(std::vector<std::string>{"a", "b", "c"}, {"a", "c"});
    const std::vector<std::pair<double, double>> want{{0.5, 1.0}, {0.5, 0.5}, {1.0, 2.0 / 3.0}};
    for (std::size_t i = 0; i < want.size(); ++i) {
        if (curve.size() != want.size() || curve[i].recall != want[i].first || curve[i].precision != want[i].second) {
            o.fail("pr curve differs from [(0.5,1), (0.5,0.5), (1,2/3)]");
            break;
        }
    }
    if (o.pass) {
        o.detail = fmt::format("P={} R={} curve=[(0.5,1), (0.5,0.5), (1,{:.4f})]", p, r, curve[2].precision);
    }
    return o;
}

std::vector<double> centroid(const IndexStore& store, const std::vector<std::string>& ids) {
    std::vector<double> c(store.layout().total(), 0.0);
    for (const auto& id : ids) {
        const auto& fv = store.at(id).fv;
        for (std::size_t i = 0; i < c.size(); ++i) {
            c[i] += fv[i];
        }
    }
    for (double& v : c) {
        v /= static_cast<double>(ids.size());
    }
    return c;
}

Outcome rocchio_property(const IndexStore& store, const GroundTruth& truth) {
    Outcome o;
    const Metric l2 = parse_metric("l2");
    double p1 = 0.0, p2 = 0.0;
    double cos_before = 0.0, cos_after = 0.0, l2_before = 0.0, l2_after = 0.0;
    std::size_t closer = 0;
    for (const Signature& q : store.signatures()) {
        const auto& relevant = truth.at(q.image_id);
        FeedbackSession session = start_session(q, store);
        const auto round1 = session_query(session, store, 5, l2);
        LabelMap labels;
        std::vector<std::string> marked;
        std::size_t hits1 = 0;
        for (const auto& item : round1.items) {
            const bool rel = relevant.count(item.image_id) > 0;
            labels[item.image_id] = rel ? Label::Relevant : Label::NotRelevant;
            if (rel) {
                marked.push_back(item.image_id);
                ++hits1;
            }
        }
        apply_feedback(session, labels, store);
        const auto round2 = session_query(session, store, 5, l2);
        std::size_t hits2 = 0;
        for (const auto& item : round2.items) {
            hits2 += relevant.count(item.image_id);
        }
        p1 += static_cast<double>(hits1) / 5.0;
        p2 += static_cast<double>(hits2) / 5.0;

        if (!marked.empty()) {
            const auto c = centroid(store, marked);
            const double cb = cosine_disparity(q.fv, c), ca = cosine_disparity(session.current.fv, c);
            cos_before += cb;
            cos_after += ca;
            l2_before += minkowski(q.fv, c, 2.0);
            l2_after += minkowski(session.current.fv, c, 2.0);
            if (ca < cb) {
                ++closer;
            } else {
                o.fail(fmt::format("{}: cosine distance to centroid {} -> {}", q.image_id, cb, ca));
            }
        }
    }
    const double n = static_cast<double>(store.size());
    p1 /= n;
    p2 /= n;
    if (p2 < p1) {
        o.fail(fmt::format("mean P@5 dropped {} -> {}", p1, p2));
    }
    o.detail = fmt::format("mean P@5 {:.4f} -> {:.4f}; centroid cosine distance {:.6f} -> {:.6f} (closer {}/{}); "
                           "l2 {:.4f} -> {:.4f}",
                           p1, p2, cos_before / n, cos_after / n, closer, store.size(), l2_before / n, l2_after / n) +
               (o.pass ? "" : "; " + o.detail);
    return o;
}

Outcome index_round_trip() {
    Outcome o;
    const IndexStore store = build_index(fixtures::named(fixtures::oracle_corpus()), ExtractionConfig{}, {});
    const auto path = std::filesystem::temp_directory_path() / "cbir_acceptance_roundtrip.idx";
    save_index(store, path);
    const IndexStore loaded = load_index(path);
    std::filesystem::remove(path);
    if (!(loaded == store)) {
        o.fail("loaded store differs from the saved one");
    }
    std::size_t compared = 0;
    for (const std::string& name : kMetrics) {
        const Metric m = parse_metric(name);
        for (const Signature& q : store.signatures()) {
            const auto a = query(store, q, store.size(), m);
            const auto b = query(loaded, loaded.at(q.image_id), loaded.size(), m);
            if (a.items.size() != b.items.size()) {
                o.fail(name + " / " + q.image_id + ": result count differs");
                continue;
            }
            for (std::size_t i = 0; i < a.items.size(); ++i) {
                if (a.items[i].image_id != b.items[i].image_id ||
                    std::bit_cast<std::uint64_t>(a.items[i].score) != std::bit_cast<std::uint64_t>(b.items[i].score)) {
                    o.fail(fmt::format("{} / {} rank {} differs", name, q.image_id, i + 1));
                    break;
                }
                ++compared;
            }
        }
    }
    if (o.pass) {
        o.detail = fmt::format("{} ranked entries identical across {} metrics", compared, kMetrics.size());
    }
    return o;
}

} // namespace

int main() {
    int failures = 0;
    auto run = [&](const std::string& name, const std::function<Outcome()>& fn) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << fmt::format("{} {}  [{:.2f}s] {}\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail)
                  << std::flush;
        failures += o.pass ? 0 : 1;
    };

    const auto corpus = fixtures::separable_corpus();
    const IndexStore separable = build_index(fixtures::named(corpus), ExtractionConfig{}, {});
    const GroundTruth truth = fixtures::class_ground_truth(corpus);

    run("pixel-distance-golden", golden_pixel_distance);
    run("metric-axioms", metric_axioms);
    run("oracle-ranking", oracle_ranking_equivalence);
    run("self-retrieval", [&] { return self_retrieval(separable); });
    run("invariance", invariance_suite);
    run("separable-p-at-5", [&] { return separable_retrieval(separable, truth); });
    run("precision-recall-golden", golden_precision_recall);
    run("rocchio", [&] { return rocchio_property(separable, truth); });
    run("index-round-trip", index_round_trip);

    std::cout << fmt::format("{} of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
