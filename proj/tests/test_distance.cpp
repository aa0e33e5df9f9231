#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "drtr/distance.hpp"
#include "drtr/errors.hpp"
#include "drtr/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace drtr;

TEST_CASE("lambda schedule") {
    ScheduleConfig cfg; // lambda0=0.1, rho=0.05, lambda_min=0.01
    CHECK(lambda_schedule(2, cfg) == doctest::Approx(0.10048374180359596).epsilon(1e-12));
    cfg.rho = 0.0;
    for (int k = 1; k <= 4; ++k) {
        CHECK(lambda_schedule(k, cfg) == doctest::Approx(cfg.lambda0 + cfg.lambda_min));
    }
    cfg.rho = 0.3;
    double prev = lambda_schedule(1, cfg);
    for (int k = 2; k <= 40; ++k) {
        const double cur = lambda_schedule(k, cfg);
        CHECK(cur < prev);          // monotone from above
        CHECK(cur > cfg.lambda_min); // never reaches the floor
        prev = cur;
    }
    CHECK(lambda_schedule(500, cfg) == doctest::Approx(cfg.lambda_min).epsilon(1e-9));
}

TEST_CASE("semantic distance worked examples") {
    ScheduleConfig cfg; // beta1 = beta2 = 1, table lambda schedule

    // Identical non-zero vectors at k=1: pure penalty through lambda_1.
    std::vector<double> x{0.6, -0.2, 1.1};
    const auto same = semantic_distance(x, x, 1, cfg);
    CHECK(same.euclid_sq == 0.0);
    CHECK(same.penalty == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.lambda_k == doctest::Approx(0.10512294245007141).epsilon(1e-12));
    CHECK(same.total == doctest::Approx(0.10512294245007141).epsilon(1e-9));

    // Orthogonal unit vectors at k=2.
    std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
    const auto ortho = semantic_distance(e1, e2, 2, cfg);
    CHECK(ortho.euclid_sq == doctest::Approx(2.0));
    CHECK(ortho.penalty == doctest::Approx(5.0)); // k^2 = 4 plus divergence 1

    // Penalty off reduces to squared Euclidean distance.
    ScheduleConfig off = cfg;
    off.beta1 = 0.0;
    off.beta2 = 0.0;
    const auto pure = semantic_distance(e1, e2, 3, off);
    CHECK(pure.total == doctest::Approx(2.0));

    // Zero vector: cosine defined as 0, divergence 1.
    std::vector<double> zero{0.0, 0.0};
    const auto z = semantic_distance(zero, e2, 1, cfg);
    CHECK(z.penalty == doctest::Approx(2.0)); // 1*1 + 1*(1-0)

    CHECK_THROWS_AS(semantic_distance(e1, std::vector<double>{1.0, 0.0, 0.0}, 1, cfg),
                    ShapeError);
}

TEST_CASE("semantic distance invariants on random vectors") {
    Rng rng(3);
    ScheduleConfig cfg;
    cfg.beta1 = 0.7;
    cfg.beta2 = 1.3;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(6), b(6);
        for (double& x : a) x = rng.uniform(-2.0, 2.0);
        for (double& x : b) x = rng.uniform(-2.0, 2.0);
        const int k = 1 + static_cast<int>(rng.below(3));
        const auto rec = semantic_distance(a, b, k, cfg);
        CHECK(rec.total == rec.euclid_sq + rec.lambda_k * rec.penalty);
        CHECK(rec.total == doctest::Approx(oracle::distance_total(a, b, k, cfg)).epsilon(1e-12));

        // Scaling all features by c > 1 scales euclid_sq by c^2 and leaves
        // the cosine term untouched.
        const double c = 1.0 + rng.uniform();
        std::vector<double> ca(a), cb(b);
        for (double& x : ca) x *= c;
        for (double& x : cb) x *= c;
        const auto scaled = semantic_distance(ca, cb, k, cfg);
        CHECK(scaled.euclid_sq == doctest::Approx(c * c * rec.euclid_sq).epsilon(1e-9));
        CHECK(scaled.penalty == doctest::Approx(rec.penalty).epsilon(1e-9));
    }
}

TEST_CASE("percentile threshold nearest rank") {
    CHECK(percentile_threshold({1.0, 2.0, 3.0, 4.0}, 0.75) == doctest::Approx(3.0));
    CHECK(percentile_threshold({4.0, 1.0, 3.0, 2.0}, 0.75) == doctest::Approx(3.0));
    CHECK(percentile_threshold({5.0, 5.0, 5.0}, 0.5) == doctest::Approx(5.0));
    CHECK(percentile_threshold({2.0, 9.0, 7.0}, 0.999) == doctest::Approx(9.0));
    CHECK(percentile_threshold({8.0}, 0.25) == doctest::Approx(8.0));
    // FP-noise guard: p * n slightly above an integer must not bump the rank.
    std::vector<double> ten;
    for (int i = 1; i <= 10; ++i) ten.push_back(i);
    CHECK(percentile_threshold(ten, 0.1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(percentile_threshold({}, 0.5), InvalidArgumentError);
}

TEST_CASE("prune_shells keeps exactly ceil(p*n) per tie-free shell") {
    GraphStore g = testutil::random_graph(40, 0.2, 4, 2, 19);
    HopShells shells = build_hop_shells(g, 2, 32, 19);
    ScheduleConfig cfg;
    cfg.hops = 2;
    for (double p : {0.25, 0.5, 0.75}) {
        cfg.percentile_p = p;
        const PruneFragment frag = prune_shells(g, shells, cfg);
        std::set<std::tuple<NodeId, int, NodeId>> pruned;
        for (const auto& d : frag.pruned) pruned.insert({d.v, d.k, d.u});
        for (NodeId v = 0; v < g.node_count(); ++v) {
            for (int k = 1; k <= 2; ++k) {
                const std::size_t n = shells.active_count(v, k);
                if (n == 0) continue;
                std::size_t kept = 0;
                for (const auto& e : shells.shell(v, k)) {
                    if (e.active && !pruned.count({v, k, e.node})) ++kept;
                }
                CHECK(kept == static_cast<std::size_t>(std::ceil(p * n - 1e-9)));
                CHECK(kept >= 1);
            }
        }
    }
}

TEST_CASE("prune_shells singleton shells survive, top percentile prunes nothing") {
    GraphStore g = testutil::path_graph(2, 3);
    HopShells shells = build_hop_shells(g, 1, 32, 1);
    ScheduleConfig cfg;
    cfg.hops = 1;
    cfg.percentile_p = 0.25;
    CHECK(prune_shells(g, shells, cfg).pruned.empty());

    GraphStore g2 = testutil::random_graph(30, 0.3, 3, 2, 4);
    HopShells shells2 = build_hop_shells(g2, 2, 32, 4);
    ScheduleConfig top;
    top.hops = 2;
    top.percentile_p = 0.9999999;
    CHECK(prune_shells(g2, shells2, top).pruned.empty());
}

TEST_CASE("prune retention is monotone in p") {
    GraphStore g = testutil::random_graph(25, 0.3, 4, 2, 23);
    HopShells shells = build_hop_shells(g, 2, 32, 23);
    ScheduleConfig cfg;
    cfg.hops = 2;
    auto retained_set = [&](double p) {
        cfg.percentile_p = p;
        std::set<std::tuple<NodeId, int, NodeId>> pruned;
        for (const auto& d : prune_shells(g, shells, cfg).pruned) {
            pruned.insert({d.v, d.k, d.u});
        }
        std::set<std::tuple<NodeId, int, NodeId>> kept;
        for (NodeId v = 0; v < g.node_count(); ++v) {
            for (int k = 1; k <= 2; ++k) {
                for (const auto& e : shells.shell(v, k)) {
                    if (e.active && !pruned.count({v, k, e.node})) kept.insert({v, k, e.node});
                }
            }
        }
        return kept;
    };
    const auto low = retained_set(0.25);
    const auto mid = retained_set(0.5);
    const auto high = retained_set(0.75);
    CHECK(std::includes(mid.begin(), mid.end(), low.begin(), low.end()));
    CHECK(std::includes(high.begin(), high.end(), mid.begin(), mid.end()));
}

TEST_CASE("four distinct distances at p=0.75 prune exactly the farthest") {
    // Star center 0 with 4 leaves at increasing feature distance.
    Matrix features(5, 1);
    features.at(0, 0) = 0.0;
    features.at(1, 0) = 1.0;
    features.at(2, 0) = 2.0;
    features.at(3, 0) = 3.0;
    features.at(4, 0) = 4.0;
    GraphStore g = build_graph({{0, 1}, {0, 2}, {0, 3}, {0, 4}}, std::move(features), {});
    HopShells shells = build_hop_shells(g, 1, 32, 1);
    ScheduleConfig cfg;
    cfg.hops = 1;
    cfg.percentile_p = 0.75;
    const PruneFragment frag = prune_shells(g, shells, cfg);
    // Node 0's shell prunes exactly node 4; leaf shells are singletons
    // except none have >1 entries at hop 1 here.
    std::size_t from_center = 0;
    for (const auto& d : frag.pruned) {
        if (d.v == 0) {
            ++from_center;
            CHECK(d.u == 4);
            CHECK(d.distance > d.alpha);
        }
    }
    CHECK(from_center == 1);
}
