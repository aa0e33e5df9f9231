#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "drtr/diffusion.hpp"
#include "drtr/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace drtr;

namespace {

ScheduleConfig small_cfg(int hops, int hidden) {
    ScheduleConfig cfg;
    cfg.hops = hops;
    cfg.hidden_dim = hidden;
    return cfg;
}

} // namespace

TEST_CASE("temperature decay schedule") {
    ScheduleConfig cfg;
    CHECK(temperature(3, cfg) == doctest::Approx(0.7408182206817179).epsilon(1e-12));
    CHECK(temperature(1, cfg) == doctest::Approx(0.9048374180359595).epsilon(1e-12));
    cfg.eta_decay = 0.0;
    for (int k = 1; k <= 5; ++k) CHECK(temperature(k, cfg) == doctest::Approx(cfg.tau0));
    // Strictly decreasing when the decay is positive.
    cfg.eta_decay = 0.1;
    for (int k = 1; k < 8; ++k) CHECK(temperature(k + 1, cfg) < temperature(k, cfg));
}

TEST_CASE("attention: identical neighbors split evenly, singleton gets 1") {
    Matrix features(3, 2);
    features.at(0, 0) = 0.3;
    features.at(0, 1) = -0.7;
    features.at(1, 0) = 1.0;
    features.at(1, 1) = 0.5;
    features.at(2, 0) = 1.0;
    features.at(2, 1) = 0.5; // same as node 1
    GraphStore g = build_graph({{0, 1}, {0, 2}}, std::move(features), {});
    HopShells shells = build_hop_shells(g, 1, 32, 1);
    ScheduleConfig cfg = small_cfg(1, 4);
    DiffusionParams params = init_params(2, 4, 1, 2, 7);

    const auto alphas = attention_weights(g, shells, params, 0, 1, cfg);
    REQUIRE(alphas.size() == 2);
    CHECK(alphas[0].second == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(alphas[1].second == doctest::Approx(0.5).epsilon(1e-12));

    const auto single = attention_weights(g, shells, params, 1, 1, cfg);
    REQUIRE(single.size() == 1);
    CHECK(single[0].second == doctest::Approx(1.0));

    // Empty shell -> empty map.
    GraphStore iso = build_graph({{0, 1}}, Matrix(3, 2), {});
    HopShells iso_shells = build_hop_shells(iso, 1, 32, 1);
    CHECK(attention_weights(iso, iso_shells, params, 2, 1, cfg).empty());
}

TEST_CASE("attention matches scalar-loop oracle on random instances") {
    for (std::uint64_t seed = 7; seed < 27; ++seed) {
        GraphStore g = testutil::random_graph(12, 0.35, 3, 2, seed);
        HopShells shells = build_hop_shells(g, 2, 32, seed);
        ScheduleConfig cfg = small_cfg(2, 5);
        DiffusionParams params = init_params(3, 5, 2, 2, seed);
        const auto w_rows = oracle::to_rows(params.hop_transforms[0]);
        for (NodeId v = 0; v < g.node_count(); ++v) {
            const auto expected =
                oracle::attention_row(g, shells, w_rows, params.attention_vector, v, 1, cfg);
            const auto got = attention_weights(g, shells, params, v, 1, cfg);
            REQUIRE(got.size() == expected.size());
            double sum = 0.0;
            for (const auto& [u, alpha] : got) {
                REQUIRE(expected.count(u) == 1);
                CHECK(alpha == doctest::Approx(expected.at(u)).epsilon(1e-9));
                CHECK(alpha > 0.0);
                sum += alpha;
            }
            if (!got.empty()) CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("attention sharpens as temperature drops") {
    GraphStore g = testutil::random_graph(10, 0.5, 3, 2, 3);
    HopShells shells = build_hop_shells(g, 1, 32, 3);
    DiffusionParams params = init_params(3, 6, 1, 2, 3);
    ScheduleConfig warm = small_cfg(1, 6);
    ScheduleConfig cold = warm;
    cold.tau0 = 0.25;
    for (NodeId v = 0; v < g.node_count(); ++v) {
        const auto a_warm = attention_weights(g, shells, params, v, 1, warm);
        const auto a_cold = attention_weights(g, shells, params, v, 1, cold);
        if (a_warm.size() < 2) continue;
        auto max_of = [](const auto& xs) {
            double m = 0.0;
            for (const auto& [u, a] : xs) m = std::max(m, a);
            return m;
        };
        const double mw = max_of(a_warm);
        if (mw > 1.0 / a_warm.size() + 1e-12) { // non-constant scores
            CHECK(max_of(a_cold) > mw);
        }
    }
}

TEST_CASE("hop_aggregate basic identities") {
    Matrix features(3, 2);
    features.at(0, 0) = 0.2;
    features.at(1, 0) = -0.4;
    features.at(1, 1) = 0.9;
    features.at(2, 0) = -0.4;
    features.at(2, 1) = 0.9;
    GraphStore g = build_graph({{0, 1}, {0, 2}}, std::move(features), {});
    HopShells shells = build_hop_shells(g, 1, 32, 1);
    ScheduleConfig cfg = small_cfg(1, 4);
    DiffusionParams params = init_params(2, 4, 1, 2, 11);

    // Single neighbor: exactly W x_u.
    const auto h1 = hop_aggregate(g, shells, params, 1, 1, cfg);
    std::vector<double> expect(4);
    row_times_matrix(g.feature_row(0), params.hop_transforms[0], expect);
    for (int i = 0; i < 4; ++i) CHECK(h1[i] == doctest::Approx(expect[i]).epsilon(1e-12));

    // Equal-feature neighbors: convex combination collapses to W x.
    const auto h0 = hop_aggregate(g, shells, params, 0, 1, cfg);
    row_times_matrix(g.feature_row(1), params.hop_transforms[0], expect);
    for (int i = 0; i < 4; ++i) CHECK(h0[i] == doctest::Approx(expect[i]).epsilon(1e-10));

    // Empty shell: zero vector.
    GraphStore iso = build_graph({{0, 1}}, Matrix(3, 2), {});
    HopShells iso_shells = build_hop_shells(iso, 1, 32, 1);
    for (double x : hop_aggregate(iso, iso_shells, params, 2, 1, cfg)) CHECK(x == 0.0);
}

TEST_CASE("layer_norm formula") {
    const double eps = 1e-5;
    // Constant vector normalizes to zero.
    for (double x : layer_norm(std::vector<double>{3.5, 3.5, 3.5}, eps)) CHECK(x == 0.0);

    // [1,-1]: mean 0, population std 1.
    const auto two = layer_norm(std::vector<double>{1.0, -1.0}, eps);
    CHECK(two[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(two[1] == doctest::Approx(-1.0).epsilon(1e-4));

    // Shift invariance and moments on random vectors.
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> h(16);
        for (double& x : h) x = rng.uniform(-2.0, 2.0);
        auto shifted = h;
        for (double& x : shifted) x += 0.37;
        const auto a = layer_norm(h, eps);
        const auto b = layer_norm(shifted, eps);
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
            mean += a[i];
        }
        mean /= a.size();
        CHECK(std::abs(mean) < 1e-6);
        for (double x : a) var += (x - mean) * (x - mean);
        CHECK(std::sqrt(var / a.size()) == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("combine_hops weighting") {
    DiffusionParams params = init_params(2, 3, 3, 2, 1);
    params.hop_logits = {0.0, 0.0, 0.0};
    std::vector<std::vector<double>> hops = {{3.0, 0.0, 0.0}, {0.0, 3.0, 0.0}, {0.0, 0.0, 3.0}};
    const auto mean = combine_hops(hops, params);
    for (double x : mean) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));

    DiffusionParams two = init_params(2, 2, 2, 2, 1);
    two.hop_logits = {10.0, -10.0};
    const auto gamma = two.hop_weights();
    CHECK(gamma[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(gamma[0] + gamma[1] == doctest::Approx(1.0).epsilon(1e-12));
    const auto z = combine_hops({{1.0, 2.0}, {-5.0, 7.0}}, two);
    CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(z[1] == doctest::Approx(2.0).epsilon(1e-7));

    // Equal hop vectors pass through for any logits.
    two.hop_logits = {0.3, -1.2};
    const auto same = combine_hops({{4.0, -1.0}, {4.0, -1.0}}, two);
    CHECK(same[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(same[1] == doctest::Approx(-1.0).epsilon(1e-12));

    CHECK_THROWS_AS(combine_hops({{1.0, 2.0}}, two), ShapeError);
}

TEST_CASE("hop weights stay in the simplex interior") {
    DiffusionParams params = init_params(2, 2, 4, 2, 9);
    params.hop_logits = {50.0, -50.0, 0.0, 3.0};
    const auto gamma = params.hop_weights();
    double sum = 0.0;
    for (double gk : gamma) {
        CHECK(gk > 0.0);
        sum += gk;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("forward on an edgeless graph is bias only") {
    Matrix features(4, 3);
    features.fill(0.5);
    GraphStore g = build_graph({}, std::move(features), {{0, 0}, {1, 1}});
    HopShells shells = build_hop_shells(g, 2, 32, 1);
    ScheduleConfig cfg = small_cfg(2, 4);
    DiffusionParams params = init_params(3, 4, 2, 2, 3);
    params.classifier_bias = {0.25, -0.75};
    const ForwardResult res = forward(g, shells, params, cfg);
    for (double x : res.embeddings.data()) CHECK(x == 0.0);
    for (NodeId v = 0; v < 4; ++v) {
        CHECK(res.logits.at(v, 0) == doctest::Approx(0.25));
        CHECK(res.logits.at(v, 1) == doctest::Approx(-0.75));
    }
}

TEST_CASE("forward matches dense scalar oracle on random instances") {
    for (std::uint64_t seed = 3; seed < 23; ++seed) {
        GraphStore g = testutil::random_graph(10, 0.3, 4, 3, seed);
        HopShells shells = build_hop_shells(g, 3, 32, seed);
        ScheduleConfig cfg = small_cfg(3, 6);
        DiffusionParams params = init_params(4, 6, 3, 3, seed + 100);
        params.hop_logits = {0.2, -0.1, 0.4};

        std::vector<std::vector<std::vector<double>>> w_hops;
        for (const auto& w : params.hop_transforms) w_hops.push_back(oracle::to_rows(w));
        const auto expected = oracle::forward(g, shells, w_hops, params.attention_vector,
                                              params.hop_logits,
                                              oracle::to_rows(params.classifier),
                                              params.classifier_bias, cfg, true);
        const ForwardResult got = forward(g, shells, params, cfg, true);
        for (NodeId v = 0; v < g.node_count(); ++v) {
            for (std::size_t i = 0; i < 6; ++i) {
                CHECK(got.embeddings.at(v, i) ==
                      doctest::Approx(expected.z[v][i]).epsilon(1e-8));
            }
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(got.logits.at(v, c) ==
                      doctest::Approx(expected.logits[v][c]).epsilon(1e-8));
            }
        }

        // Mean-aggregation mode against the same oracle.
        const auto expected_mean = oracle::forward(g, shells, w_hops, params.attention_vector,
                                                   params.hop_logits,
                                                   oracle::to_rows(params.classifier),
                                                   params.classifier_bias, cfg, false);
        const ForwardResult got_mean = forward(g, shells, params, cfg, false);
        for (NodeId v = 0; v < g.node_count(); ++v) {
            for (std::size_t i = 0; i < 6; ++i) {
                CHECK(got_mean.embeddings.at(v, i) ==
                      doctest::Approx(expected_mean.z[v][i]).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("forward is permutation equivariant") {
    const NodeId n = 14;
    GraphStore g = testutil::random_graph(n, 0.25, 3, 2, 31);
    ScheduleConfig cfg = small_cfg(2, 5);
    cfg.shell_cap = 1000; // no sampling, shells are exact sets
    DiffusionParams params = init_params(3, 5, 2, 2, 31);
    HopShells shells = build_hop_shells(g, 2, cfg.shell_cap, 1);
    const ForwardResult base = forward(g, shells, params, cfg);

    // Apply the permutation v -> (v * 5 + 3) mod n (5 coprime to 14).
    std::vector<NodeId> perm(n);
    for (NodeId v = 0; v < n; ++v) perm[v] = static_cast<NodeId>((5 * v + 3) % n);
    EdgeList edges;
    for (const auto& [a, b] : g.edge_list()) edges.emplace_back(perm[a], perm[b]);
    Matrix feat(n, 3);
    for (NodeId v = 0; v < n; ++v) {
        for (int c = 0; c < 3; ++c) feat.at(perm[v], c) = g.features().at(v, c);
    }
    GraphStore pg = build_graph(edges, std::move(feat), {});
    HopShells pshells = build_hop_shells(pg, 2, cfg.shell_cap, 1);
    const ForwardResult permuted = forward(pg, pshells, params, cfg);

    for (NodeId v = 0; v < n; ++v) {
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(permuted.embeddings.at(perm[v], i) ==
                  doctest::Approx(base.embeddings.at(v, i)).epsilon(1e-9));
        }
    }
}

TEST_CASE("forward reports numeric failures with context") {
    GraphStore g = testutil::random_graph(6, 0.5, 2, 2, 2);
    HopShells shells = build_hop_shells(g, 1, 32, 1);
    ScheduleConfig cfg = small_cfg(1, 3);
    DiffusionParams params = init_params(2, 3, 1, 2, 2);
    params.attention_vector[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(forward(g, shells, params, cfg), NumericError);
}
