#include "drtr/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "drtr/diffusion.hpp"
#include "drtr/distance.hpp"
#include "drtr/errors.hpp"
#include "drtr/metrics.hpp"
#include "drtr/rng.hpp"

namespace drtr {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double frobenius_diff(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Sample `count` distinct unordered node pairs, uniformly.
EdgeList sample_pairs(NodeId n, std::size_t count, Rng& rng) {
    std::set<std::pair<NodeId, NodeId>> picked;
    while (picked.size() < count) {
        const NodeId a = static_cast<NodeId>(rng.below(n));
        const NodeId b = static_cast<NodeId>(rng.below(n));
        if (a == b) continue;
        picked.insert(std::minmax(a, b));
    }
    return {picked.begin(), picked.end()};
}

} // namespace

nlohmann::ordered_json ExperimentResult::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["config"] = config;
    j["per_seed"] = per_seed;
    j["aggregates"] = aggregates;
    j["timings"] = timings;
    return j;
}

void ExperimentResult::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw MalformedInputError("experiment result: cannot write '" + path + "'");
    out << to_json().dump(2) << '\n';
}

std::pair<double, double> aggregate_field(std::span<const nlohmann::ordered_json> rows,
                                          const std::string& field) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.contains(field)) values.push_back(row.at(field).get<double>());
    }
    if (values.empty()) {
        throw InvalidArgumentError("aggregate_field: no rows carry '" + field + "'");
    }
    return {mean_of(values), population_variance(values)};
}

ExperimentResult stability_experiment(const GraphStore& g, const DiffusionParams& params,
                                      const ScheduleConfig& cfg, std::span<const int> deltas,
                                      int seeds) {
    const NodeId n = g.node_count();
    const std::size_t all_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
    for (int d : deltas) {
        if (d < 0 || static_cast<std::size_t>(d) > all_pairs) {
            throw InvalidArgumentError("stability_experiment: delta " + std::to_string(d) +
                                       " exceeds available edge flips");
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t shell_seed = mix_seed(cfg.seed, 0x52);
    const HopShells base_shells = build_hop_shells(g, cfg.hops, cfg.shell_cap, shell_seed);
    const ForwardResult base = forward(g, base_shells, params, cfg, true);
    const EdgeList base_edges = g.edge_list();
    const std::set<std::pair<NodeId, NodeId>> base_set(base_edges.begin(), base_edges.end());

    std::vector<std::pair<NodeId, int>> labels;
    for (NodeId v = 0; v < n; ++v) {
        if (g.label(v) != GraphStore::kUnlabeled) labels.emplace_back(v, g.label(v));
    }

    ExperimentResult res;
    res.name = "stability";
    res.config = nlohmann::ordered_json::parse(config_to_json_text(cfg));

    for (int s = 0; s < seeds; ++s) {
        Rng rng(mix_seed(cfg.seed, 4000 + s));
        for (int delta : deltas) {
            const EdgeList flips = sample_pairs(n, static_cast<std::size_t>(delta), rng);
            EdgeList edges;
            edges.reserve(base_edges.size() + flips.size());
            std::set<std::pair<NodeId, NodeId>> flip_set(flips.begin(), flips.end());
            for (const auto& e : base_edges) {
                if (!flip_set.count(e)) edges.push_back(e); // flipped off
            }
            for (const auto& e : flips) {
                if (!base_set.count(e)) edges.push_back(e); // flipped on
            }
            GraphStore g2 = build_graph(edges, g.features(), labels);
            const HopShells shells2 = build_hop_shells(g2, cfg.hops, cfg.shell_cap, shell_seed);
            const ForwardResult r2 = forward(g2, shells2, params, cfg, true);
            const double fro = frobenius_diff(base.embeddings, r2.embeddings);

            nlohmann::ordered_json row;
            row["seed"] = s;
            row["delta"] = delta;
            row["fro_diff"] = fro;
            if (delta > 0) {
                row["ratio"] = fro / (static_cast<double>(delta) * std::sqrt(static_cast<double>(n)));
            }
            res.per_seed.push_back(std::move(row));
        }
    }

    // Per-delta mean ratios and the spread between them.
    nlohmann::ordered_json per_delta;
    double max_ratio = 0.0, max_mean = 0.0, min_mean = 0.0;
    bool first = true;
    for (int delta : deltas) {
        if (delta == 0) continue;
        std::vector<double> ratios;
        for (const auto& row : res.per_seed) {
            if (row.at("delta").get<int>() == delta) {
                ratios.push_back(row.at("ratio").get<double>());
                max_ratio = std::max(max_ratio, ratios.back());
            }
        }
        const double m = mean_of(ratios);
        per_delta[std::to_string(delta)] = m;
        if (first) {
            max_mean = min_mean = m;
            first = false;
        } else {
            max_mean = std::max(max_mean, m);
            min_mean = std::min(min_mean, m);
        }
    }
    res.aggregates["per_delta_mean_ratio"] = per_delta;
    res.aggregates["max_ratio"] = max_ratio;
    if (!first && min_mean > 0.0) {
        res.aggregates["mean_ratio_spread"] = max_mean / min_mean;
    }
    res.timings["wall_clock_s"] = seconds_since(t0);
    return res;
}

ExperimentResult ablation_experiment(const SbmSpec& spec, const ScheduleConfig& cfg,
                                     int seeds, double labeled_fraction) {
    if (seeds < 2) throw InvalidArgumentError("ablation_experiment: needs >= 2 seeds");
    if (!(spec.p_in > spec.p_out)) {
        throw InvalidArgumentError("ablation_experiment: planted structure requires p_in > p_out");
    }

    const Mode modes[] = {Mode::baseline, Mode::gdra, Mode::gkhda, Mode::gkhddra};
    const auto t0 = std::chrono::steady_clock::now();

    ExperimentResult res;
    res.name = "ablation";
    res.config = nlohmann::ordered_json::parse(config_to_json_text(cfg));
    res.config["sbm"] = nlohmann::ordered_json::parse(sbm_spec_to_json_text(spec));
    res.config["seeds"] = seeds;
    res.config["labeled_fraction"] = labeled_fraction;

    for (int s = 0; s < seeds; ++s) {
        SbmSpec spec_s = spec;
        spec_s.seed = mix_seed(spec.seed, 6000 + s);
        SbmGraph sbm = gen_sbm(spec_s);
        sbm.graph.set_labeled_set(
            stratified_labeled_set(spec_s, labeled_fraction, mix_seed(spec_s.seed, 77)));

        ScheduleConfig cfg_s = cfg;
        cfg_s.seed = mix_seed(cfg.seed, 8000 + s);

        for (Mode mode : modes) {
            const auto m0 = std::chrono::steady_clock::now();
            const FitResult fr = fit(sbm.graph, cfg_s, mode); // fresh copy per mode inside
            nlohmann::ordered_json row;
            row["seed"] = s;
            row["mode"] = to_string(mode);
            row["test_acc"] = fr.test_acc;
            row["val_acc"] = fr.best_val_acc;
            row["epochs_run"] = fr.epochs_run;
            row["best_epoch"] = fr.best_epoch;
            row["time_s"] = seconds_since(m0);
            res.per_seed.push_back(std::move(row));
        }
    }

    nlohmann::ordered_json agg;
    double base_var = 0.0, base_mean = 0.0, base_time = 0.0;
    for (Mode mode : modes) {
        std::vector<double> accs, times;
        for (const auto& row : res.per_seed) {
            if (row.at("mode").get<std::string>() == to_string(mode)) {
                accs.push_back(row.at("test_acc").get<double>());
                times.push_back(row.at("time_s").get<double>());
            }
        }
        nlohmann::ordered_json m;
        m["mean_acc"] = mean_of(accs);
        m["var_acc"] = population_variance(accs);
        m["mean_time_s"] = mean_of(times);
        if (mode == Mode::baseline) {
            base_mean = m["mean_acc"].get<double>();
            base_var = m["var_acc"].get<double>();
            base_time = m["mean_time_s"].get<double>();
        } else {
            m["acc_gain"] = m["mean_acc"].get<double>() - base_mean;
            m["variance_reduction_pct"] =
                base_var > 0.0
                    ? 100.0 * (base_var - m["var_acc"].get<double>()) / base_var
                    : 0.0;
            m["time_overhead_pct"] =
                base_time > 0.0
                    ? 100.0 * (m["mean_time_s"].get<double>() - base_time) / base_time
                    : 0.0;
        }
        agg[to_string(mode)] = std::move(m);
    }
    res.aggregates = std::move(agg);
    res.timings["wall_clock_s"] = seconds_since(t0);
    return res;
}

ExperimentResult degree_and_timing_report(const SbmSpec& base_spec, const ScheduleConfig& cfg,
                                          std::span<const int> sizes, int epochs_per_size,
                                          int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    res.name = "degree_and_timing";
    res.config = nlohmann::ordered_json::parse(config_to_json_text(cfg));
    res.config["sbm"] = nlohmann::ordered_json::parse(sbm_spec_to_json_text(base_spec));
    res.config["epochs_per_size"] = epochs_per_size;
    res.config["reps"] = reps;

    // Effective degree before/after the first prune on the standard spec.
    {
        SbmGraph sbm = gen_sbm(base_spec);
        HopShells shells =
            build_hop_shells(sbm.graph, cfg.hops, cfg.shell_cap, mix_seed(cfg.seed, 0x52));
        const double d_pre =
            static_cast<double>(shells.total_active()) / sbm.graph.node_count();
        const PruneFragment frag = prune_shells(sbm.graph, shells, cfg);
        TopologyDelta delta;
        for (const auto& p : frag.pruned) delta.pruned.push_back({p.v, p.k, p.u});
        apply_topology_delta(sbm.graph, shells, delta);
        const double d_post =
            static_cast<double>(shells.total_active()) / sbm.graph.node_count();
        res.aggregates["d_eff_pre"] = d_pre;
        res.aggregates["d_eff_post"] = d_post;
        res.aggregates["d_eff_ratio"] = d_pre > 0.0 ? d_post / d_pre : 1.0;

        // Per-epoch aggregation cost with and without the pruned shells.
        sbm = gen_sbm(base_spec); // fresh copy, unpruned
        sbm.graph.set_labeled_set(
            stratified_labeled_set(base_spec, 0.25, mix_seed(base_spec.seed, 77)));
        const auto split = make_split(sbm.graph, mix_seed(cfg.seed, 0x51));
        ModelParams params;
        params.diffusion = init_params(sbm.graph.feature_dim(), cfg.hidden_dim, cfg.hops,
                                       sbm.graph.class_count(), cfg.seed);
        params.omega = SimilarityWeights::from_array(cfg.omega_init);
        HopShells fresh =
            build_hop_shells(sbm.graph, cfg.hops, cfg.shell_cap, mix_seed(cfg.seed, 0x52));
        auto time_epochs = [&](const HopShells& sh) {
            double best = 0.0;
            for (int r = 0; r < std::max(1, reps); ++r) {
                const auto e0 = std::chrono::steady_clock::now();
                for (int t = 0; t < 3; ++t) {
                    (void)evaluate_epoch(sbm.graph, sh, params, cfg, split.train, Mode::gkhda);
                }
                const double el = seconds_since(e0);
                best = (r == 0) ? el : std::min(best, el);
            }
            return best;
        };
        const double t_unpruned = time_epochs(fresh);
        const PruneFragment frag2 = prune_shells(sbm.graph, fresh, cfg);
        TopologyDelta delta2;
        for (const auto& p : frag2.pruned) delta2.pruned.push_back({p.v, p.k, p.u});
        apply_topology_delta(sbm.graph, fresh, delta2);
        const double t_pruned = time_epochs(fresh);
        res.aggregates["epoch_time_unpruned_s"] = t_unpruned;
        res.aggregates["epoch_time_pruned_s"] = t_pruned;
        res.aggregates["pruning_speedup"] = t_pruned > 0.0 ? t_unpruned / t_pruned : 1.0;
    }

    // Size sweep at fixed average degree.
    std::vector<double> xs, ys;
    const double target_in_degree = 8.0, target_out_degree = 1.0;
    for (int n : sizes) {
        SbmSpec spec;
        spec.blocks = 2;
        spec.nodes_per_block = n / 2;
        spec.p_in = std::min(1.0, target_in_degree / std::max(1, spec.nodes_per_block - 1));
        spec.p_out = std::min(1.0, target_out_degree / std::max(1, spec.nodes_per_block));
        spec.noise_fraction = 0.0;
        spec.feature_dim = base_spec.feature_dim;
        spec.feature_noise_sigma = base_spec.feature_noise_sigma;
        spec.seed = mix_seed(base_spec.seed, 9000 + n);
        SbmGraph sbm = gen_sbm(spec);
        sbm.graph.set_labeled_set(
            stratified_labeled_set(spec, 0.25, mix_seed(spec.seed, 77)));

        ScheduleConfig run_cfg = cfg;
        run_cfg.epochs = epochs_per_size;
        run_cfg.patience = epochs_per_size + 1; // no early stop inside the sweep
        run_cfg.seed = mix_seed(cfg.seed, 9500 + n);

        double best = 0.0;
        std::size_t edges = sbm.graph.edge_count();
        for (int r = 0; r < std::max(1, reps); ++r) {
            const auto f0 = std::chrono::steady_clock::now();
            (void)fit(sbm.graph, run_cfg, Mode::gkhddra);
            const double el = seconds_since(f0);
            best = (r == 0) ? el : std::min(best, el);
        }
        nlohmann::ordered_json row;
        row["n"] = n;
        row["edges"] = edges;
        row["time_s"] = best;
        res.per_seed.push_back(std::move(row));
        xs.push_back(static_cast<double>(n));
        ys.push_back(best);
    }
    if (xs.size() >= 2) {
        const LinearFit f = linear_fit(xs, ys);
        res.aggregates["scaling_slope_s_per_node"] = f.slope;
        res.aggregates["scaling_intercept_s"] = f.intercept;
        res.aggregates["scaling_r2"] = f.r2;
    }
    res.timings["wall_clock_s"] = seconds_since(t0);
    return res;
}

EdgeHoldout make_edge_holdout(const GraphStore& g, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw InvalidArgumentError("make_edge_holdout: fraction must lie in (0,1)");
    }
    const EdgeList edges = g.edge_list();
    const std::size_t hold = static_cast<std::size_t>(std::llround(fraction * edges.size()));
    if (hold == 0 || hold >= edges.size()) {
        throw InvalidArgumentError("make_edge_holdout: holdout would leave no usable split");
    }

    Rng rng(seed);
    std::vector<std::uint32_t> idx =
        rng.sample_without_replacement(static_cast<std::uint32_t>(edges.size()),
                                       static_cast<std::uint32_t>(hold));
    std::vector<bool> held(edges.size(), false);
    for (auto i : idx) held[i] = true;

    EdgeHoldout out;
    EdgeList keep;
    keep.reserve(edges.size() - hold);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        (held[i] ? out.held_positives : keep).push_back(edges[i]);
    }

    // Equal-size negatives: uniform over non-edges of the full graph.
    const NodeId n = g.node_count();
    std::set<std::pair<NodeId, NodeId>> taken(edges.begin(), edges.end());
    while (out.negatives.size() < out.held_positives.size()) {
        const NodeId a = static_cast<NodeId>(rng.below(n));
        const NodeId b = static_cast<NodeId>(rng.below(n));
        if (a == b) continue;
        const auto e = std::minmax(a, b);
        if (!taken.insert(e).second) continue;
        out.negatives.push_back(e);
    }

    std::vector<std::pair<NodeId, int>> labels;
    for (NodeId v = 0; v < n; ++v) {
        if (g.label(v) != GraphStore::kUnlabeled) labels.emplace_back(v, g.label(v));
    }
    out.train_graph = build_graph(keep, g.features(), labels);
    out.train_graph.set_labeled_set(g.labeled_set());
    return out;
}

LinkPredMetrics score_link_prediction(const Matrix& embeddings, const EdgeHoldout& holdout) {
    auto scores = [&](const EdgeList& pairs) {
        std::vector<double> s;
        s.reserve(pairs.size());
        for (const auto& [v, u] : pairs) {
            s.push_back(sigmoid(dot(embeddings.row(v), embeddings.row(u))));
        }
        return s;
    };
    const auto pos = scores(holdout.held_positives);
    const auto neg = scores(holdout.negatives);
    return {auc_score(pos, neg), average_precision(pos, neg)};
}

ExperimentResult link_prediction_eval(const GraphStore& g, const ScheduleConfig& cfg,
                                      Mode mode, double holdout_fraction, int seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    res.name = "link_prediction";
    res.config = nlohmann::ordered_json::parse(config_to_json_text(cfg));
    res.config["mode"] = to_string(mode);
    res.config["holdout_fraction"] = holdout_fraction;
    res.config["seeds"] = seeds;

    for (int s = 0; s < seeds; ++s) {
        const EdgeHoldout holdout =
            make_edge_holdout(g, holdout_fraction, mix_seed(cfg.seed, 3000 + s));
        ScheduleConfig cfg_s = cfg;
        cfg_s.seed = mix_seed(cfg.seed, 3500 + s);
        const FitResult fr = fit(holdout.train_graph, cfg_s, mode);
        const HopShells shells = build_hop_shells(fr.graph, cfg_s.hops, cfg_s.shell_cap,
                                                  mix_seed(cfg_s.seed, 0x52));
        const ForwardResult fwd =
            forward(fr.graph, shells, fr.params.diffusion, cfg_s, uses_heat_attention(mode));
        const LinkPredMetrics m = score_link_prediction(fwd.embeddings, holdout);

        nlohmann::ordered_json row;
        row["seed"] = s;
        row["auc"] = m.auc;
        row["ap"] = m.ap;
        row["test_acc"] = fr.test_acc;
        res.per_seed.push_back(std::move(row));
    }
    const auto [auc_mean, auc_var] = aggregate_field(res.per_seed, "auc");
    const auto [ap_mean, ap_var] = aggregate_field(res.per_seed, "ap");
    res.aggregates["mean_auc"] = auc_mean;
    res.aggregates["var_auc"] = auc_var;
    res.aggregates["mean_ap"] = ap_mean;
    res.aggregates["var_ap"] = ap_var;
    res.timings["wall_clock_s"] = seconds_since(t0);
    return res;
}

} // namespace drtr
