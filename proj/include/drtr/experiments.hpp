#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drtr/config.hpp"
#include "drtr/graph_store.hpp"
#include "drtr/sbm.hpp"
#include "drtr/trainer.hpp"

namespace drtr {

// Shared result shape for every experiment driver: a config snapshot, one
// row per seed (or per seed x setting), and aggregates recomputable from
// the rows.
struct ExperimentResult {
    std::string name;
    nlohmann::ordered_json config;
    std::vector<nlohmann::ordered_json> per_seed;
    nlohmann::ordered_json aggregates;
    nlohmann::ordered_json timings;

    nlohmann::ordered_json to_json() const;
    void save(const std::string& path) const;
};

// Mean and population variance of one numeric field across rows.
std::pair<double, double> aggregate_field(std::span<const nlohmann::ordered_json> rows,
                                          const std::string& field);

// Perturbation stability: for each delta, flip that many uniformly random
// node pairs (add-or-remove), run the forward pass on both graphs with the
// same parameters, and record ||Z1 - Z2||_F / (delta * sqrt(n)). delta 0
// records the raw Frobenius difference (exactly zero).
ExperimentResult stability_experiment(const GraphStore& g, const DiffusionParams& params,
                                      const ScheduleConfig& cfg, std::span<const int> deltas,
                                      int seeds);

// Trains every mode on identical per-seed graphs and reports accuracy
// mean/variance, variance reduction, and timing overhead against baseline.
ExperimentResult ablation_experiment(const SbmSpec& spec, const ScheduleConfig& cfg,
                                     int seeds, double labeled_fraction = 0.25);

// Effective-degree trace on the standard spec, pruned-vs-unpruned epoch
// timing, and a wall-clock size sweep at fixed average degree with its
// linear fit.
ExperimentResult degree_and_timing_report(const SbmSpec& base_spec, const ScheduleConfig& cfg,
                                          std::span<const int> sizes, int epochs_per_size,
                                          int reps);

struct EdgeHoldout {
    EdgeList held_positives;
    EdgeList negatives; // equal-size uniform sample of non-edges
    GraphStore train_graph;
};

// Removes round(fraction * |E|) edges for scoring. Throws if that would
// leave no training edges or no positives.
EdgeHoldout make_edge_holdout(const GraphStore& g, double fraction, std::uint64_t seed);

struct LinkPredMetrics {
    double auc = 0.0;
    double ap = 0.0;
};

// score(v, u) = sigmoid(z_v . z_u) over held-out positives vs negatives.
LinkPredMetrics score_link_prediction(const Matrix& embeddings, const EdgeHoldout& holdout);

// Per seed: hold out edges, train on the remainder, embed, score.
ExperimentResult link_prediction_eval(const GraphStore& g, const ScheduleConfig& cfg,
                                      Mode mode, double holdout_fraction, int seeds);

} // namespace drtr
