#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "drtr/config.hpp"
#include "drtr/diffusion.hpp"
#include "drtr/distance.hpp"
#include "drtr/graph_store.hpp"
#include "drtr/report.hpp"
#include "drtr/topology.hpp"

namespace drtr {

struct ModelParams {
    DiffusionParams diffusion;
    SimilarityWeights omega;
};

// total = classification + l1 * dr + l2 * tr + l3 * regularization.
// grad_norm is the pre-clip global L2 norm of the analytic gradient.
struct LossBreakdown {
    double classification = 0.0;
    double dr = 0.0;
    double tr = 0.0;
    double regularization = 0.0;
    double total = 0.0;
    double grad_norm = 0.0;
};

// Gradient of the total loss for every trainable tensor.
struct Gradients {
    std::vector<Matrix> hop_transforms;
    std::vector<double> attention_vector;
    std::vector<double> hop_logits;
    Matrix classifier;
    std::vector<double> classifier_bias;
    std::array<double, 3> omega{0.0, 0.0, 0.0};

    static Gradients zeros_like(const ModelParams& p);
    double global_norm() const;
    void scale(double s);
    // Scales everything so the global norm is at most max_norm.
    void clip_to(double max_norm);
    void check_finite() const; // NumericError naming the tensor
};

// Mean cross-entropy over the given node set, log-sum-exp stabilized.
double classification_loss(const Matrix& logits, const std::vector<int>& labels,
                           std::span<const NodeId> labeled_set);

// eta_t = lr0 / sqrt(t) * exp(-mu * t), t >= 1.
double learning_rate(int t, const ScheduleConfig& cfg);

// sum_k ||W_k||_F^2 + sum_k phi_k^2.
double regularization_loss(const DiffusionParams& params);

// One full differentiable evaluation at fixed topology: forward pass, all
// loss terms, analytic gradients, plus the refinement inputs (prune
// fragment, scored TR candidates) the epoch will commit afterwards.
struct EpochEval {
    ForwardResult fwd;
    LossBreakdown loss;
    Gradients grads;
    PruneFragment prune;                // empty unless mode uses DR
    std::vector<CandidatePair> scored;  // empty unless mode uses TR
};

EpochEval evaluate_epoch(const GraphStore& g, const HopShells& shells,
                         const ModelParams& params, const ScheduleConfig& cfg,
                         std::span<const NodeId> train_nodes, Mode mode);

// Analytic gradients alone (forward + reverse). Same math as
// evaluate_epoch; convenience surface for gradient checks.
Gradients backward(const GraphStore& g, const HopShells& shells, const ModelParams& params,
                   const ScheduleConfig& cfg, std::span<const NodeId> train_nodes,
                   Mode mode = Mode::gkhddra);

// 80/20 train/val split of the labeled set (seeded); test = every node
// carrying a ground-truth label outside the labeled set.
struct LabelSplit {
    std::vector<NodeId> train, val, test;
};
LabelSplit make_split(const GraphStore& g, std::uint64_t seed);

struct TrainState {
    int epoch = 0; // epochs completed
    double best_val_metric = -std::numeric_limits<double>::infinity();
    int patience_left = 0;
    ModelParams params;
    std::unordered_map<std::uint64_t, std::uint32_t> visit_counts; // key = pack_vku
    std::uint64_t rng_seed = 0;
    Mode mode = Mode::gkhddra;
    LabelSplit split;
    // Entries pruned in any earlier epoch never re-enter a rebuilt shell.
    std::unordered_set<std::uint64_t> pruned_history;
};

// Shell-entry key; desk scale keeps node ids under 2^24.
constexpr std::uint64_t pack_vku(NodeId v, int k, NodeId u) {
    return (static_cast<std::uint64_t>(v) << 40) |
           (static_cast<std::uint64_t>(k & 0xff) << 32) | static_cast<std::uint64_t>(u);
}

struct EpochOutcome {
    LossBreakdown loss;
    RefinementReport report;
    double val_acc = std::numeric_limits<double>::quiet_NaN();
    double test_acc = std::numeric_limits<double>::quiet_NaN();
};

// One epoch in pipeline order: forward/aggregate, loss + backward, clipped
// and decayed gradient step, then DR pruning, then TR additions, committed
// atomically. Accuracies are measured on the forward pass of this epoch
// (the parameters before the step).
EpochOutcome train_epoch(TrainState& state, GraphStore& g, HopShells& shells,
                         const ScheduleConfig& cfg);

struct MetricRow {
    int epoch;
    LossBreakdown loss;
    double val_acc;
    double test_acc;
    double d_eff;
    std::size_t edges_added;
    std::size_t edges_pruned;
};

struct FitResult {
    ModelParams params;  // snapshot from the best validation epoch
    std::vector<MetricRow> history;
    double best_val_acc = std::numeric_limits<double>::quiet_NaN();
    double test_acc = std::numeric_limits<double>::quiet_NaN(); // at the best epoch
    int best_epoch = 0;
    int epochs_run = 0;
    GraphStore graph; // refined topology at stop time
};

// Full training loop with early stopping on validation accuracy.
// `refinement_jsonl`, when given, receives the per-epoch report stream.
FitResult fit(const GraphStore& g, const ScheduleConfig& cfg, Mode mode,
              std::ostream* refinement_jsonl = nullptr);

// CSV with header epoch,loss_total,loss_cls,loss_dr,loss_tr,loss_reg,
// grad_norm,val_acc,test_acc,d_eff,edges_added,edges_pruned.
void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& history);

} // namespace drtr
