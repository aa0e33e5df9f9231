#include "drtr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "drtr/errors.hpp"
#include "drtr/metrics.hpp"
#include "drtr/rng.hpp"

namespace drtr {

namespace {

constexpr std::uint64_t kSplitSalt = 0x51;
constexpr std::uint64_t kShellSalt = 0x52;
constexpr std::uint64_t kTrSalt = 0x53;

double raw_attention_input(std::span<const double> a, std::span<const double> p_v,
                           std::span<const double> p_u) {
    const std::size_t h = p_v.size();
    double t = 0.0;
    for (std::size_t i = 0; i < h; ++i) t += a[i] * p_v[i];
    for (std::size_t i = 0; i < h; ++i) t += a[h + i] * p_u[i];
    return t;
}

} // namespace

Gradients Gradients::zeros_like(const ModelParams& p) {
    Gradients g;
    g.hop_transforms.reserve(p.diffusion.hops());
    for (const auto& w : p.diffusion.hop_transforms) {
        g.hop_transforms.emplace_back(w.rows(), w.cols());
    }
    g.attention_vector.assign(p.diffusion.attention_vector.size(), 0.0);
    g.hop_logits.assign(p.diffusion.hop_logits.size(), 0.0);
    g.classifier = Matrix(p.diffusion.classifier.rows(), p.diffusion.classifier.cols());
    g.classifier_bias.assign(p.diffusion.classifier_bias.size(), 0.0);
    return g;
}

double Gradients::global_norm() const {
    double s = 0.0;
    for (const auto& w : hop_transforms) {
        for (double x : w.data()) s += x * x;
    }
    for (double x : attention_vector) s += x * x;
    for (double x : hop_logits) s += x * x;
    for (double x : classifier.data()) s += x * x;
    for (double x : classifier_bias) s += x * x;
    for (double x : omega) s += x * x;
    return std::sqrt(s);
}

void Gradients::scale(double s) {
    for (auto& w : hop_transforms) {
        for (double& x : w.data()) x *= s;
    }
    for (double& x : attention_vector) x *= s;
    for (double& x : hop_logits) x *= s;
    for (double& x : classifier.data()) x *= s;
    for (double& x : classifier_bias) x *= s;
    for (double& x : omega) x *= s;
}

void Gradients::clip_to(double max_norm) {
    const double n = global_norm();
    if (n > max_norm) scale(max_norm / n);
}

void Gradients::check_finite() const {
    for (std::size_t k = 0; k < hop_transforms.size(); ++k) {
        if (!hop_transforms[k].all_finite()) {
            throw NumericError("non-finite gradient for hop transform W" + std::to_string(k + 1));
        }
    }
    for (double x : attention_vector) {
        if (!std::isfinite(x)) throw NumericError("non-finite gradient for attention vector");
    }
    for (double x : hop_logits) {
        if (!std::isfinite(x)) throw NumericError("non-finite gradient for hop logits");
    }
    if (!classifier.all_finite()) throw NumericError("non-finite gradient for classifier");
    for (double x : classifier_bias) {
        if (!std::isfinite(x)) throw NumericError("non-finite gradient for classifier bias");
    }
    for (double x : omega) {
        if (!std::isfinite(x)) throw NumericError("non-finite gradient for omega");
    }
}

double classification_loss(const Matrix& logits, const std::vector<int>& labels,
                           std::span<const NodeId> labeled_set) {
    if (labeled_set.empty()) {
        throw InvalidArgumentError("classification_loss: empty labeled set");
    }
    const std::size_t classes = logits.cols();
    double loss = 0.0;
    for (NodeId v : labeled_set) {
        const auto row = logits.row(v);
        double mx = row[0];
        for (double x : row) mx = std::max(mx, x);
        double sum = 0.0;
        for (double x : row) sum += std::exp(x - mx);
        const int y = labels[v];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw InvalidArgumentError("classification_loss: node " + std::to_string(v) +
                                       " has no usable label");
        }
        loss += (std::log(sum) + mx) - row[y];
    }
    return loss / static_cast<double>(labeled_set.size());
}

double learning_rate(int t, const ScheduleConfig& cfg) {
    if (t < 1) throw InvalidArgumentError("learning_rate: t must be >= 1");
    return cfg.lr0 / std::sqrt(static_cast<double>(t)) *
           std::exp(-cfg.lr_mu * static_cast<double>(t));
}

double regularization_loss(const DiffusionParams& params) {
    double reg = 0.0;
    for (const auto& w : params.hop_transforms) {
        for (double x : w.data()) reg += x * x;
    }
    for (double p : params.hop_logits) reg += p * p;
    return reg;
}

EpochEval evaluate_epoch(const GraphStore& g, const HopShells& shells,
                         const ModelParams& params, const ScheduleConfig& cfg,
                         std::span<const NodeId> train_nodes, Mode mode) {
    const DiffusionParams& dp = params.diffusion;
    const NodeId n = g.node_count();
    const int hops = dp.hops();
    const std::size_t hid = dp.hidden_dim();
    const std::size_t classes = dp.class_count();
    const bool heat = uses_heat_attention(mode);
    const double l1 = cfg.loss_weights[0];
    const double l2 = cfg.loss_weights[1];
    const double l3 = cfg.loss_weights[2];

    EpochEval ev;
    ForwardCache cache;
    ev.fwd = forward(g, shells, dp, cfg, heat, &cache);

    // ---- loss terms ----
    ev.loss.classification = classification_loss(ev.fwd.logits, g.labels(), train_nodes);
    if (uses_dr(mode)) {
        ev.prune = prune_shells(g, shells, cfg);
        ev.loss.dr = ev.prune.hinge_sum;
    }
    if (uses_tr(mode)) {
        ev.scored = knn_candidates(g, cfg.knn_k, cfg.cap_R, cfg.knn_backend,
                                   mix_seed(cfg.seed, kTrSalt));
        score_candidates(g, ev.scored, params.omega, cfg);
        ev.loss.tr = tr_loss(ev.scored, cfg);
    }
    ev.loss.regularization = regularization_loss(dp);
    ev.loss.total = ev.loss.classification + l1 * ev.loss.dr + l2 * ev.loss.tr +
                    l3 * ev.loss.regularization;

    // ---- reverse pass ----
    ev.grads = Gradients::zeros_like(params);
    Gradients& gr = ev.grads;

    const auto gamma = dp.hop_weights();
    const double inv_count = 1.0 / static_cast<double>(train_nodes.size());

    // Classifier head: dlogits -> dC, db, dZ.
    Matrix dz(n, hid);
    std::vector<double> q(classes);
    for (NodeId v : train_nodes) {
        const auto row = ev.fwd.logits.row(v);
        double mx = row[0];
        for (double x : row) mx = std::max(mx, x);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            q[c] = std::exp(row[c] - mx);
            sum += q[c];
        }
        for (std::size_t c = 0; c < classes; ++c) q[c] /= sum;
        const int y = g.labels()[v];
        q[y] -= 1.0;
        const auto z = ev.fwd.embeddings.row(v);
        auto dzv = dz.row(v);
        for (std::size_t c = 0; c < classes; ++c) {
            const double dl = q[c] * inv_count;
            gr.classifier_bias[c] += dl;
            for (std::size_t i = 0; i < hid; ++i) gr.classifier.at(i, c) += z[i] * dl;
        }
        for (std::size_t i = 0; i < hid; ++i) {
            double s = 0.0;
            const double* crow = dp.classifier.row(i).data();
            for (std::size_t c = 0; c < classes; ++c) s += crow[c] * q[c];
            dzv[i] = s * inv_count;
        }
    }

    // Hop combine, layer norm, attention, transforms. dgamma accumulates
    // across nodes; everything else is per (v, k).
    std::vector<double> dgamma(hops, 0.0);
    std::vector<Matrix> dtransformed(hops);
    for (int k = 0; k < hops; ++k) dtransformed[k] = Matrix(n, hid);

    std::vector<double> htil(hid), gvec(hid), dh(hid);
    std::vector<double> dalpha, dscore;
    std::vector<NodeId> active;
    for (NodeId v = 0; v < n; ++v) {
        const auto dzv = dz.row(v);
        bool nonzero = false;
        for (double x : dzv) {
            if (x != 0.0) {
                nonzero = true;
                break;
            }
        }
        if (!nonzero) continue; // unlabeled rows carry no classification gradient

        for (int k = 1; k <= hops; ++k) {
            active.clear();
            for (const auto& e : shells.shell(v, k)) {
                if (e.active) active.push_back(e.node);
            }

            const auto h = cache.hop_raw[k - 1].row(v);
            const double mean = cache.mean[k - 1][v];
            const double sd = cache.stddev[k - 1][v];
            const double inv = 1.0 / (sd + cfg.layer_norm_eps);
            for (std::size_t i = 0; i < hid; ++i) htil[i] = (h[i] - mean) * inv;

            dgamma[k - 1] += dot(dzv, htil);

            if (active.empty()) continue; // h is identically zero; no parameter path

            // d h~ = gamma_k * dz
            for (std::size_t i = 0; i < hid; ++i) gvec[i] = gamma[k - 1] * dzv[i];

            // Layer-norm backward.
            double gmean = 0.0, gcent = 0.0;
            for (std::size_t i = 0; i < hid; ++i) {
                gmean += gvec[i];
                gcent += gvec[i] * (h[i] - mean);
            }
            gmean /= static_cast<double>(hid);
            const double var_coeff =
                sd > 0.0 ? gcent * inv * inv / (static_cast<double>(hid) * sd) : 0.0;
            for (std::size_t i = 0; i < hid; ++i) {
                dh[i] = inv * (gvec[i] - gmean) - (h[i] - mean) * var_coeff;
            }

            // h = sum_i alpha_i p_{u_i}
            const Matrix& p = cache.transformed[k - 1];
            const auto& alphas = cache.alpha[k - 1][v];
            dalpha.assign(active.size(), 0.0);
            for (std::size_t i = 0; i < active.size(); ++i) {
                const auto pu = p.row(active[i]);
                dalpha[i] = dot(dh, pu);
                axpy(alphas[i], dh, dtransformed[k - 1].row(active[i]));
            }

            if (heat) {
                // Softmax backward, then the scaled LeakyReLU.
                double asum = 0.0;
                for (std::size_t i = 0; i < active.size(); ++i) asum += alphas[i] * dalpha[i];
                dscore.assign(active.size(), 0.0);
                const double tau = temperature(k, cfg);
                const auto pv = p.row(v);
                for (std::size_t i = 0; i < active.size(); ++i) {
                    dscore[i] = alphas[i] * (dalpha[i] - asum) / tau;
                    const double traw =
                        raw_attention_input(dp.attention_vector, pv, p.row(active[i]));
                    if (traw < 0.0) dscore[i] *= cfg.leaky_slope;
                }
                for (std::size_t i = 0; i < active.size(); ++i) {
                    const double dt = dscore[i];
                    if (dt == 0.0) continue;
                    const auto pu = p.row(active[i]);
                    for (std::size_t j = 0; j < hid; ++j) {
                        gr.attention_vector[j] += dt * pv[j];
                        gr.attention_vector[hid + j] += dt * pu[j];
                    }
                    axpy(dt * 1.0, std::span<const double>(dp.attention_vector.data(), hid),
                         dtransformed[k - 1].row(v));
                    axpy(dt * 1.0,
                         std::span<const double>(dp.attention_vector.data() + hid, hid),
                         dtransformed[k - 1].row(active[i]));
                }
            }
        }
    }

    // dW_k = X^T * dP_k, plus the regularizer.
    const std::size_t feat = dp.feature_dim();
    for (int k = 0; k < hops; ++k) {
        Matrix& dw = gr.hop_transforms[k];
        for (NodeId v = 0; v < n; ++v) {
            const auto dpv = dtransformed[k].row(v);
            bool nonzero = false;
            for (double x : dpv) {
                if (x != 0.0) {
                    nonzero = true;
                    break;
                }
            }
            if (!nonzero) continue;
            const auto x = g.feature_row(v);
            for (std::size_t f = 0; f < feat; ++f) {
                if (x[f] == 0.0) continue;
                axpy(x[f], dpv, dw.row(f));
            }
        }
        for (std::size_t i = 0; i < dw.data().size(); ++i) {
            dw.data()[i] += l3 * 2.0 * dp.hop_transforms[k].data()[i];
        }
    }

    // dphi through gamma = softmax(phi), plus the regularizer.
    double gdot = 0.0;
    for (int k = 0; k < hops; ++k) gdot += gamma[k] * dgamma[k];
    for (int k = 0; k < hops; ++k) {
        gr.hop_logits[k] = gamma[k] * (dgamma[k] - gdot) + l3 * 2.0 * dp.hop_logits[k];
    }

    // TR gradient reaches omega only (hinge path, add_prob detached). The
    // DR hinge differentiates to zero: distances read raw features only.
    if (uses_tr(mode)) {
        const auto domega = tr_loss_gradient(ev.scored, cfg);
        for (int i = 0; i < 3; ++i) gr.omega[i] = l2 * domega[i];
    }

    gr.check_finite();
    ev.loss.grad_norm = gr.global_norm();
    return ev;
}

Gradients backward(const GraphStore& g, const HopShells& shells, const ModelParams& params,
                   const ScheduleConfig& cfg, std::span<const NodeId> train_nodes, Mode mode) {
    return evaluate_epoch(g, shells, params, cfg, train_nodes, mode).grads;
}

LabelSplit make_split(const GraphStore& g, std::uint64_t seed) {
    LabelSplit split;
    std::vector<NodeId> labeled = g.labeled_set();
    Rng rng(seed);
    rng.shuffle(labeled);
    std::size_t val_count = labeled.size() / 5;
    if (val_count == 0 && labeled.size() >= 2) val_count = 1;
    split.val.assign(labeled.begin(), labeled.begin() + val_count);
    split.train.assign(labeled.begin() + val_count, labeled.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.train.begin(), split.train.end());
    const auto& in_set = g.labeled_set();
    for (NodeId v = 0; v < g.node_count(); ++v) {
        if (g.label(v) == GraphStore::kUnlabeled) continue;
        if (!std::binary_search(in_set.begin(), in_set.end(), v)) split.test.push_back(v);
    }
    return split;
}

namespace {

void apply_update(ModelParams& params, const Gradients& g, double lr, double wd) {
    DiffusionParams& dp = params.diffusion;
    for (int k = 0; k < dp.hops(); ++k) {
        auto& w = dp.hop_transforms[k].data();
        const auto& gw = g.hop_transforms[k].data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * (gw[i] + wd * w[i]);
    }
    for (std::size_t i = 0; i < dp.attention_vector.size(); ++i) {
        dp.attention_vector[i] -= lr * (g.attention_vector[i] + wd * dp.attention_vector[i]);
    }
    for (std::size_t i = 0; i < dp.hop_logits.size(); ++i) {
        dp.hop_logits[i] -= lr * (g.hop_logits[i] + wd * dp.hop_logits[i]);
    }
    {
        auto& c = dp.classifier.data();
        const auto& gc = g.classifier.data();
        for (std::size_t i = 0; i < c.size(); ++i) c[i] -= lr * (gc[i] + wd * c[i]);
    }
    for (std::size_t i = 0; i < dp.classifier_bias.size(); ++i) {
        dp.classifier_bias[i] -= lr * (g.classifier_bias[i] + wd * dp.classifier_bias[i]);
    }
    auto om = params.omega.as_array();
    for (int i = 0; i < 3; ++i) om[i] -= lr * (g.omega[i] + wd * om[i]);
    params.omega = SimilarityWeights::from_array(om);
    params.omega.project_nonnegative();
}

} // namespace

EpochOutcome train_epoch(TrainState& state, GraphStore& g, HopShells& shells,
                         const ScheduleConfig& cfg) {
    const int t = state.epoch + 1;
    const NodeId n = g.node_count();

    EpochEval ev = evaluate_epoch(g, shells, state.params, cfg, state.split.train, state.mode);

    EpochOutcome out;
    out.loss = ev.loss;
    if (!state.split.val.empty()) {
        out.val_acc = accuracy(ev.fwd.logits, g.labels(), state.split.val);
    }
    if (!state.split.test.empty()) {
        out.test_acc = accuracy(ev.fwd.logits, g.labels(), state.split.test);
    }

    // Visit counters walk the neighborhoods the aggregation used.
    std::size_t visits = 0;
    for (NodeId v = 0; v < n; ++v) {
        for (int k = 1; k <= shells.hops(); ++k) {
            for (const auto& e : shells.shell(v, k)) {
                if (!e.active) continue;
                ++state.visit_counts[pack_vku(v, k, e.node)];
                ++visits;
            }
        }
    }
    out.report.visits_recorded = visits;
    out.report.d_eff_pre = static_cast<double>(shells.total_active()) / n;

    // Parameter step (clip, weight decay, schedule).
    Gradients step = ev.grads;
    step.clip_to(cfg.clip);
    apply_update(state.params, step, learning_rate(t, cfg), cfg.weight_decay);

    // Topology refinement, committed in one delta.
    TopologyDelta delta;
    if (uses_dr(state.mode)) {
        delta.pruned.reserve(ev.prune.pruned.size());
        for (const auto& p : ev.prune.pruned) delta.pruned.push_back({p.v, p.k, p.u});
    }
    if (uses_tr(state.mode)) {
        out.report.added = select_additions(ev.scored, cfg, mix_seed(state.rng_seed, t));
        delta.added_edges.reserve(out.report.added.size());
        for (const auto& a : out.report.added) delta.added_edges.emplace_back(a.v, a.u);
    }
    apply_topology_delta(g, shells, delta);
    for (const auto& p : ev.prune.pruned) {
        state.pruned_history.insert(pack_vku(p.v, p.k, p.u));
    }
    out.report.pruned = std::move(ev.prune.pruned);
    out.report.epoch = t;
    out.report.d_eff_post = static_cast<double>(shells.total_active()) / n;

    state.epoch = t;
    return out;
}

FitResult fit(const GraphStore& g, const ScheduleConfig& cfg, Mode mode,
              std::ostream* refinement_jsonl) {
    cfg.validate();
    if (g.labeled_set().empty()) {
        throw InvalidArgumentError("fit: graph has no labeled nodes");
    }

    FitResult res;
    res.graph = g;

    TrainState state;
    state.mode = mode;
    state.rng_seed = cfg.seed;
    state.patience_left = cfg.patience;
    state.split = make_split(g, mix_seed(cfg.seed, kSplitSalt));
    state.params.diffusion =
        init_params(g.feature_dim(), cfg.hidden_dim, cfg.hops,
                    std::max(g.class_count(), 1), cfg.seed);
    state.params.omega = SimilarityWeights::from_array(cfg.omega_init);

    ModelParams best = state.params;
    const std::uint64_t shell_seed = mix_seed(cfg.seed, kShellSalt);
    const bool early_stop = !state.split.val.empty();

    for (int t = 1; t <= cfg.epochs; ++t) {
        HopShells shells = build_hop_shells(res.graph, cfg.hops, cfg.shell_cap, shell_seed);
        // Entries pruned in earlier epochs stay out.
        if (!state.pruned_history.empty()) {
            for (NodeId v = 0; v < res.graph.node_count(); ++v) {
                for (int k = 1; k <= shells.hops(); ++k) {
                    for (auto& e : shells.shell_mut(v, k)) {
                        if (e.active && state.pruned_history.count(pack_vku(v, k, e.node))) {
                            e.active = false;
                        }
                    }
                }
            }
        }

        const ModelParams before_step = state.params;
        EpochOutcome out = train_epoch(state, res.graph, shells, cfg);
        if (refinement_jsonl) out.report.append_jsonl(*refinement_jsonl);

        res.history.push_back({t, out.loss, out.val_acc, out.test_acc, out.report.d_eff_post,
                               out.report.added.size(), out.report.pruned.size()});
        res.epochs_run = t;

        if (early_stop) {
            if (out.val_acc > state.best_val_metric) {
                state.best_val_metric = out.val_acc;
                state.patience_left = cfg.patience;
                best = before_step; // the params that produced this epoch's forward
                res.best_epoch = t;
                res.best_val_acc = out.val_acc;
                res.test_acc = out.test_acc;
            } else if (--state.patience_left == 0) {
                break;
            }
        } else {
            best = state.params;
            res.best_epoch = t;
            res.test_acc = out.test_acc;
        }
    }

    res.params = best;
    return res;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& history) {
    out << "epoch,loss_total,loss_cls,loss_dr,loss_tr,loss_reg,grad_norm,val_acc,test_acc,"
           "d_eff,edges_added,edges_pruned\n";
    char buf[512];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu,%zu\n",
                      r.epoch, r.loss.total, r.loss.classification, r.loss.dr, r.loss.tr,
                      r.loss.regularization, r.loss.grad_norm, r.val_acc, r.test_acc, r.d_eff,
                      r.edges_added, r.edges_pruned);
        out << buf;
    }
}

} // namespace drtr
