#include "drtr/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drtr/errors.hpp"
#include "drtr/rng.hpp"

namespace drtr {

namespace {

Matrix xavier_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = rng.uniform(-s, s);
    return m;
}

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

} // namespace

std::vector<double> DiffusionParams::hop_weights() const {
    std::vector<double> w(hop_logits.size());
    double mx = hop_logits.empty() ? 0.0 : hop_logits[0];
    for (double p : hop_logits) mx = std::max(mx, p);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(hop_logits[i] - mx);
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return w;
}

void DiffusionParams::check_finite() const {
    for (int k = 0; k < hops(); ++k) {
        if (!hop_transforms[k].all_finite()) {
            throw NumericError("non-finite entry in hop transform W" + std::to_string(k + 1));
        }
    }
    for (double x : attention_vector) {
        if (!std::isfinite(x)) throw NumericError("non-finite entry in attention vector");
    }
    for (double x : hop_logits) {
        if (!std::isfinite(x)) throw NumericError("non-finite hop logit");
    }
    if (!classifier.all_finite()) throw NumericError("non-finite entry in classifier");
    for (double x : classifier_bias) {
        if (!std::isfinite(x)) throw NumericError("non-finite classifier bias");
    }
}

DiffusionParams init_params(std::size_t feature_dim, std::size_t hidden_dim, int hops,
                            std::size_t class_count, std::uint64_t seed) {
    DiffusionParams p;
    p.hop_transforms.reserve(hops);
    for (int k = 0; k < hops; ++k) {
        p.hop_transforms.push_back(xavier_matrix(feature_dim, hidden_dim, mix_seed(seed, k)));
    }
    {
        const std::size_t len = 2 * hidden_dim;
        const double s = std::sqrt(6.0 / static_cast<double>(len + 1));
        Rng rng(mix_seed(seed, 100));
        p.attention_vector.resize(len);
        for (double& x : p.attention_vector) x = rng.uniform(-s, s);
    }
    p.hop_logits.assign(hops, 0.0);
    p.classifier = xavier_matrix(hidden_dim, class_count, mix_seed(seed, 101));
    p.classifier_bias.assign(class_count, 0.0);
    return p;
}

double temperature(int k, const ScheduleConfig& cfg) {
    return cfg.tau0 * std::exp(-cfg.eta_decay * static_cast<double>(k));
}

namespace detail {

double attention_score(std::span<const double> a, std::span<const double> p_v,
                       std::span<const double> p_u, double slope) {
    const std::size_t h = p_v.size();
    double t = 0.0;
    for (std::size_t i = 0; i < h; ++i) t += a[i] * p_v[i];
    for (std::size_t i = 0; i < h; ++i) t += a[h + i] * p_u[i];
    return leaky_relu(t, slope);
}

void softmax_inplace(std::vector<double>& scores) {
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double sum = 0.0;
    for (double& s : scores) {
        s = std::exp(s - mx);
        sum += s;
    }
    for (double& s : scores) s /= sum;
}

} // namespace detail

std::vector<std::pair<NodeId, double>> attention_weights(const GraphStore& g,
                                                         const HopShells& shells,
                                                         const DiffusionParams& params,
                                                         NodeId v, int k,
                                                         const ScheduleConfig& cfg) {
    const Matrix& w = params.hop_transforms[k - 1];
    std::vector<double> p_v(w.cols()), p_u(w.cols());
    row_times_matrix(g.feature_row(v), w, p_v);

    std::vector<NodeId> active;
    std::vector<double> scores;
    const double tau = temperature(k, cfg);
    for (const auto& e : shells.shell(v, k)) {
        if (!e.active) continue;
        row_times_matrix(g.feature_row(e.node), w, p_u);
        const double s =
            detail::attention_score(params.attention_vector, p_v, p_u, cfg.leaky_slope) / tau;
        if (!std::isfinite(s)) {
            throw NumericError("non-finite attention score at node " + std::to_string(v) +
                               " hop " + std::to_string(k));
        }
        active.push_back(e.node);
        scores.push_back(s);
    }
    if (active.empty()) return {};
    detail::softmax_inplace(scores);

    std::vector<std::pair<NodeId, double>> out(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) out[i] = {active[i], scores[i]};
    return out;
}

std::vector<double> hop_aggregate(const GraphStore& g, const HopShells& shells,
                                  const DiffusionParams& params, NodeId v, int k,
                                  const ScheduleConfig& cfg) {
    const Matrix& w = params.hop_transforms[k - 1];
    std::vector<double> h(w.cols(), 0.0);
    const auto alphas = attention_weights(g, shells, params, v, k, cfg);
    std::vector<double> p_u(w.cols());
    for (const auto& [u, a] : alphas) {
        row_times_matrix(g.feature_row(u), w, p_u);
        axpy(a, p_u, h);
    }
    for (double x : h) {
        if (!std::isfinite(x)) {
            throw NumericError("non-finite aggregate at node " + std::to_string(v) + " hop " +
                               std::to_string(k));
        }
    }
    return h;
}

std::vector<double> layer_norm(std::span<const double> h, double eps) {
    const std::size_t d = h.size();
    double mean = 0.0;
    for (double x : h) mean += x;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double x : h) var += (x - mean) * (x - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / (std::sqrt(var) + eps);
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = (h[i] - mean) * inv;
    return out;
}

std::vector<double> combine_hops(const std::vector<std::vector<double>>& normalized_hops,
                                 const DiffusionParams& params) {
    if (static_cast<int>(normalized_hops.size()) != params.hops()) {
        throw ShapeError("combine_hops: expected " + std::to_string(params.hops()) +
                         " hop vectors, got " + std::to_string(normalized_hops.size()));
    }
    const auto gamma = params.hop_weights();
    std::vector<double> z(params.hidden_dim(), 0.0);
    for (std::size_t k = 0; k < normalized_hops.size(); ++k) {
        if (normalized_hops[k].size() != z.size()) {
            throw ShapeError("combine_hops: hop vector dimension mismatch");
        }
        axpy(gamma[k], normalized_hops[k], z);
    }
    return z;
}

ForwardResult forward(const GraphStore& g, const HopShells& shells,
                      const DiffusionParams& params, const ScheduleConfig& cfg,
                      bool heat_attention, ForwardCache* cache) {
    const NodeId n = g.node_count();
    const int hops = params.hops();
    const std::size_t hid = params.hidden_dim();
    const std::size_t classes = params.class_count();

    if (g.feature_dim() != params.feature_dim()) {
        throw ShapeError("forward: feature dimension mismatch");
    }
    if (shells.hops() != hops) throw ShapeError("forward: shell hop count mismatch");

    // One transform pass per hop; every node shows up as a center, so all
    // rows are needed anyway.
    std::vector<Matrix> transformed(hops);
    for (int k = 0; k < hops; ++k) {
        transformed[k] = Matrix(n, hid);
        for (NodeId v = 0; v < n; ++v) {
            row_times_matrix(g.feature_row(v), params.hop_transforms[k], transformed[k].row(v));
        }
    }

    const auto gamma = params.hop_weights();
    ForwardResult res{Matrix(n, hid), Matrix(n, classes)};

    if (cache) {
        cache->alpha.assign(hops, std::vector<std::vector<double>>(n));
        cache->hop_raw.assign(hops, Matrix(n, hid));
        cache->mean.assign(hops, std::vector<double>(n, 0.0));
        cache->stddev.assign(hops, std::vector<double>(n, 0.0));
    }

    std::vector<double> h(hid), normed(hid);
    std::vector<double> scores;
    std::vector<NodeId> active;
    for (NodeId v = 0; v < n; ++v) {
        auto z = res.embeddings.row(v);
        for (int k = 1; k <= hops; ++k) {
            const Matrix& p = transformed[k - 1];
            active.clear();
            scores.clear();
            for (const auto& e : shells.shell(v, k)) {
                if (e.active) active.push_back(e.node);
            }
            std::fill(h.begin(), h.end(), 0.0);
            if (!active.empty()) {
                if (heat_attention) {
                    const double tau = temperature(k, cfg);
                    scores.reserve(active.size());
                    for (NodeId u : active) {
                        const double s = detail::attention_score(params.attention_vector,
                                                                 p.row(v), p.row(u),
                                                                 cfg.leaky_slope) / tau;
                        if (!std::isfinite(s)) {
                            throw NumericError("non-finite attention score at node " +
                                               std::to_string(v) + " hop " + std::to_string(k));
                        }
                        scores.push_back(s);
                    }
                    detail::softmax_inplace(scores);
                } else {
                    scores.assign(active.size(), 1.0 / static_cast<double>(active.size()));
                }
                for (std::size_t i = 0; i < active.size(); ++i) {
                    axpy(scores[i], p.row(active[i]), h);
                }
            }

            // Layer norm, keeping mean/std for the reverse pass.
            double mean = 0.0;
            for (double x : h) mean += x;
            mean /= static_cast<double>(hid);
            double var = 0.0;
            for (double x : h) var += (x - mean) * (x - mean);
            var /= static_cast<double>(hid);
            const double sd = std::sqrt(var);
            const double inv = 1.0 / (sd + cfg.layer_norm_eps);
            for (std::size_t i = 0; i < hid; ++i) normed[i] = (h[i] - mean) * inv;

            axpy(gamma[k - 1], normed, z);

            if (cache) {
                cache->alpha[k - 1][v] = scores;
                std::copy(h.begin(), h.end(), cache->hop_raw[k - 1].row(v).begin());
                cache->mean[k - 1][v] = mean;
                cache->stddev[k - 1][v] = sd;
            }
        }
        auto logits = res.logits.row(v);
        for (std::size_t c = 0; c < classes; ++c) logits[c] = params.classifier_bias[c];
        for (std::size_t i = 0; i < hid; ++i) {
            const double zi = z[i];
            if (zi == 0.0) continue;
            const double* crow = params.classifier.row(i).data();
            for (std::size_t c = 0; c < classes; ++c) logits[c] += zi * crow[c];
        }
    }

    if (cache) cache->transformed = std::move(transformed);
    return res;
}

} // namespace drtr
