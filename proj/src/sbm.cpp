#include "drtr/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "drtr/errors.hpp"
#include "drtr/rng.hpp"

namespace drtr {

namespace {

// Block means sit at kBlockMeanScale along orthogonal directions: standard
// basis axes when feature_dim allows, random unit vectors otherwise.
constexpr double kBlockMeanScale = 2.0;

std::vector<std::vector<double>> block_means(const SbmSpec& spec) {
    std::vector<std::vector<double>> means(spec.blocks,
                                           std::vector<double>(spec.feature_dim, 0.0));
    if (spec.feature_dim >= spec.blocks) {
        for (int b = 0; b < spec.blocks; ++b) means[b][b] = kBlockMeanScale;
        return means;
    }
    for (int b = 0; b < spec.blocks; ++b) {
        Rng rng(mix_seed(spec.seed, 900 + b));
        double nrm = 0.0;
        for (double& x : means[b]) {
            x = rng.normal();
            nrm += x * x;
        }
        nrm = std::sqrt(std::max(nrm, 1e-300));
        for (double& x : means[b]) x *= kBlockMeanScale / nrm;
    }
    return means;
}

} // namespace

void SbmSpec::validate() const {
    if (blocks < 1 || nodes_per_block < 1) {
        throw InvalidArgumentError("sbm spec: needs at least one node");
    }
    if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
        throw InvalidArgumentError("sbm spec: edge probabilities must lie in [0,1]");
    }
    if (!(noise_fraction >= 0.0)) {
        throw InvalidArgumentError("sbm spec: noise_fraction must be >= 0");
    }
    if (feature_dim < 1) throw InvalidArgumentError("sbm spec: feature_dim must be >= 1");
    if (!(feature_noise_sigma >= 0.0)) {
        throw InvalidArgumentError("sbm spec: feature_noise_sigma must be >= 0");
    }
}

SbmSpec sbm_spec_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInputError(std::string("sbm spec: JSON parse failure: ") + e.what());
    }
    SbmSpec spec;
    try {
        if (j.contains("blocks")) spec.blocks = j.at("blocks").get<int>();
        if (j.contains("nodes_per_block")) spec.nodes_per_block = j.at("nodes_per_block").get<int>();
        if (j.contains("p_in")) spec.p_in = j.at("p_in").get<double>();
        if (j.contains("p_out")) spec.p_out = j.at("p_out").get<double>();
        if (j.contains("noise_fraction")) spec.noise_fraction = j.at("noise_fraction").get<double>();
        if (j.contains("feature_dim")) spec.feature_dim = j.at("feature_dim").get<int>();
        if (j.contains("feature_noise_sigma")) {
            spec.feature_noise_sigma = j.at("feature_noise_sigma").get<double>();
        }
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInputError(std::string("sbm spec: bad field type: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string sbm_spec_to_json_text(const SbmSpec& spec) {
    nlohmann::ordered_json j;
    j["blocks"] = spec.blocks;
    j["nodes_per_block"] = spec.nodes_per_block;
    j["p_in"] = spec.p_in;
    j["p_out"] = spec.p_out;
    j["noise_fraction"] = spec.noise_fraction;
    j["feature_dim"] = spec.feature_dim;
    j["feature_noise_sigma"] = spec.feature_noise_sigma;
    j["seed"] = spec.seed;
    return j.dump(2) + "\n";
}

SbmSpec load_sbm_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedInputError("sbm spec: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return sbm_spec_from_json_text(ss.str());
}

SbmGraph gen_sbm(const SbmSpec& spec) {
    spec.validate();
    const NodeId n = static_cast<NodeId>(spec.blocks) * spec.nodes_per_block;
    auto block_of = [&](NodeId v) { return static_cast<int>(v) / spec.nodes_per_block; };

    Rng edge_rng(mix_seed(spec.seed, 1));
    EdgeList clean;
    for (NodeId v = 0; v < n; ++v) {
        for (NodeId u = v + 1; u < n; ++u) {
            const double p = block_of(v) == block_of(u) ? spec.p_in : spec.p_out;
            if (p > 0.0 && edge_rng.uniform() < p) clean.emplace_back(v, u);
        }
    }

    // Planted noisy edges: uniform over inter-block non-edges.
    const std::size_t noisy_target =
        static_cast<std::size_t>(std::llround(spec.noise_fraction * clean.size()));
    EdgeList noisy;
    if (noisy_target > 0) {
        std::set<std::pair<NodeId, NodeId>> used(clean.begin(), clean.end());
        Rng noise_rng(mix_seed(spec.seed, 2));
        std::size_t attempts = 0;
        const std::size_t max_attempts = 1000 * (noisy_target + 1);
        while (noisy.size() < noisy_target) {
            if (++attempts > max_attempts) {
                throw InvalidArgumentError("gen_sbm: not enough inter-block non-edges for "
                                           "the requested noise_fraction");
            }
            const NodeId a = static_cast<NodeId>(noise_rng.below(n));
            const NodeId b = static_cast<NodeId>(noise_rng.below(n));
            if (a == b || block_of(a) == block_of(b)) continue;
            const auto e = std::minmax(a, b);
            if (!used.insert({e.first, e.second}).second) continue;
            noisy.emplace_back(e.first, e.second);
        }
        std::sort(noisy.begin(), noisy.end());
    }

    const auto means = block_means(spec);
    Matrix features(n, spec.feature_dim);
    Rng feat_rng(mix_seed(spec.seed, 3));
    for (NodeId v = 0; v < n; ++v) {
        const auto& mu = means[block_of(v)];
        auto row = features.row(v);
        for (int f = 0; f < spec.feature_dim; ++f) {
            row[f] = mu[f] + spec.feature_noise_sigma * feat_rng.normal();
        }
    }

    std::vector<std::pair<NodeId, int>> labels;
    labels.reserve(n);
    for (NodeId v = 0; v < n; ++v) labels.emplace_back(v, block_of(v));

    EdgeList all_edges = clean;
    all_edges.insert(all_edges.end(), noisy.begin(), noisy.end());

    SbmGraph out;
    out.graph = build_graph(all_edges, std::move(features), labels);
    out.noisy_edges = std::move(noisy);
    return out;
}

std::vector<NodeId> stratified_labeled_set(const SbmSpec& spec, double fraction,
                                           std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidArgumentError("stratified_labeled_set: fraction must lie in (0,1]");
    }
    const auto per_block = static_cast<std::uint32_t>(
        std::max<long long>(1, std::llround(fraction * spec.nodes_per_block)));
    std::vector<NodeId> out;
    for (int b = 0; b < spec.blocks; ++b) {
        Rng rng(mix_seed(seed, 500 + b));
        const auto picks = rng.sample_without_replacement(
            static_cast<std::uint32_t>(spec.nodes_per_block), per_block);
        for (auto p : picks) {
            out.push_back(static_cast<NodeId>(b * spec.nodes_per_block + p));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace drtr
