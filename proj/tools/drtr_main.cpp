// drtr: command-line front end for the graph refinement engine.
//
// Subcommands: gen-sbm, train, refine, stability, ablate, linkpred.
// Exit codes: 0 success, 2 invalid input, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drtr/checkpoint.hpp"
#include "drtr/config.hpp"
#include "drtr/errors.hpp"
#include "drtr/experiments.hpp"
#include "drtr/io.hpp"
#include "drtr/rng.hpp"
#include "drtr/sbm.hpp"
#include "drtr/trainer.hpp"

namespace fs = std::filesystem;
using namespace drtr;

namespace {

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    if (out.empty()) throw InvalidArgumentError("expected a comma-separated integer list");
    return out;
}

ScheduleConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return ScheduleConfig{};
    return load_config_file(path);
}

int run_gen_sbm(const std::string& spec_path, const std::string& out_dir,
                double labeled_fraction) {
    const SbmSpec spec = load_sbm_spec_file(spec_path);
    SbmGraph sbm = gen_sbm(spec);
    sbm.graph.set_labeled_set(
        stratified_labeled_set(spec, labeled_fraction, mix_seed(spec.seed, 77)));
    save_graph_dir(out_dir, sbm.graph);
    write_edge_list_file((fs::path(out_dir) / "noisy_edges.tsv").string(), sbm.noisy_edges);
    std::ofstream spec_out(fs::path(out_dir) / "spec.json");
    spec_out << sbm_spec_to_json_text(spec);
    std::cout << "wrote " << out_dir << ": " << sbm.graph.node_count() << " nodes, "
              << sbm.graph.edge_count() << " edges (" << sbm.noisy_edges.size()
              << " noisy), " << sbm.graph.labeled_set().size() << " labeled\n";
    return 0;
}

int run_train(const std::string& graph_dir, const std::string& config_path,
              const std::string& mode_str, const std::string& out_dir) {
    const GraphStore g = load_graph_dir(graph_dir);
    ScheduleConfig cfg = load_config_or_default(config_path);
    if (!mode_str.empty()) cfg.mode = mode_from_string(mode_str);

    fs::create_directories(out_dir);
    std::ofstream jsonl(fs::path(out_dir) / "refinement.jsonl");
    const FitResult res = fit(g, cfg, cfg.mode, &jsonl);

    std::ofstream csv(fs::path(out_dir) / "metrics.csv");
    write_metrics_csv(csv, res.history);
    save_checkpoint((fs::path(out_dir) / "params.bin").string(), res.params.diffusion,
                    res.params.omega.as_array());
    save_config_file((fs::path(out_dir) / "config.json").string(), cfg);
    save_graph_dir((fs::path(out_dir) / "refined_graph").string(), res.graph);

    nlohmann::ordered_json summary;
    summary["mode"] = to_string(cfg.mode);
    summary["epochs_run"] = res.epochs_run;
    summary["best_epoch"] = res.best_epoch;
    summary["best_val_acc"] = res.best_val_acc;
    summary["test_acc"] = res.test_acc;
    summary["final_edges"] = res.graph.edge_count();
    std::ofstream(fs::path(out_dir) / "result.json") << summary.dump(2) << '\n';

    std::cout << "mode " << to_string(cfg.mode) << ": best epoch " << res.best_epoch
              << ", val acc " << res.best_val_acc << ", test acc " << res.test_acc << "\n";
    return 0;
}

int run_refine(const std::string& graph_dir, const std::string& config_path,
               const std::string& out_dir) {
    GraphStore g = load_graph_dir(graph_dir);
    const ScheduleConfig cfg = load_config_or_default(config_path);

    HopShells shells = build_hop_shells(g, cfg.hops, cfg.shell_cap, mix_seed(cfg.seed, 0x52));
    RefinementReport report;
    report.epoch = 0;
    report.d_eff_pre = static_cast<double>(shells.total_active()) / g.node_count();

    const PruneFragment frag = prune_shells(g, shells, cfg);
    auto candidates = knn_candidates(g, cfg.knn_k, cfg.cap_R, cfg.knn_backend,
                                     mix_seed(cfg.seed, 0x53));
    const SimilarityWeights omega = SimilarityWeights::from_array(cfg.omega_init);
    report.added = score_and_add(g, candidates, omega, cfg, mix_seed(cfg.seed, 1));

    TopologyDelta delta;
    for (const auto& p : frag.pruned) delta.pruned.push_back({p.v, p.k, p.u});
    for (const auto& a : report.added) delta.added_edges.emplace_back(a.v, a.u);
    apply_topology_delta(g, shells, delta);
    report.pruned = frag.pruned;
    report.d_eff_post = static_cast<double>(shells.total_active()) / g.node_count();

    fs::create_directories(out_dir);
    save_graph_dir(out_dir, g);
    std::ofstream jsonl(fs::path(out_dir) / "refinement.jsonl");
    report.append_jsonl(jsonl);

    nlohmann::ordered_json summary;
    summary["pruned"] = report.pruned.size();
    summary["added"] = report.added.size();
    summary["d_eff_pre"] = report.d_eff_pre;
    summary["d_eff_post"] = report.d_eff_post;
    summary["edges"] = g.edge_count();
    std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << '\n';

    std::cout << "pruned " << report.pruned.size() << " shell entries, added "
              << report.added.size() << " edges; d_eff " << report.d_eff_pre << " -> "
              << report.d_eff_post << "\n";
    return 0;
}

int run_stability(const std::string& graph_dir, const std::string& params_path,
                  const std::string& config_path, const std::string& deltas_csv, int seeds,
                  const std::string& out_dir) {
    const GraphStore g = load_graph_dir(graph_dir);
    const Checkpoint ck = load_checkpoint(params_path);
    const ScheduleConfig cfg = load_config_or_default(config_path);
    const std::vector<int> deltas = parse_int_list(deltas_csv);

    const ExperimentResult res = stability_experiment(g, ck.params, cfg, deltas, seeds);
    fs::create_directories(out_dir);
    res.save((fs::path(out_dir) / "stability.json").string());
    std::cout << res.aggregates.dump(2) << '\n';
    return 0;
}

int run_ablate(const std::string& spec_path, const std::string& config_path, int seeds,
               const std::string& out_dir) {
    const SbmSpec spec = load_sbm_spec_file(spec_path);
    const ScheduleConfig cfg = load_config_or_default(config_path);
    const ExperimentResult res = ablation_experiment(spec, cfg, seeds);
    fs::create_directories(out_dir);
    res.save((fs::path(out_dir) / "ablation.json").string());
    std::cout << res.aggregates.dump(2) << '\n';
    return 0;
}

int run_linkpred(const std::string& graph_dir, const std::string& config_path, double holdout,
                 int seeds, const std::string& mode_str, const std::string& out_dir) {
    const GraphStore g = load_graph_dir(graph_dir);
    ScheduleConfig cfg = load_config_or_default(config_path);
    if (!mode_str.empty()) cfg.mode = mode_from_string(mode_str);
    const ExperimentResult res = link_prediction_eval(g, cfg, cfg.mode, holdout, seeds);
    fs::create_directories(out_dir);
    res.save((fs::path(out_dir) / "linkpred.json").string());
    std::cout << res.aggregates.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DRTR graph representation refinement engine"};
    app.require_subcommand(1);

    std::string spec_path, graph_dir, config_path, out_dir, mode_str, params_path;
    std::string deltas_csv = "1,2,4,8";
    double labeled_fraction = 0.25;
    double holdout = 0.1;
    int seeds = 10;

    auto* gen = app.add_subcommand("gen-sbm", "generate a synthetic block-model graph");
    gen->add_option("--spec", spec_path, "SBM spec JSON")->required();
    gen->add_option("--out", out_dir, "output graph directory")->required();
    gen->add_option("--labeled-fraction", labeled_fraction, "labeled fraction per block");

    auto* train = app.add_subcommand("train", "train on a graph directory");
    train->add_option("--graph", graph_dir, "graph directory")->required();
    train->add_option("--config", config_path, "config JSON");
    train->add_option("--mode", mode_str, "baseline|gdra|gkhda|gkhddra");
    train->add_option("--out", out_dir, "run output directory")->required();

    auto* refine = app.add_subcommand("refine", "one-shot prune + reconstruct, no training");
    refine->add_option("--graph", graph_dir, "graph directory")->required();
    refine->add_option("--config", config_path, "config JSON");
    refine->add_option("--out", out_dir, "output directory")->required();

    auto* stab = app.add_subcommand("stability", "embedding stability under edge flips");
    stab->add_option("--graph", graph_dir, "graph directory")->required();
    stab->add_option("--params", params_path, "parameter checkpoint")->required();
    stab->add_option("--config", config_path, "config JSON");
    stab->add_option("--deltas", deltas_csv, "comma-separated flip counts");
    stab->add_option("--seeds", seeds, "number of seeds");
    stab->add_option("--out", out_dir, "output directory");

    auto* ablate = app.add_subcommand("ablate", "compare engine modes on one spec");
    ablate->add_option("--spec", spec_path, "SBM spec JSON")->required();
    ablate->add_option("--config", config_path, "config JSON");
    ablate->add_option("--seeds", seeds, "number of seeds");
    ablate->add_option("--out", out_dir, "output directory");

    auto* lp = app.add_subcommand("linkpred", "link prediction on held-out edges");
    lp->add_option("--graph", graph_dir, "graph directory")->required();
    lp->add_option("--config", config_path, "config JSON");
    lp->add_option("--holdout", holdout, "held-out edge fraction");
    lp->add_option("--seeds", seeds, "number of seeds");
    lp->add_option("--mode", mode_str, "baseline|gdra|gkhda|gkhddra");
    lp->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen_sbm(spec_path, out_dir, labeled_fraction);
        if (train->parsed()) return run_train(graph_dir, config_path, mode_str, out_dir);
        if (refine->parsed()) return run_refine(graph_dir, config_path, out_dir);
        if (stab->parsed()) {
            if (out_dir.empty()) out_dir = "stability_out";
            return run_stability(graph_dir, params_path, config_path, deltas_csv, seeds,
                                 out_dir);
        }
        if (ablate->parsed()) {
            if (out_dir.empty()) out_dir = "ablation_out";
            return run_ablate(spec_path, config_path, seeds, out_dir);
        }
        if (lp->parsed()) {
            if (out_dir.empty()) out_dir = "linkpred_out";
            return run_linkpred(graph_dir, config_path, holdout, seeds, mode_str, out_dir);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
