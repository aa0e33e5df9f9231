#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace drtr {

// Engine modes, mirroring the ablation variants: `baseline` is plain mean
// aggregation, `gdra` adds distance-based pruning, `gkhda` swaps the mean
// for heat attention, `gkhddra` runs the full pipeline.
enum class Mode { baseline, gdra, gkhda, gkhddra };

constexpr bool uses_heat_attention(Mode m) {
    return m == Mode::gkhda || m == Mode::gkhddra;
}
constexpr bool uses_dr(Mode m) { return m == Mode::gdra || m == Mode::gkhddra; }
constexpr bool uses_tr(Mode m) { return m == Mode::gkhddra; }

Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

enum class KnnBackend { exact, projection };

KnnBackend knn_backend_from_string(const std::string& s);
std::string to_string(KnnBackend b);

// Every fixed hyperparameter in one place. Defaults follow the published
// settings table; fields the table leaves open carry the documented
// fallbacks (tr_tau, lr_mu, loss_weights, omega_init, shell_cap).
struct ScheduleConfig {
    // diffusion
    double tau0 = 1.0;            // initial attention temperature
    double eta_decay = 0.1;       // per-hop temperature decay
    double leaky_slope = 0.2;     // LeakyReLU negative slope
    double layer_norm_eps = 1e-5;
    int hops = 3;                 // K
    int hidden_dim = 64;

    // distance recomputation
    double lambda0 = 0.1;
    double rho = 0.05;
    double lambda_min = 0.01;
    double beta1 = 1.0;           // hop-penalty weight
    double beta2 = 1.0;           // semantic-divergence weight
    double percentile_p = 0.75;

    // topology reconstruction
    std::array<double, 3> omega_init{1.0, 1.0, 1.0};
    double tr_beta = 0.5;         // similarity threshold
    double tr_tau = 1.0;          // sigmoid temperature
    double tr_theta = 0.6;        // edge-addition probability threshold
    int knn_k = 50;
    int cap_R = 50;               // max candidate/added edges per node
    bool tr_stochastic = false;   // Bernoulli draw instead of prob > theta
    KnnBackend knn_backend = KnnBackend::exact;

    // training
    std::array<double, 3> loss_weights{0.4, 0.4, 0.2}; // lambda1..lambda3
    double lr0 = 0.005;
    double lr_mu = 0.001;
    double clip = 1.0;
    double weight_decay = 0.0005;
    int epochs = 1000;
    int patience = 100;
    int batch_size = 1024;        // distance-computation chunk, not an optimizer batch
    int shell_cap = 32;           // per-shell sample cap
    std::uint64_t seed = 0;
    Mode mode = Mode::gkhddra;

    void validate() const; // throws InvalidArgumentError on a bad field
};

// JSON document <-> config. Keys mirror the field names; unknown keys are
// rejected so typos fail loudly.
ScheduleConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ScheduleConfig& cfg);
ScheduleConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const ScheduleConfig& cfg);

} // namespace drtr
