#include "drtr/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "drtr/errors.hpp"

namespace drtr {

Mode mode_from_string(const std::string& s) {
    if (s == "baseline") return Mode::baseline;
    if (s == "gdra") return Mode::gdra;
    if (s == "gkhda") return Mode::gkhda;
    if (s == "gkhddra") return Mode::gkhddra;
    throw InvalidArgumentError("unknown mode '" + s + "'");
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::baseline: return "baseline";
        case Mode::gdra: return "gdra";
        case Mode::gkhda: return "gkhda";
        case Mode::gkhddra: return "gkhddra";
    }
    return "gkhddra";
}

KnnBackend knn_backend_from_string(const std::string& s) {
    if (s == "exact") return KnnBackend::exact;
    if (s == "projection") return KnnBackend::projection;
    throw InvalidArgumentError("unknown knn backend '" + s + "'");
}

std::string to_string(KnnBackend b) {
    return b == KnnBackend::exact ? "exact" : "projection";
}

void ScheduleConfig::validate() const {
    if (!(tau0 > 0.0)) throw InvalidArgumentError("config: tau0 must be > 0");
    if (!(eta_decay >= 0.0)) throw InvalidArgumentError("config: eta_decay must be >= 0");
    if (!(layer_norm_eps > 0.0)) throw InvalidArgumentError("config: layer_norm_eps must be > 0");
    if (!(leaky_slope >= 0.0)) throw InvalidArgumentError("config: leaky_slope must be >= 0");
    if (hops < 1) throw InvalidArgumentError("config: K must be >= 1");
    if (hidden_dim < 1) throw InvalidArgumentError("config: hidden_dim must be >= 1");
    if (!(percentile_p > 0.0 && percentile_p < 1.0)) {
        throw InvalidArgumentError("config: percentile_p must lie in (0,1)");
    }
    if (!(tr_theta > 0.0 && tr_theta < 1.0)) {
        throw InvalidArgumentError("config: tr_theta must lie in (0,1)");
    }
    if (!(tr_tau > 0.0)) throw InvalidArgumentError("config: tr_tau must be > 0");
    if (!(lambda0 >= 0.0 && lambda_min >= 0.0 && rho >= 0.0)) {
        throw InvalidArgumentError("config: lambda schedule fields must be >= 0");
    }
    for (double w : omega_init) {
        if (!(w >= 0.0)) throw InvalidArgumentError("config: omega_init must be >= 0");
    }
    double sum = 0.0;
    for (double w : loss_weights) {
        if (!(w >= 0.0)) throw InvalidArgumentError("config: loss weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw InvalidArgumentError("config: loss weights must sum to 1");
    }
    if (!(lr0 > 0.0)) throw InvalidArgumentError("config: lr0 must be > 0");
    if (!(lr_mu >= 0.0)) throw InvalidArgumentError("config: lr_mu must be >= 0");
    if (!(clip > 0.0)) throw InvalidArgumentError("config: clip must be > 0");
    if (!(weight_decay >= 0.0)) throw InvalidArgumentError("config: weight_decay must be >= 0");
    if (epochs < 1) throw InvalidArgumentError("config: epochs must be >= 1");
    if (patience < 1) throw InvalidArgumentError("config: patience must be >= 1");
    if (batch_size < 1) throw InvalidArgumentError("config: batch_size must be >= 1");
    if (shell_cap < 1) throw InvalidArgumentError("config: shell_cap must be >= 1");
    if (knn_k < 1) throw InvalidArgumentError("config: knn_k must be >= 1");
    if (cap_R < 1) throw InvalidArgumentError("config: cap_R must be >= 1");
}

namespace {

const std::set<std::string> kKnownKeys = {
    "tau0", "eta_decay", "lambda0", "rho", "lambda_min", "beta1", "beta2",
    "percentile_p", "tr_beta", "tr_tau", "tr_theta", "knn_k", "cap_R",
    "loss_weights", "lr0", "lr_mu", "clip", "weight_decay", "epochs",
    "patience", "K", "hidden_dim", "seed", "mode",
    // optional knobs with documented defaults
    "leaky_slope", "layer_norm_eps", "shell_cap", "omega_init", "knn_backend",
    "tr_stochastic", "batch_size"};

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

ScheduleConfig config_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInputError(std::string("config: JSON parse failure: ") + e.what());
    }
    if (!j.is_object()) throw MalformedInputError("config: top level must be an object");
    for (const auto& item : j.items()) {
        if (!kKnownKeys.count(item.key())) {
            throw MalformedInputError("config: unknown key '" + item.key() + "'");
        }
    }

    ScheduleConfig cfg;
    try {
        read_if(j, "tau0", cfg.tau0);
        read_if(j, "eta_decay", cfg.eta_decay);
        read_if(j, "leaky_slope", cfg.leaky_slope);
        read_if(j, "layer_norm_eps", cfg.layer_norm_eps);
        read_if(j, "K", cfg.hops);
        read_if(j, "hidden_dim", cfg.hidden_dim);
        read_if(j, "lambda0", cfg.lambda0);
        read_if(j, "rho", cfg.rho);
        read_if(j, "lambda_min", cfg.lambda_min);
        read_if(j, "beta1", cfg.beta1);
        read_if(j, "beta2", cfg.beta2);
        read_if(j, "percentile_p", cfg.percentile_p);
        read_if(j, "tr_beta", cfg.tr_beta);
        read_if(j, "tr_tau", cfg.tr_tau);
        read_if(j, "tr_theta", cfg.tr_theta);
        read_if(j, "knn_k", cfg.knn_k);
        read_if(j, "cap_R", cfg.cap_R);
        read_if(j, "tr_stochastic", cfg.tr_stochastic);
        read_if(j, "lr0", cfg.lr0);
        read_if(j, "lr_mu", cfg.lr_mu);
        read_if(j, "clip", cfg.clip);
        read_if(j, "weight_decay", cfg.weight_decay);
        read_if(j, "epochs", cfg.epochs);
        read_if(j, "patience", cfg.patience);
        read_if(j, "batch_size", cfg.batch_size);
        read_if(j, "shell_cap", cfg.shell_cap);
        read_if(j, "seed", cfg.seed);
        if (j.contains("loss_weights")) {
            const auto& lw = j.at("loss_weights");
            if (!lw.is_array() || lw.size() != 3) {
                throw MalformedInputError("config: loss_weights must be an array of 3");
            }
            for (int i = 0; i < 3; ++i) cfg.loss_weights[i] = lw[i].get<double>();
        }
        if (j.contains("omega_init")) {
            const auto& oi = j.at("omega_init");
            if (!oi.is_array() || oi.size() != 3) {
                throw MalformedInputError("config: omega_init must be an array of 3");
            }
            for (int i = 0; i < 3; ++i) cfg.omega_init[i] = oi[i].get<double>();
        }
        if (j.contains("mode")) cfg.mode = mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("knn_backend")) {
            cfg.knn_backend = knn_backend_from_string(j.at("knn_backend").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInputError(std::string("config: bad field type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json_text(const ScheduleConfig& cfg) {
    nlohmann::ordered_json j;
    j["tau0"] = cfg.tau0;
    j["eta_decay"] = cfg.eta_decay;
    j["lambda0"] = cfg.lambda0;
    j["rho"] = cfg.rho;
    j["lambda_min"] = cfg.lambda_min;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["percentile_p"] = cfg.percentile_p;
    j["tr_beta"] = cfg.tr_beta;
    j["tr_tau"] = cfg.tr_tau;
    j["tr_theta"] = cfg.tr_theta;
    j["knn_k"] = cfg.knn_k;
    j["cap_R"] = cfg.cap_R;
    j["loss_weights"] = cfg.loss_weights;
    j["lr0"] = cfg.lr0;
    j["lr_mu"] = cfg.lr_mu;
    j["clip"] = cfg.clip;
    j["weight_decay"] = cfg.weight_decay;
    j["epochs"] = cfg.epochs;
    j["patience"] = cfg.patience;
    j["K"] = cfg.hops;
    j["hidden_dim"] = cfg.hidden_dim;
    j["seed"] = cfg.seed;
    j["mode"] = to_string(cfg.mode);
    j["leaky_slope"] = cfg.leaky_slope;
    j["layer_norm_eps"] = cfg.layer_norm_eps;
    j["shell_cap"] = cfg.shell_cap;
    j["omega_init"] = cfg.omega_init;
    j["knn_backend"] = to_string(cfg.knn_backend);
    j["tr_stochastic"] = cfg.tr_stochastic;
    j["batch_size"] = cfg.batch_size;
    return j.dump(2) + "\n";
}

ScheduleConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedInputError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

void save_config_file(const std::string& path, const ScheduleConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw MalformedInputError("config: cannot write '" + path + "'");
    out << config_to_json_text(cfg);
}

} // namespace drtr
