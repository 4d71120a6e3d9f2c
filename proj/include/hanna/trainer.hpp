#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hanna/costmodel.hpp"
#include "hanna/dataset.hpp"
#include "hanna/supernet.hpp"

namespace hanna {

struct WeightOptConfig {
    double lr = 0.01;  // stable for the desk-scale nets with Kaiming init
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

struct ThetaOptConfig {
    double lr = 1e-2;
    double weight_decay = 5e-4;  // decoupled, applied to logits
};

struct SearchConfig {
    int epochs = 90;
    int warmup_epochs = 10;
    int batch_size = 256;
    double split = 0.8;  // fraction of training data for weight updates
    WeightOptConfig w_opt;
    ThetaOptConfig t_opt;
    double tau_init = 5.0;
    double tau_min = 0.1;
    std::uint64_t seed = 0;
    LossKnobs knobs;
    std::string log_dir = ".";
    bool strict = false;

    void validate() const;
    // Desk-scale defaults so a search runs in seconds, not hours.
    static SearchConfig desk();
};

struct PhaseStats {
    double ce = 0.0;
    double lat = 0.0;
    double ener = 0.0;
    double total = 0.0;
    double acc = 0.0;
};

struct EpochLog {
    int epoch = 0;
    std::string phase;  // "weight" or "theta"
    double tau = 0.0;
    PhaseStats stats;
};

// tau(e) = tau_min + 0.5 (tau_init - tau_min) (1 + cos(pi e / (epochs-1)))
double tau_at(int epoch, const SearchConfig& config);
// Cosine decay of the weight learning rate to 0 at the last epoch.
double lr_at(int epoch, const SearchConfig& config);

// All-ones admissible logits (uniform row softmax).
Theta theta_init(const MacroArch& arch);

// SGD with momentum and coupled weight decay.
class SgdMomentum {
public:
    SgdMomentum(std::vector<Tensor> params, double momentum, double weight_decay);
    void step(double lr);

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> velocity_;
    double momentum_, weight_decay_;
};

// Adam with decoupled weight decay.
class Adam {
public:
    Adam(std::vector<Tensor> params, double lr, double weight_decay);
    void step();

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, weight_decay_;
    long t_ = 0;
};

struct SearchResult {
    Theta theta;
    SuperNet net;
    std::vector<EpochLog> logs;
};

// Bilevel alternating search: warmup epochs train weights only, then each
// epoch runs a weight pass over the large split (SGD, cosine lr) followed
// by a theta pass over the small split (Adam, weights frozen). Writes
// theta_epoch_<n>.txt after every epoch and search_log.csv at the end.
SearchResult run_search(const SearchConfig& config, const MacroArch& arch,
                        const CostTable& lat_table, const CostTable& ener_table,
                        const LabeledData& train_data);

// Theta snapshot file: "# layers=<L> blocks=9 epoch=<n> tau=<t>" then L rows
// of 9 logits, "-inf" literal for inadmissible cells.
void save_theta(const Theta& theta, const std::string& path, int epoch, double tau);
struct ThetaSnapshot {
    Theta theta;
    int epoch = 0;
    double tau = 0.0;
};
ThetaSnapshot load_theta(const std::string& path);

void write_search_log(const std::vector<EpochLog>& logs, const std::string& path);

}  // namespace hanna
