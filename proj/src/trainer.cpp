#include "hanna/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "hanna/errors.hpp"

namespace hanna {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
    return seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(epoch + 1));
}

}  // namespace

void SearchConfig::validate() const {
    if (epochs < 1) throw ValidationError("search: epochs must be >= 1");
    if (warmup_epochs < 0 || warmup_epochs >= epochs)
        throw ValidationError("search: warmup_epochs must be in [0, epochs)");
    if (batch_size < 1) throw ValidationError("search: batch_size must be >= 1");
    if (!(split > 0.0 && split < 1.0)) throw ValidationError("search: split must be in (0,1)");
    if (!(tau_min > 0.0)) throw ValidationError("search: tau_min must be > 0");
    if (!(tau_init >= tau_min)) throw ValidationError("search: tau_init must be >= tau_min");
    knobs.validate();
}

SearchConfig SearchConfig::desk() {
    SearchConfig c;
    c.epochs = 20;
    c.warmup_epochs = 4;
    c.batch_size = 64;
    return c;
}

double tau_at(int epoch, const SearchConfig& config) {
    if (epoch < 0 || epoch >= config.epochs)
        throw ValidationError("tau_at: epoch " + std::to_string(epoch) + " out of range");
    if (config.epochs == 1) return config.tau_init;
    const double frac = static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
    return config.tau_min + 0.5 * (config.tau_init - config.tau_min) * (1.0 + std::cos(kPi * frac));
}

double lr_at(int epoch, const SearchConfig& config) {
    if (epoch < 0 || epoch >= config.epochs)
        throw ValidationError("lr_at: epoch " + std::to_string(epoch) + " out of range");
    if (config.epochs == 1) return config.w_opt.lr;
    const double frac = static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
    return 0.5 * config.w_opt.lr * (1.0 + std::cos(kPi * frac));
}

Theta theta_init(const MacroArch& arch) { return Theta::uniform(arch, 1.0); }

SgdMomentum::SgdMomentum(std::vector<Tensor> params, double momentum, double weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
    for (const auto& p : params_) velocity_.emplace_back(p.size(), 0.0);
}

void SgdMomentum::step(double lr) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& data = params_[i].data();
        const auto& grad = params_[i].grad();
        auto& vel = velocity_[i];
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = grad[j] + weight_decay_ * data[j];
            vel[j] = momentum_ * vel[j] + g;
            data[j] -= lr * vel[j];
        }
    }
}

Adam::Adam(std::vector<Tensor> params, double lr, double weight_decay)
    : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay) {
    for (const auto& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& data = params_[i].data();
        const auto& grad = params_[i].grad();
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = grad[j];
            m_[i][j] = b1 * m_[i][j] + (1.0 - b1) * g;
            v_[i][j] = b2 * v_[i][j] + (1.0 - b2) * g * g;
            const double mhat = m_[i][j] / c1;
            const double vhat = v_[i][j] / c2;
            data[j] -= lr_ * mhat / (std::sqrt(vhat) + eps);
            // multiplicative form keeps -inf logits at -inf
            data[j] *= (1.0 - lr_ * weight_decay_);
        }
    }
}

namespace {

int count_correct(const Tensor& logits, const std::vector<int>& labels) {
    const int n = logits.shape()[0], k = logits.shape()[1];
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < k; ++j)
            if (logits.data()[i * k + j] > logits.data()[i * k + best]) best = j;
        if (best == labels[i]) ++correct;
    }
    return correct;
}

struct PhaseAccum {
    double ce = 0, lat = 0, ener = 0, total = 0;
    long correct = 0, samples = 0;

    void add(const LossBreakdown& b, int n, int correct_n) {
        ce += b.ce * n;
        lat += b.lat * n;
        ener += b.ener * n;
        total += b.total * n;
        correct += correct_n;
        samples += n;
    }
    PhaseStats stats() const {
        PhaseStats s;
        const double n = static_cast<double>(samples);
        s.ce = ce / n;
        s.lat = lat / n;
        s.ener = ener / n;
        s.total = total / n;
        s.acc = static_cast<double>(correct) / n;
        return s;
    }
};

}  // namespace

SearchResult run_search(const SearchConfig& config, const MacroArch& arch,
                        const CostTable& lat_table, const CostTable& ener_table,
                        const LabeledData& train_data) {
    config.validate();
    if (lat_table.layers() != arch.num_tbs() || ener_table.layers() != arch.num_tbs())
        throw ValidationError("search: cost tables have " + std::to_string(lat_table.layers()) +
                              " layers, architecture has " + std::to_string(arch.num_tbs()));
    if (train_data.channels != arch.stem.in_channels)
        throw ValidationError("search: dataset has " + std::to_string(train_data.channels) +
                              " channels, stem expects " +
                              std::to_string(arch.stem.in_channels));

    Rng init_rng(config.seed);
    SearchResult result{theta_init(arch), SuperNet::init(arch, init_rng), {}};
    auto [weight_set, theta_set] = split_dataset(train_data, config.split, config.seed);

    auto weights = result.net.weight_params();
    SgdMomentum sgd(weights, config.w_opt.momentum, config.w_opt.weight_decay);
    Adam adam(result.theta.rows, config.t_opt.lr, config.t_opt.weight_decay);

    auto zero_all = [&]() {
        for (auto& p : weights) p.zero_grad();
        for (auto& r : result.theta.rows) r.zero_grad();
    };

    auto run_phase = [&](const LabeledData& data, int epoch, double tau, bool update_weights,
                         bool update_theta, Rng& rng) {
        std::vector<int> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        PhaseAccum accum;
        const double lr = lr_at(epoch, config);
        for (int start = 0; start < data.size(); start += config.batch_size) {
            const int end = std::min(start + config.batch_size, data.size());
            std::vector<int> idx(order.begin() + start, order.begin() + end);
            Tensor x = data.batch(idx);
            auto labels = data.batch_labels(idx);
            NoiseMatrix noise = sample_gumbel(rng, arch.num_tbs(), kNumCandidates);
            SuperNetOutput out =
                supernet_forward(result.net, x, result.theta, tau, noise, lat_table, ener_table);
            Tensor ce = softmax_cross_entropy(out.logits, labels);
            LossBreakdown breakdown;
            try {
                breakdown = total_loss(ce.item(), out.lat.item(), out.ener.item(), config.knobs);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                   ", phase " + (update_theta ? "theta" : "weight"));
            }
            Tensor loss = total_loss_t(ce, out.lat, out.ener, config.knobs);
            backward(loss);
            if (update_weights) sgd.step(lr);
            if (update_theta) adam.step();
            zero_all();
            accum.add(breakdown, end - start, count_correct(out.logits, labels));
        }
        return accum.stats();
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double tau = tau_at(epoch, config);
        Rng epoch_rng(epoch_seed(config.seed, epoch));

        EpochLog wlog{epoch, "weight", tau, run_phase(weight_set, epoch, tau, true, false,
                                                      epoch_rng)};
        result.logs.push_back(wlog);

        if (epoch >= config.warmup_epochs) {
            EpochLog tlog{epoch, "theta", tau, run_phase(theta_set, epoch, tau, false, true,
                                                         epoch_rng)};
            result.logs.push_back(tlog);
        }
        save_theta(result.theta, config.log_dir + "/theta_epoch_" + std::to_string(epoch) + ".txt",
                   epoch, tau);
    }
    write_search_log(result.logs, config.log_dir + "/search_log.csv");
    return result;
}

void save_theta(const Theta& theta, const std::string& path, int epoch, double tau) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "# layers=" << theta.layers() << " blocks=" << kNumCandidates << " epoch=" << epoch
        << " tau=" << fmt17(tau) << "\n";
    for (const auto& row : theta.rows) {
        for (int i = 0; i < kNumCandidates; ++i) {
            if (i) out << ' ';
            const double v = row.data()[i];
            if (std::isinf(v) && v < 0.0)
                out << "-inf";
            else
                out << fmt17(v);
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

ThetaSnapshot load_theta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw IoError(path + ":1: missing header");
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;
    if (tok != "#") throw IoError(path + ":1: header must start with '#'");
    int layers = -1, blocks = -1;
    ThetaSnapshot snap;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError(path + ":1: bad header token '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "layers") layers = std::stoi(val);
        else if (key == "blocks") blocks = std::stoi(val);
        else if (key == "epoch") snap.epoch = std::stoi(val);
        else if (key == "tau") snap.tau = std::stod(val);
        else throw IoError(path + ":1: unknown header key '" + key + "'");
    }
    if (blocks != kNumCandidates)
        throw IoError(path + ":1: blocks must be " + std::to_string(kNumCandidates));
    if (layers < 1) throw IoError(path + ":1: layers must be >= 1");

    std::string line;
    for (int l = 0; l < layers; ++l) {
        const int lineno = l + 2;
        if (!std::getline(in, line))
            throw IoError(path + ":" + std::to_string(lineno) + ": expected a theta row");
        std::istringstream ls(line);
        std::vector<double> row;
        while (ls >> tok) {
            if (tok == "-inf") {
                row.push_back(-std::numeric_limits<double>::infinity());
            } else {
                try {
                    std::size_t pos;
                    double v = std::stod(tok, &pos);
                    if (pos != tok.size()) throw std::invalid_argument(tok);
                    row.push_back(v);
                } catch (const std::exception&) {
                    throw IoError(path + ":" + std::to_string(lineno) + ": bad value '" + tok +
                                  "'");
                }
            }
        }
        if (static_cast<int>(row.size()) != kNumCandidates)
            throw IoError(path + ":" + std::to_string(lineno) + ": row has " +
                          std::to_string(row.size()) + " columns, expected " +
                          std::to_string(kNumCandidates));
        snap.theta.rows.push_back(Tensor::from({kNumCandidates}, std::move(row), true));
    }
    return snap;
}

void write_search_log(const std::vector<EpochLog>& logs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "epoch,phase,tau,ce,lat,ener,total,acc\n";
    for (const auto& log : logs)
        out << log.epoch << ',' << log.phase << ',' << fmt17(log.tau) << ','
            << fmt17(log.stats.ce) << ',' << fmt17(log.stats.lat) << ',' << fmt17(log.stats.ener)
            << ',' << fmt17(log.stats.total) << ',' << fmt17(log.stats.acc) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace hanna
