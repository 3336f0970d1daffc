#include "pscope/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pscope {

std::string loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::BceWithLogits: return "bce_with_logits";
        case LossKind::Mse: return "mse";
        case LossKind::PinnDuffing: return "pinn_duffing";
    }
    return "?";
}

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "bce_with_logits") return LossKind::BceWithLogits;
    if (name == "mse") return LossKind::Mse;
    if (name == "pinn_duffing") return LossKind::PinnDuffing;
    throw std::invalid_argument("unknown loss kind: " + name);
}

void TrainConfig::validate() const {
    if (epochs <= 0) throw std::invalid_argument("TrainConfig: epochs must be > 0");
    if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: negative learning rate");
    if (checkpoint_every < 0 || checkpoint_every > epochs)
        throw std::invalid_argument("TrainConfig: checkpoint_every must be in [0, epochs]");
    if (loss_kind == LossKind::PinnDuffing && dt <= 0.0)
        throw std::invalid_argument("TrainConfig: dt must be > 0 for the physics loss");
}

double bce_with_logits(const Vec& logits, const Vec& targets) {
    if (logits.size() != targets.size())
        throw std::invalid_argument("bce_with_logits: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double z = logits[i], y = targets[i];
        s += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
    }
    return s / static_cast<double>(logits.size());
}

double mse(const Vec& pred, const Vec& target) {
    if (pred.size() != target.size()) throw std::invalid_argument("mse: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

namespace {

// Per-sample forward pass retaining everything backprop needs.
struct Tape {
    std::vector<Vec> a;      // a[0] = input, a[i] hidden activation i
    std::vector<Vec> mask;   // mask[i-1] for hidden layer i, entries 0/1
    Vec output;
};

Tape run_forward(const ReluNetwork& net, const Vec& x) {
    Tape t;
    const auto& layers = net.layers();
    const int L = net.hidden_layers();
    t.a.push_back(x);
    for (int i = 0; i < L; ++i) {
        Vec z = layers[i].weight.apply(t.a.back());
        Vec m(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) {
            z[j] += layers[i].bias[j];
            m[j] = z[j] > 0.0 ? 1.0 : 0.0;
            z[j] = z[j] > 0.0 ? z[j] : 0.0;
        }
        t.mask.push_back(std::move(m));
        t.a.push_back(std::move(z));
    }
    t.output = layers[L].weight.apply(t.a.back());
    for (std::size_t j = 0; j < t.output.size(); ++j) t.output[j] += layers[L].bias[j];
    return t;
}

// d ŷ[0] / d x[coord] under the tape's fixed masks.
double tangent_forward(const ReluNetwork& net, const Tape& t, int coord, std::vector<Vec>& u) {
    const auto& layers = net.layers();
    const int L = net.hidden_layers();
    u.assign(L + 1, {});
    u[0].assign(net.input_dim(), 0.0);
    u[0][coord] = 1.0;
    for (int i = 0; i < L; ++i) {
        u[i + 1] = layers[i].weight.apply(u[i]);
        for (std::size_t j = 0; j < u[i + 1].size(); ++j) u[i + 1][j] *= t.mask[i][j];
    }
    Vec out = layers[L].weight.apply(u[L]);
    return out[0];
}

void accumulate_outer(Matrix& dw, const Vec& delta, const Vec& a) {
    for (std::size_t i = 0; i < dw.rows; ++i) {
        double d = delta[i];
        if (d == 0.0) continue;
        double* row = dw.data.data() + i * dw.cols;
        for (std::size_t j = 0; j < dw.cols; ++j) row[j] += d * a[j];
    }
}

// Standard reverse sweep seeded with dL/d output; act[] supplies the
// forward values to pair with each layer (activations or tangents).
void reverse_sweep(const ReluNetwork& net, const std::vector<Vec>& act,
                   const std::vector<Vec>& mask, Vec delta, Gradients& g, bool with_bias) {
    const auto& layers = net.layers();
    const int L = net.hidden_layers();
    for (int i = L; i >= 0; --i) {
        accumulate_outer(g.weight[i], delta, act[i]);
        if (with_bias)
            for (std::size_t j = 0; j < delta.size(); ++j) g.bias[i][j] += delta[j];
        if (i == 0) break;
        delta = layers[i].weight.apply_transposed(delta);
        for (std::size_t j = 0; j < delta.size(); ++j) delta[j] *= mask[i - 1][j];
    }
}

Gradients zero_gradients(const ReluNetwork& net) {
    Gradients g;
    for (const auto& l : net.layers()) {
        g.weight.emplace_back(l.weight.rows, l.weight.cols);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

Vec row_of(const Matrix& m, std::size_t i) {
    return Vec(m.data.begin() + i * m.cols, m.data.begin() + (i + 1) * m.cols);
}

}  // namespace

PinnLossValue pinn_loss(const ReluNetwork& net, const PinnPairs& pairs, const DuffingParams& p,
                        double dt) {
    if (dt <= 0.0) throw std::invalid_argument("pinn_loss: dt must be > 0");
    if (net.output_dim() != 1) throw std::invalid_argument("pinn_loss: network must have 1 output");
    PinnLossValue v;
    const double n = static_cast<double>(pairs.inputs.size());
    std::vector<Vec> u;
    for (std::size_t i = 0; i < pairs.inputs.size(); ++i) {
        Vec x = {pairs.inputs[i][0], pairs.inputs[i][1]};
        Tape t = run_forward(net, x);
        double pred = t.output[0];
        double d = pred - pairs.targets[i];
        v.data_part += d * d / n;
        double dpred_dt = tangent_forward(net, t, 0, u);
        double vhat = (pred - x[1]) / dt;
        double residual = dpred_dt - (-p.delta * vhat - p.alpha * pred - p.beta * pred * pred * pred);
        v.physics_part += residual * residual / n;
    }
    v.total = v.data_part + v.physics_part;
    return v;
}

std::pair<double, Gradients> backprop(const ReluNetwork& net, const TrainingSet& batch,
                                      LossKind kind, const LossAux& aux) {
    if (batch.size() == 0) throw std::invalid_argument("backprop: empty batch");
    if (batch.inputs.rows != batch.targets.rows)
        throw std::invalid_argument("backprop: inputs/targets row mismatch");
    Gradients g = zero_gradients(net);
    const double n_samples = static_cast<double>(batch.size());
    const double n_entries = n_samples * static_cast<double>(batch.targets.cols);
    double loss = 0.0;
    std::vector<Vec> u;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        Vec x = row_of(batch.inputs, s);
        Vec y = row_of(batch.targets, s);
        Tape t = run_forward(net, x);
        Vec go(t.output.size(), 0.0);
        switch (kind) {
            case LossKind::Mse: {
                for (std::size_t j = 0; j < y.size(); ++j) {
                    double d = t.output[j] - y[j];
                    loss += d * d / n_entries;
                    go[j] = 2.0 * d / n_entries;
                }
                reverse_sweep(net, t.a, t.mask, std::move(go), g, true);
                break;
            }
            case LossKind::BceWithLogits: {
                for (std::size_t j = 0; j < y.size(); ++j) {
                    double z = t.output[j];
                    loss += (std::max(z, 0.0) - z * y[j] + std::log1p(std::exp(-std::fabs(z)))) /
                            n_entries;
                    go[j] = (sigmoid(z) - y[j]) / n_entries;
                }
                reverse_sweep(net, t.a, t.mask, std::move(go), g, true);
                break;
            }
            case LossKind::PinnDuffing: {
                const auto& p = aux.duffing;
                const double dt = aux.dt;
                if (dt <= 0.0) throw std::invalid_argument("backprop: dt must be > 0");
                double pred = t.output[0];
                double dpred_dt = tangent_forward(net, t, 0, u);
                double x_cur = x[1];
                double vhat = (pred - x_cur) / dt;
                double residual =
                    dpred_dt - (-p.delta * vhat - p.alpha * pred - p.beta * pred * pred * pred);
                double d = pred - y[0];
                loss += (d * d + residual * residual) / n_samples;
                // dR/dpred; the dpred_dt term is handled by the tangent sweep
                double dres_dpred = p.delta / dt + p.alpha + 3.0 * p.beta * pred * pred;
                go[0] = (2.0 * d + 2.0 * residual * dres_dpred) / n_samples;
                reverse_sweep(net, t.a, t.mask, std::move(go), g, true);
                Vec go_tangent(t.output.size(), 0.0);
                go_tangent[0] = 2.0 * residual / n_samples;
                reverse_sweep(net, u, t.mask, std::move(go_tangent), g, false);
                break;
            }
        }
    }
    return {loss, std::move(g)};
}

double evaluate(const ReluNetwork& net, const TrainingSet& set, LossKind kind, const LossAux& aux,
                double* accuracy) {
    if (set.size() == 0) throw std::invalid_argument("evaluate: empty set");
    double loss = 0.0;
    const double n_samples = static_cast<double>(set.size());
    const double n_entries = n_samples * static_cast<double>(set.targets.cols);
    int correct = 0;
    std::vector<Vec> u;
    for (std::size_t s = 0; s < set.size(); ++s) {
        Vec x = row_of(set.inputs, s);
        Vec y = row_of(set.targets, s);
        Tape t = run_forward(net, x);
        switch (kind) {
            case LossKind::Mse:
                for (std::size_t j = 0; j < y.size(); ++j) {
                    double d = t.output[j] - y[j];
                    loss += d * d / n_entries;
                }
                break;
            case LossKind::BceWithLogits:
                for (std::size_t j = 0; j < y.size(); ++j) {
                    double z = t.output[j];
                    loss += (std::max(z, 0.0) - z * y[j] + std::log1p(std::exp(-std::fabs(z)))) /
                            n_entries;
                }
                break;
            case LossKind::PinnDuffing: {
                const auto& p = aux.duffing;
                double pred = t.output[0];
                double dpred_dt = tangent_forward(net, t, 0, u);
                double vhat = (pred - x[1]) / aux.dt;
                double residual =
                    dpred_dt - (-p.delta * vhat - p.alpha * pred - p.beta * pred * pred * pred);
                double d = pred - y[0];
                loss += (d * d + residual * residual) / n_samples;
                break;
            }
        }
        if (!set.labels.empty()) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < t.output.size(); ++j)
                if (t.output[j] > t.output[best]) best = j;
            if (static_cast<int>(best) == set.labels[s]) ++correct;
        }
    }
    if (accuracy)
        *accuracy = set.labels.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : static_cast<double>(correct) / n_samples;
    return loss;
}

AdamState make_adam_state(const ReluNetwork& net) {
    AdamState st;
    for (const auto& l : net.layers()) {
        st.m_weight.emplace_back(l.weight.rows, l.weight.cols);
        st.v_weight.emplace_back(l.weight.rows, l.weight.cols);
        st.m_bias.emplace_back(l.bias.size(), 0.0);
        st.v_bias.emplace_back(l.bias.size(), 0.0);
    }
    return st;
}

void adam_step(ReluNetwork& net, const Gradients& g, AdamState& st, double lr,
               const AdamParams& ap) {
    st.step += 1;
    double bc1 = 1.0 - std::pow(ap.beta1, static_cast<double>(st.step));
    double bc2 = 1.0 - std::pow(ap.beta2, static_cast<double>(st.step));
    auto update = [&](double& theta, double& m, double& v, double grad) {
        m = ap.beta1 * m + (1.0 - ap.beta1) * grad;
        v = ap.beta2 * v + (1.0 - ap.beta2) * grad * grad;
        theta -= lr * (m / bc1) / (std::sqrt(v / bc2) + ap.epsilon);
    };
    auto& layers = net.mutable_layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        for (std::size_t k = 0; k < layers[i].weight.data.size(); ++k)
            update(layers[i].weight.data[k], st.m_weight[i].data[k], st.v_weight[i].data[k],
                   g.weight[i].data[k]);
        for (std::size_t k = 0; k < layers[i].bias.size(); ++k)
            update(layers[i].bias[k], st.m_bias[i][k], st.v_bias[i][k], g.bias[i][k]);
    }
}

std::vector<EpochLog> load_log_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_loss,test_loss,train_acc,test_acc")
        throw std::runtime_error("bad log header in " + path.string());
    std::vector<EpochLog> logs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[5];
        for (int i = 0; i < 5; ++i)
            if (!std::getline(ss, f[i], i == 4 ? '\n' : ','))
                throw std::runtime_error("bad log row: " + line);
        logs.push_back({std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                        std::stod(f[4])});
    }
    return logs;
}

void save_log_csv(const std::vector<EpochLog>& logs, const std::filesystem::path& path) {
    std::string out = "epoch,train_loss,test_loss,train_acc,test_acc\n";
    for (const auto& l : logs)
        out += std::to_string(l.epoch) + "," + format_double(l.train_loss) + "," +
               format_double(l.test_loss) + "," + format_double(l.train_acc) + "," +
               format_double(l.test_acc) + "\n";
    atomic_write_file(path, out);
}

TrainResult train(ReluNetwork net, const TrainingSet& train_set,
                  const std::optional<TrainingSet>& test_set, const TrainConfig& cfg) {
    cfg.validate();
    LossAux aux{cfg.duffing, cfg.dt};
    AdamState st = make_adam_state(net);
    TrainResult result{std::move(net), {}, {}, {}};
    const bool to_disk = !cfg.run_dir.empty();
    if (to_disk) std::filesystem::create_directories(cfg.run_dir);

    auto log_epoch = [&](int epoch) {
        EpochLog l;
        l.epoch = epoch;
        l.train_loss = evaluate(result.net, train_set, cfg.loss_kind, aux, &l.train_acc);
        if (test_set)
            l.test_loss = evaluate(result.net, *test_set, cfg.loss_kind, aux, &l.test_acc);
        else
            l.test_loss = std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(l.train_loss))
            throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch));
        result.logs.push_back(l);
        return l;
    };
    auto checkpoint = [&](int epoch, double loss) {
        result.checkpoint_epochs.push_back(epoch);
        if (!to_disk) return;
        auto path = cfg.run_dir / ("ckpt_" + std::to_string(epoch) + ".json");
        save_checkpoint(result.net, path, epoch, cfg.seed, loss);
        result.checkpoints.push_back(path);
    };

    EpochLog first = log_epoch(0);
    checkpoint(0, first.train_loss);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto [loss, grads] = backprop(result.net, train_set, cfg.loss_kind, aux);
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch));
        adam_step(result.net, grads, st, cfg.learning_rate, cfg.adam);
        EpochLog l = log_epoch(epoch);
        if ((cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) || epoch == cfg.epochs)
            checkpoint(epoch, l.train_loss);
    }
    if (to_disk) save_log_csv(result.logs, cfg.run_dir / "log.csv");
    return result;
}

TrainingSet classification_set(const LabeledDataset2D& ds, const std::vector<int>& index) {
    TrainingSet set;
    set.inputs = Matrix(index.size(), 2);
    set.targets = Matrix(index.size(), 2);
    for (std::size_t r = 0; r < index.size(); ++r) {
        int i = index[r];
        set.inputs(r, 0) = ds.points[i][0];
        set.inputs(r, 1) = ds.points[i][1];
        set.targets(r, ds.labels[i]) = 1.0;  // one-hot
        set.labels.push_back(ds.labels[i]);
    }
    return set;
}

TrainingSet pinn_set(const PinnPairs& pairs) {
    TrainingSet set;
    set.inputs = Matrix(pairs.inputs.size(), 2);
    set.targets = Matrix(pairs.inputs.size(), 1);
    for (std::size_t r = 0; r < pairs.inputs.size(); ++r) {
        set.inputs(r, 0) = pairs.inputs[r][0];
        set.inputs(r, 1) = pairs.inputs[r][1];
        set.targets(r, 0) = pairs.targets[r];
    }
    return set;
}

}  // namespace pscope
