#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "pscope/datagen.hpp"
#include "pscope/nn.hpp"

namespace pscope {

enum class LossKind { BceWithLogits, Mse, PinnDuffing };

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    int epochs = 1;
    double learning_rate = 0.01;
    LossKind loss_kind = LossKind::BceWithLogits;
    int checkpoint_every = 0;  // 0: only epoch 0 and final
    std::uint64_t seed = 0;
    AdamParams adam;
    // PinnDuffing extras
    DuffingParams duffing;
    double dt = 0.1;
    // when set, log.csv and ckpt_{epoch}.json are written here
    std::filesystem::path run_dir;

    void validate() const;
};

/// Full-batch training set. For classification, targets are one-hot rows and
/// labels carry the class index for accuracy; for regression labels is empty.
struct TrainingSet {
    Matrix inputs;
    Matrix targets;
    std::vector<int> labels;

    std::size_t size() const { return inputs.rows; }
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double train_acc = std::numeric_limits<double>::quiet_NaN();
    double test_acc = std::numeric_limits<double>::quiet_NaN();
};

// ---- losses ----

/// Numerically stable mean of max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_with_logits(const Vec& logits, const Vec& targets);

/// Mean of squared differences over all entries.
double mse(const Vec& pred, const Vec& target);

struct PinnLossValue {
    double total = 0.0;
    double data_part = 0.0;
    double physics_part = 0.0;
};

/// L_total = L_data + L_physics for the next-step Duffing regression.
/// The time derivative of the prediction is the exact derivative of the
/// network on the sample's linear region (input coordinate 0 = t).
PinnLossValue pinn_loss(const ReluNetwork& net, const PinnPairs& pairs, const DuffingParams& params,
                        double dt);

// ---- gradients ----

struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vec> bias;
};

struct LossAux {
    DuffingParams duffing;
    double dt = 0.1;
};

/// Exact full-batch gradient of the selected loss. For PinnDuffing the ReLU
/// masks are held constant through the input-derivative term, matching
/// reverse-mode differentiation of the piecewise-linear network.
std::pair<double, Gradients> backprop(const ReluNetwork& net, const TrainingSet& batch,
                                      LossKind kind, const LossAux& aux = {});

/// Loss (and accuracy for classification) without gradients.
double evaluate(const ReluNetwork& net, const TrainingSet& set, LossKind kind,
                const LossAux& aux = {}, double* accuracy = nullptr);

struct AdamState {
    std::vector<Matrix> m_weight, v_weight;
    std::vector<Vec> m_bias, v_bias;
    long step = 0;
};

AdamState make_adam_state(const ReluNetwork& net);
void adam_step(ReluNetwork& net, const Gradients& g, AdamState& state, double learning_rate,
               const AdamParams& params);

struct TrainResult {
    ReluNetwork net;
    std::vector<EpochLog> logs;
    std::vector<std::filesystem::path> checkpoints;
    std::vector<int> checkpoint_epochs;
};

/// Deterministic full-batch Adam training with periodic checkpoints
/// (epoch 0, every checkpoint_every, and the final epoch).
TrainResult train(ReluNetwork net, const TrainingSet& train_set,
                  const std::optional<TrainingSet>& test_set, const TrainConfig& cfg);

// dataset adapters
TrainingSet classification_set(const LabeledDataset2D& ds, const std::vector<int>& index);
TrainingSet pinn_set(const PinnPairs& pairs);

void save_log_csv(const std::vector<EpochLog>& logs, const std::filesystem::path& path);
std::vector<EpochLog> load_log_csv(const std::filesystem::path& path);

}  // namespace pscope
