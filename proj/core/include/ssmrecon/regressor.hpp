#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ssmrecon/slicer.hpp"
#include "ssmrecon/ssm.hpp"

namespace ssmrecon {

/// Two-layer regression network alpha = W2 relu(W1 x + b1) + b2.
struct MlpParams {
    Eigen::MatrixXd w1;  ///< H x D
    Eigen::VectorXd b1;  ///< H
    Eigen::MatrixXd w2;  ///< K x H
    Eigen::VectorXd b2;  ///< K

    [[nodiscard]] int input_size() const { return static_cast<int>(w1.cols()); }
    [[nodiscard]] int hidden_size() const { return static_cast<int>(w1.rows()); }
    [[nodiscard]] int output_size() const { return static_cast<int>(w2.rows()); }

    /// Throws DataError on inconsistent shapes, NumericalError on non-finite entries.
    void validate() const;
    [[nodiscard]] static MlpParams zeros(int input, int hidden, int output);
    /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    [[nodiscard]] static MlpParams glorot(int input, int hidden, int output, std::uint64_t seed);

    bool operator==(const MlpParams& other) const;
};

/// Binary network input stored as the sorted indices of its on entries.
struct SparseInput {
    int size = 0;
    std::vector<int> active;
};

[[nodiscard]] SparseInput encode_input(const MaskStack& stack);
[[nodiscard]] Eigen::VectorXd dense_input(const SparseInput& input);

struct Sample {
    SparseInput input;
    ShapeParams target;
};

[[nodiscard]] ShapeParams forward(const MlpParams& params, const SparseInput& input);
[[nodiscard]] ShapeParams forward(const MlpParams& params, const MaskStack& stack);

/// Mean over the batch of |prediction - target|^2 / K.
[[nodiscard]] double loss(const MlpParams& params, std::span<const Sample> batch);

/// Exact gradient of `loss` with respect to every parameter.
[[nodiscard]] MlpParams gradient(const MlpParams& params, std::span<const Sample> batch);

enum class Optimizer { sgd, adam };

struct TrainConfig {
    Optimizer optimizer = Optimizer::sgd;
    double learning_rate = 1e-3;
    double momentum = 0.9;  ///< heavy-ball momentum for sgd
    int epochs = 300;
    int batch_size = 16;
    double validation_fraction = 0.2;
    int patience = 30;
    std::uint64_t seed = 7;
    int hidden = 256;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;  ///< NaN when there is no validation split
};

struct TrainResult {
    MlpParams params;
    std::vector<EpochLog> log;
    std::vector<int> train_indices;
    std::vector<int> val_indices;
    int best_epoch = 0;
};

/// Deterministic validation split: floor(n * fraction) samples, chosen by a
/// seeded shuffle.
void split_validation(int n, double fraction, std::uint64_t seed, std::vector<int>& train,
                      std::vector<int>& val);

/// Seeded mini-batch gradient descent (momentum SGD or Adam). Keeps the parameters of the epoch
/// with the lowest validation loss (training loss when there is no
/// validation split) and stops after `patience` epochs without improvement.
/// Throws NumericalError naming the epoch when the loss becomes non-finite.
[[nodiscard]] TrainResult train(std::span<const Sample> dataset, const TrainConfig& cfg);

/// Manifest `<stem>.mlp.json` (D, H, K, format_version) and float64 sidecar
/// `<stem>.mlp.bin` holding W1, b1, W2, b2 row-major.
void save_weights(const MlpParams& params, const std::filesystem::path& path);
[[nodiscard]] MlpParams load_weights(const std::filesystem::path& path);

}  // namespace ssmrecon
