#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "otsing/types.hpp"

namespace otsing {

// Small ReLU multilayer perceptron with a softmax head, trained by manual
// backpropagation. Default shape is d -> 64 -> 64 -> K; small enough for
// exhaustive finite-difference checks.
struct ToyClassifier {
    std::vector<Index> layer_sizes;  // {d, hidden..., K}
    std::vector<Matrix> weights;     // weights[l] maps layer l to l+1
    std::vector<Vector> biases;

    // He-scaled Gaussian init, deterministic in the seed; biases start at 0.
    static ToyClassifier init(const std::vector<Index>& layer_sizes, std::uint64_t seed);

    Index input_dim() const { return layer_sizes.front(); }
    Index num_classes() const { return layer_sizes.back(); }

    // Softmax probabilities; max-subtraction keeps logits up to +-1e3 finite.
    Vector forward(const Vector& x) const;
    Matrix forward_batch(const Matrix& inputs) const; // row per sample
    Index predict(const Vector& x) const;
};

// Cross-entropy to the uniform distribution: -(1/K) sum_i log V_i, clamped
// below at 1e-30 before the log. Minimized exactly at uniform V with value
// log K, so driving it down spreads confidence across classes.
double suppression_loss(const Vector& probs);

struct TrainConfig {
    Index epochs = 200;
    Index batch_size = 32;       // split 50/50 between ID and OTIS rows
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    double ood_weight = 1.0;     // multiplier on the suppression term

    void validate() const; // throws ConfigError
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

// L = mean CE(id) + ood_weight * mean suppression(otis). Either batch may be
// empty (the other term is then the whole objective); both empty is a
// TrainingError. Returns the two loss terms alongside the gradient.
double mixed_loss(const ToyClassifier& model, const Matrix& id_x,
                  const std::vector<int>& id_y, const Matrix& otis_x,
                  double ood_weight, double* ce_out = nullptr, double* sup_out = nullptr);
Gradients mixed_gradients(const ToyClassifier& model, const Matrix& id_x,
                          const std::vector<int>& id_y, const Matrix& otis_x,
                          double ood_weight, double* ce_out = nullptr,
                          double* sup_out = nullptr);

struct StepResult {
    double ce_loss = 0.0;
    double sup_loss = 0.0;
};

// One SGD step on the mixed objective, in place.
StepResult mixed_batch_step(ToyClassifier& model, const Matrix& id_x,
                            const std::vector<int>& id_y, const Matrix& otis_x,
                            const TrainConfig& config);

struct EpochStats {
    Index epoch = 0;
    double ce_loss = 0.0;
    double sup_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0; // NaN when no held-out set was given
};

using TrainHistory = std::vector<EpochStats>;

// Epochs of shuffled 50/50 batches (all-ID batches when the OTIS pool is
// empty); the OTIS pool is reshuffled per epoch and cycled when smaller than
// the ID pool. Deterministic given config.seed.
TrainHistory train(ToyClassifier& model, const Matrix& id_x,
                   const std::vector<int>& id_y, const Matrix& otis_x,
                   const TrainConfig& config, const Matrix* test_x = nullptr,
                   const std::vector<int>* test_y = nullptr);

double accuracy(const ToyClassifier& model, const Matrix& inputs,
                const std::vector<int>& labels);

void save_model_json(const std::filesystem::path& path, const ToyClassifier& model);
ToyClassifier load_model_json(const std::filesystem::path& path);
void save_history_csv(const std::filesystem::path& path, const TrainHistory& history);

} // namespace otsing
