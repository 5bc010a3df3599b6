#include "otsing/classifier.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "otsing/errors.hpp"
#include "otsing/rng.hpp"

namespace otsing {

namespace {

constexpr double kProbFloor = 1e-30;

Matrix relu(Matrix z) {
    return z.cwiseMax(0.0);
}

// Row-wise softmax with max-subtraction.
Matrix softmax_rows(Matrix logits) {
    for (Index r = 0; r < logits.rows(); ++r) {
        logits.row(r).array() -= logits.row(r).maxCoeff();
    }
    Matrix probs = logits.array().exp();
    for (Index r = 0; r < probs.rows(); ++r) {
        probs.row(r) /= probs.row(r).sum();
    }
    return probs;
}

void check_inputs(const ToyClassifier& model, const Matrix& inputs) {
    if (inputs.cols() != model.input_dim()) {
        throw ShapeError("classifier: input dimension " + std::to_string(inputs.cols()) +
                         " != model input " + std::to_string(model.input_dim()));
    }
    if (!inputs.allFinite()) {
        throw TrainingError("classifier: non-finite input");
    }
}

struct ForwardCache {
    std::vector<Matrix> activations; // activations[0] = inputs
    std::vector<Matrix> pre_acts;    // pre-activations per layer
    Matrix probs;
};

ForwardCache forward_cached(const ToyClassifier& model, const Matrix& inputs) {
    ForwardCache cache;
    cache.activations.push_back(inputs);
    Matrix a = inputs;
    const std::size_t layers = model.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = a * model.weights[l].transpose();
        z.rowwise() += model.biases[l].transpose();
        cache.pre_acts.push_back(z);
        if (l + 1 < layers) {
            a = relu(std::move(z));
            cache.activations.push_back(a);
        } else {
            cache.probs = softmax_rows(std::move(z));
        }
    }
    return cache;
}

// Backpropagate a logit-space delta (row per sample) into parameter space.
void backprop(const ToyClassifier& model, const ForwardCache& cache,
              const Matrix& logit_delta, Gradients& grads) {
    const auto layers = model.weights.size();
    Matrix delta = logit_delta;
    for (std::size_t l = layers; l-- > 0;) {
        grads.weights[l] += delta.transpose() * cache.activations[l];
        grads.biases[l] += delta.colwise().sum().transpose();
        if (l > 0) {
            delta = (delta * model.weights[l])
                        .cwiseProduct((cache.pre_acts[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
}

Gradients zero_gradients(const ToyClassifier& model) {
    Gradients grads;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        grads.weights.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
        grads.biases.push_back(Vector::Zero(model.biases[l].size()));
    }
    return grads;
}

} // namespace

ToyClassifier ToyClassifier::init(const std::vector<Index>& layer_sizes,
                                  std::uint64_t seed) {
    if (layer_sizes.size() < 2) {
        throw ConfigError("classifier: need at least input and output layers");
    }
    for (Index s : layer_sizes) {
        if (s < 1) throw ConfigError("classifier: layer sizes must be positive");
    }
    ToyClassifier model;
    model.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const Index fan_in = layer_sizes[l];
        const Index fan_out = layer_sizes[l + 1];
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        SeededRng rng(SeededRng::derive(seed, 0x696E6974ull, static_cast<std::uint64_t>(l)));
        Matrix w(fan_out, fan_in);
        for (Index r = 0; r < fan_out; ++r) {
            for (Index c = 0; c < fan_in; ++c) {
                w(r, c) = scale * rng.next_gaussian();
            }
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(Vector::Zero(fan_out));
    }
    return model;
}

Matrix ToyClassifier::forward_batch(const Matrix& inputs) const {
    check_inputs(*this, inputs);
    return forward_cached(*this, inputs).probs;
}

Vector ToyClassifier::forward(const Vector& x) const {
    return forward_batch(x.transpose()).row(0).transpose();
}

Index ToyClassifier::predict(const Vector& x) const {
    const Vector probs = forward(x);
    Index best = 0;
    for (Index i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return best;
}

double suppression_loss(const Vector& probs) {
    if (probs.size() < 2) {
        throw TrainingError("suppression loss: need at least two classes");
    }
    double sum = 0.0;
    for (Index i = 0; i < probs.size(); ++i) {
        if (!std::isfinite(probs[i])) {
            throw TrainingError("suppression loss: non-finite probability");
        }
        const double clamped = std::max(probs[i], kProbFloor);
        if (!(clamped > 0.0)) {
            throw TrainingError("suppression loss: zero probability after clamping");
        }
        sum += std::log(clamped);
    }
    return -sum / static_cast<double>(probs.size());
}

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("trainer: epochs must be >= 0");
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw ConfigError("trainer: batch size must be even and >= 2");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("trainer: learning rate must be positive");
    if (ood_weight < 0.0) throw ConfigError("trainer: ood_weight must be >= 0");
}

namespace {

void check_labels(const std::vector<int>& labels, Index count, Index num_classes) {
    if (static_cast<Index>(labels.size()) != count) {
        throw ShapeError("classifier: label count != sample count");
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) {
            throw TrainingError("classifier: label " + std::to_string(y) +
                                " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

// Shared loss/gradient core. The CE term uses the standard softmax identity
// (delta = V - onehot); the suppression term's logit gradient is V - 1/K,
// exact whenever no probability sits below the clamp floor.
double mixed_core(const ToyClassifier& model, const Matrix& id_x,
                  const std::vector<int>& id_y, const Matrix& otis_x,
                  double ood_weight, Gradients* grads, double* ce_out, double* sup_out) {
    const Index n_id = id_x.rows();
    const Index n_otis = otis_x.rows();
    if (n_id == 0 && n_otis == 0) {
        throw TrainingError("classifier: both batches empty");
    }
    const auto num_classes = model.num_classes();
    const double inv_k = 1.0 / static_cast<double>(num_classes);

    double ce = 0.0;
    double sup = 0.0;
    if (n_id > 0) {
        check_inputs(model, id_x);
        check_labels(id_y, n_id, num_classes);
        ForwardCache cache = forward_cached(model, id_x);
        for (Index r = 0; r < n_id; ++r) {
            ce -= std::log(std::max(cache.probs(r, id_y[static_cast<std::size_t>(r)]), kProbFloor));
        }
        ce /= static_cast<double>(n_id);
        if (grads) {
            Matrix delta = cache.probs;
            for (Index r = 0; r < n_id; ++r) {
                delta(r, id_y[static_cast<std::size_t>(r)]) -= 1.0;
            }
            delta /= static_cast<double>(n_id);
            backprop(model, cache, delta, *grads);
        }
    }
    if (n_otis > 0) {
        check_inputs(model, otis_x);
        ForwardCache cache = forward_cached(model, otis_x);
        for (Index r = 0; r < n_otis; ++r) {
            sup += suppression_loss(cache.probs.row(r).transpose());
        }
        sup /= static_cast<double>(n_otis);
        if (grads && ood_weight != 0.0) {
            Matrix delta = (cache.probs.array() - inv_k).matrix() *
                           (ood_weight / static_cast<double>(n_otis));
            backprop(model, cache, delta, *grads);
        }
    }
    if (ce_out) *ce_out = ce;
    if (sup_out) *sup_out = sup;
    const double total = ce + ood_weight * sup;
    if (!std::isfinite(total)) {
        throw TrainingError("classifier: non-finite loss (ce=" + std::to_string(ce) +
                            ", sup=" + std::to_string(sup) + ")");
    }
    return total;
}

} // namespace

double mixed_loss(const ToyClassifier& model, const Matrix& id_x,
                  const std::vector<int>& id_y, const Matrix& otis_x,
                  double ood_weight, double* ce_out, double* sup_out) {
    return mixed_core(model, id_x, id_y, otis_x, ood_weight, nullptr, ce_out, sup_out);
}

Gradients mixed_gradients(const ToyClassifier& model, const Matrix& id_x,
                          const std::vector<int>& id_y, const Matrix& otis_x,
                          double ood_weight, double* ce_out, double* sup_out) {
    Gradients grads = zero_gradients(model);
    mixed_core(model, id_x, id_y, otis_x, ood_weight, &grads, ce_out, sup_out);
    return grads;
}

StepResult mixed_batch_step(ToyClassifier& model, const Matrix& id_x,
                            const std::vector<int>& id_y, const Matrix& otis_x,
                            const TrainConfig& config) {
    StepResult result;
    const Gradients grads = mixed_gradients(model, id_x, id_y, otis_x, config.ood_weight,
                                            &result.ce_loss, &result.sup_loss);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= config.learning_rate * grads.weights[l];
        model.biases[l] -= config.learning_rate * grads.biases[l];
    }
    return result;
}

namespace {

std::vector<Index> shuffled_indices(Index count, std::uint64_t seed) {
    std::vector<Index> order(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) order[static_cast<std::size_t>(k)] = k;
    SeededRng rng(seed);
    for (Index k = 0; k + 1 < count; ++k) {
        const auto other = k + static_cast<Index>(rng.next_below(
                                   static_cast<std::uint64_t>(count - k)));
        std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(other)]);
    }
    return order;
}

Matrix gather_rows(const Matrix& source, const std::vector<Index>& order, Index begin,
                   Index count, Index modulo) {
    Matrix out(count, source.cols());
    for (Index k = 0; k < count; ++k) {
        const Index idx = order[static_cast<std::size_t>((begin + k) % modulo)];
        out.row(k) = source.row(idx);
    }
    return out;
}

} // namespace

TrainHistory train(ToyClassifier& model, const Matrix& id_x,
                   const std::vector<int>& id_y, const Matrix& otis_x,
                   const TrainConfig& config, const Matrix* test_x,
                   const std::vector<int>* test_y) {
    config.validate();
    if (id_x.rows() == 0) {
        throw TrainingError("train: empty ID dataset");
    }
    check_labels(id_y, id_x.rows(), model.num_classes());

    const bool with_otis = otis_x.rows() > 0;
    const Index id_per_step = with_otis ? config.batch_size / 2 : config.batch_size;
    const Index steps = std::max<Index>(1, id_x.rows() / id_per_step);

    TrainHistory history;
    for (Index epoch = 0; epoch < config.epochs; ++epoch) {
        const auto id_order = shuffled_indices(
            id_x.rows(), SeededRng::derive(config.seed, 0x73686649ull,
                                           static_cast<std::uint64_t>(epoch)));
        std::vector<Index> otis_order;
        if (with_otis) {
            otis_order = shuffled_indices(
                otis_x.rows(), SeededRng::derive(config.seed, 0x7368664Full,
                                                 static_cast<std::uint64_t>(epoch)));
        }

        double ce_sum = 0.0;
        double sup_sum = 0.0;
        for (Index s = 0; s < steps; ++s) {
            const Matrix id_batch = gather_rows(id_x, id_order, s * id_per_step,
                                                id_per_step, id_x.rows());
            std::vector<int> label_batch(static_cast<std::size_t>(id_per_step));
            for (Index k = 0; k < id_per_step; ++k) {
                label_batch[static_cast<std::size_t>(k)] =
                    id_y[static_cast<std::size_t>(id_order[static_cast<std::size_t>(
                        (s * id_per_step + k) % id_x.rows())])];
            }
            Matrix otis_batch(0, id_x.cols());
            if (with_otis) {
                otis_batch = gather_rows(otis_x, otis_order, s * (config.batch_size / 2),
                                         config.batch_size / 2, otis_x.rows());
            }
            const StepResult step = mixed_batch_step(model, id_batch, label_batch,
                                                     otis_batch, config);
            ce_sum += step.ce_loss;
            sup_sum += step.sup_loss;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.ce_loss = ce_sum / static_cast<double>(steps);
        stats.sup_loss = sup_sum / static_cast<double>(steps);
        stats.train_accuracy = accuracy(model, id_x, id_y);
        stats.test_accuracy = (test_x && test_y)
                                  ? accuracy(model, *test_x, *test_y)
                                  : std::numeric_limits<double>::quiet_NaN();
        history.push_back(stats);
    }
    return history;
}

double accuracy(const ToyClassifier& model, const Matrix& inputs,
                const std::vector<int>& labels) {
    check_labels(labels, inputs.rows(), model.num_classes());
    const Matrix probs = model.forward_batch(inputs);
    Index hits = 0;
    for (Index r = 0; r < probs.rows(); ++r) {
        Index best = 0;
        for (Index i = 1; i < probs.cols(); ++i) {
            if (probs(r, i) > probs(r, best)) best = i;
        }
        if (best == labels[static_cast<std::size_t>(r)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

void save_model_json(const std::filesystem::path& path, const ToyClassifier& model) {
    nlohmann::json j;
    j["layers"] = model.layer_sizes;
    j["activation"] = "relu";
    nlohmann::json w = nlohmann::json::array();
    nlohmann::json b = nlohmann::json::array();
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        std::vector<double> flat(static_cast<std::size_t>(model.weights[l].size()));
        // row-major flattening
        Index pos = 0;
        for (Index r = 0; r < model.weights[l].rows(); ++r) {
            for (Index c = 0; c < model.weights[l].cols(); ++c) {
                flat[static_cast<std::size_t>(pos++)] = model.weights[l](r, c);
            }
        }
        w.push_back(flat);
        b.push_back(std::vector<double>(model.biases[l].begin(), model.biases[l].end()));
    }
    j["weights"] = std::move(w);
    j["biases"] = std::move(b);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

ToyClassifier load_model_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    nlohmann::json j;
    try {
        in >> j;
        ToyClassifier model;
        model.layer_sizes = j.at("layers").get<std::vector<Index>>();
        if (j.at("activation").get<std::string>() != "relu") {
            throw IoError(path.string() + ": unsupported activation");
        }
        const auto w = j.at("weights").get<std::vector<std::vector<double>>>();
        const auto b = j.at("biases").get<std::vector<std::vector<double>>>();
        if (w.size() + 1 != model.layer_sizes.size() || b.size() != w.size()) {
            throw IoError(path.string() + ": layer count mismatch");
        }
        for (std::size_t l = 0; l < w.size(); ++l) {
            const Index rows = model.layer_sizes[l + 1];
            const Index cols = model.layer_sizes[l];
            if (static_cast<Index>(w[l].size()) != rows * cols ||
                static_cast<Index>(b[l].size()) != rows) {
                throw IoError(path.string() + ": parameter size mismatch at layer " +
                              std::to_string(l));
            }
            Matrix weight(rows, cols);
            Index pos = 0;
            for (Index r = 0; r < rows; ++r) {
                for (Index c = 0; c < cols; ++c) {
                    weight(r, c) = w[l][static_cast<std::size_t>(pos++)];
                }
            }
            model.weights.push_back(std::move(weight));
            model.biases.push_back(
                Eigen::Map<const Vector>(b[l].data(), static_cast<Index>(b[l].size())));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": bad model file: " + e.what());
    }
}

void save_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "epoch,ce_loss,sup_loss,id_train_acc,id_test_acc\n";
    char buf[128];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%td,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                      e.ce_loss, e.sup_loss, e.train_accuracy, e.test_accuracy);
        out << buf;
    }
}

} // namespace otsing
