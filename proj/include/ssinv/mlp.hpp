#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssinv/dataset.hpp"

namespace ssinv {

enum class Head { kSoftmax, kLinear, kSigmoid };
enum class TrainTarget { kPmf, kCycle, kFulfill };

Head head_for(TrainTarget target);
std::vector<int> default_hidden(TrainTarget target);
std::string to_string(Head head);
std::string to_string(TrainTarget target);
TrainTarget train_target_from_string(const std::string& name);

/// Fully connected ReLU network. W[l] is (d_l x d_{l+1}); the head activation
/// lives on the last layer's output.
struct MlpModel {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;
    Head head = Head::kLinear;
    int n_D = 5;
    int n_L = 5;
    bool log_target = false;

    int epochs_run = 0;
    double final_train_loss = 0;
    double final_val_loss = 0;
    std::uint64_t config_hash = 0;

    std::int64_t parameter_count() const;
};

/// Uniform fan-in init: every weight and bias of layer l drawn from
/// U(-1/sqrt(d_l), 1/sqrt(d_l)), row-major W first, then b. Rejects configs
/// without at least one hidden layer.
MlpModel init_mlp(std::span<const int> layer_sizes, Head head, std::uint64_t seed);

/// Head-activated outputs for a batch (rows = instances).
Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& X);

/// Batch-mean L1 distance between padded PMF rows.
double loss_pmf(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);
/// Batch-mean squared error for scalar outputs.
double loss_scalar(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);
/// The loss paired with a head: L1 for softmax, MSE otherwise.
double loss_for_head(Head head, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

struct Gradients {
    std::vector<Eigen::MatrixXd> gW;
    std::vector<Eigen::VectorXd> gb;
};

/// Loss and full analytic gradient for one batch (backprop).
double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& target, Gradients& grads);

/// One Adam step with decoupled weight decay:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  t is 1-based;
///   theta <- theta - lr * mhat / (sqrt(vhat) + eps) - lr * wd * theta.
void adam_update(Eigen::Ref<Eigen::MatrixXd> param, Eigen::Ref<Eigen::MatrixXd> m,
                 Eigen::Ref<Eigen::MatrixXd> v, const Eigen::MatrixXd& grad, int t, double lr,
                 double beta1, double beta2, double eps, double weight_decay);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 128;
    double weight_decay = 1e-5;
    int max_epochs = 500;
    int early_stop_window = 50;
    double early_stop_threshold = 1e-5;
    std::uint64_t seed = 1;
    TrainTarget target = TrainTarget::kPmf;
    std::vector<int> hidden;  // empty -> default_hidden(target)
    int n_D = 5;
    int n_L = 5;
    bool log_target = false;  // cycle target trained on ln E[C]
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

std::string train_config_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;
    bool early_stopped = false;
};

struct TrainResult {
    MlpModel model;
    TrainHistory history;
};

Eigen::MatrixXd feature_matrix(std::span<const Record> records, int n_D, int n_L);
Eigen::MatrixXd target_matrix(std::span<const Record> records, TrainTarget target,
                              bool log_target);

/// Adam + decoupled weight decay over shuffled batches (per-epoch shuffle
/// reseeded from cfg.seed). Stops at max_epochs or when the relative change
/// in training loss over early_stop_window epochs drops below the threshold;
/// returns the best-validation-loss checkpoint. Throws on NaN loss.
TrainResult train(std::span<const Record> train_set, std::span<const Record> val_set,
                  const TrainConfig& cfg);
TrainResult train_matrices(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           const Eigen::MatrixXd& Xval, const Eigen::MatrixXd& Yval,
                           const TrainConfig& cfg);

/// Renormalizes the first S+1 entries to sum 1 and zeroes the rest.
/// Throws when no mass lies on 0..S.
Eigen::VectorXd project_support(const Eigen::VectorXd& raw, int S);

struct PredictionBundle {
    Eigen::VectorXd P_hat;  // kPmfPad entries, projected
    double EC_hat = 0;
    double pi0_hat = 0;
};

struct ModelBundle {
    MlpModel pmf;
    MlpModel cycle;
    MlpModel fulfill;
};

/// Batched inference: NN outputs plus per-row support projection using that
/// row's S; pi0_hat = 1 - sigmoid output (clamped away from 0/1).
std::vector<PredictionBundle> predict(const ModelBundle& bundle, const Eigen::MatrixXd& X);

std::string checkpoint_json(const MlpModel& model, const TrainConfig& cfg);
MlpModel checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::string& path, const MlpModel& model, const TrainConfig& cfg);
MlpModel load_checkpoint(const std::string& path);
ModelBundle load_bundle(const std::string& dir);

}  // namespace ssinv
