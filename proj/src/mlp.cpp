#include "ssinv/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ssinv/json_util.hpp"
#include "ssinv/rng.hpp"

namespace ssinv {

Head head_for(TrainTarget target) {
    switch (target) {
        case TrainTarget::kPmf: return Head::kSoftmax;
        case TrainTarget::kCycle: return Head::kLinear;
        case TrainTarget::kFulfill: return Head::kSigmoid;
    }
    throw std::logic_error("head_for: bad target");
}

std::vector<int> default_hidden(TrainTarget target) {
    switch (target) {
        case TrainTarget::kPmf: return {50, 70, 100, 90, 60};
        case TrainTarget::kCycle: return {50, 70, 70, 60, 50};
        case TrainTarget::kFulfill: return {50, 70, 70, 60, 10};
    }
    throw std::logic_error("default_hidden: bad target");
}

std::string to_string(Head head) {
    switch (head) {
        case Head::kSoftmax: return "softmax";
        case Head::kLinear: return "linear";
        case Head::kSigmoid: return "sigmoid";
    }
    throw std::logic_error("to_string: bad head");
}

std::string to_string(TrainTarget target) {
    switch (target) {
        case TrainTarget::kPmf: return "pmf";
        case TrainTarget::kCycle: return "cycle";
        case TrainTarget::kFulfill: return "fulfill";
    }
    throw std::logic_error("to_string: bad target");
}

TrainTarget train_target_from_string(const std::string& name) {
    if (name == "pmf") return TrainTarget::kPmf;
    if (name == "cycle") return TrainTarget::kCycle;
    if (name == "fulfill") return TrainTarget::kFulfill;
    throw std::invalid_argument("unknown target: " + name);
}

namespace {

Head head_from_string(const std::string& name) {
    if (name == "softmax") return Head::kSoftmax;
    if (name == "linear") return Head::kLinear;
    if (name == "sigmoid") return Head::kSigmoid;
    throw std::invalid_argument("unknown head: " + name);
}

}  // namespace

std::int64_t MlpModel::parameter_count() const {
    std::int64_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        n += static_cast<std::int64_t>(layer_sizes[l] + 1) * layer_sizes[l + 1];
    return n;
}

MlpModel init_mlp(std::span<const int> layer_sizes, Head head, std::uint64_t seed) {
    if (layer_sizes.size() < 3)
        throw std::invalid_argument("init_mlp: need at least one hidden layer");
    for (int d : layer_sizes)
        if (d < 1) throw std::invalid_argument("init_mlp: layer dims must be >= 1");

    MlpModel model;
    model.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
    model.head = head;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        const int din = model.layer_sizes[l];
        const int dout = model.layer_sizes[l + 1];
        const double a = 1.0 / std::sqrt(static_cast<double>(din));
        Eigen::MatrixXd W(din, dout);
        for (int r = 0; r < din; ++r)
            for (int c = 0; c < dout; ++c) W(r, c) = rng.uniform(-a, a);
        Eigen::VectorXd b(dout);
        for (int c = 0; c < dout; ++c) b[c] = rng.uniform(-a, a);
        model.W.push_back(std::move(W));
        model.b.push_back(std::move(b));
    }
    return model;
}

namespace {

Eigen::MatrixXd apply_head(Head head, const Eigen::MatrixXd& Z) {
    switch (head) {
        case Head::kSoftmax: {
            Eigen::MatrixXd Y = Z;
            const Eigen::VectorXd rowmax = Z.rowwise().maxCoeff();
            Y = (Y.colwise() - rowmax).array().exp().matrix();
            const Eigen::VectorXd rowsum = Y.rowwise().sum();
            return Y.array().colwise() / rowsum.array();
        }
        case Head::kLinear: return Z;
        case Head::kSigmoid: return (1.0 / (1.0 + (-Z.array()).exp())).matrix();
    }
    throw std::logic_error("apply_head: bad head");
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> Z;  // pre-activation per layer
    std::vector<Eigen::MatrixXd> A;  // A[0] = X, A[l] = relu(Z[l-1])
    Eigen::MatrixXd Y;               // head output
};

void forward_cached(const MlpModel& model, const Eigen::MatrixXd& X, ForwardCache& cache) {
    if (X.cols() != model.layer_sizes.front())
        throw std::invalid_argument("forward: feature dim mismatch");
    const std::size_t L = model.W.size();
    cache.Z.resize(L);
    cache.A.resize(L);
    cache.A[0] = X;
    for (std::size_t l = 0; l < L; ++l) {
        cache.Z[l] = (cache.A[l] * model.W[l]).rowwise() + model.b[l].transpose();
        if (l + 1 < L) cache.A[l + 1] = cache.Z[l].cwiseMax(0.0);
    }
    cache.Y = apply_head(model.head, cache.Z[L - 1]);
}

}  // namespace

Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& X) {
    ForwardCache cache;
    forward_cached(model, X, cache);
    return cache.Y;
}

double loss_pmf(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("loss_pmf: shape mismatch");
    return (pred - target).cwiseAbs().sum() / static_cast<double>(pred.rows());
}

double loss_scalar(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("loss_scalar: shape mismatch");
    return (pred - target).array().square().sum() / static_cast<double>(pred.rows());
}

double loss_for_head(Head head, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    return head == Head::kSoftmax ? loss_pmf(pred, target) : loss_scalar(pred, target);
}

double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& target, Gradients& grads) {
    ForwardCache cache;
    forward_cached(model, X, cache);
    const auto N = static_cast<double>(X.rows());
    const std::size_t L = model.W.size();
    const Eigen::MatrixXd& Y = cache.Y;

    double loss;
    Eigen::MatrixXd delta;  // dLoss/dZ of the last layer
    if (model.head == Head::kSoftmax) {
        loss = loss_pmf(Y, target);
        const Eigen::MatrixXd G = (Y - target).array().sign().matrix() / N;
        const Eigen::ArrayXd rowdot = (G.array() * Y.array()).rowwise().sum();
        delta = (Y.array() * (G.array().colwise() - rowdot)).matrix();
    } else if (model.head == Head::kLinear) {
        loss = loss_scalar(Y, target);
        delta = 2.0 * (Y - target) / N;
    } else {
        loss = loss_scalar(Y, target);
        delta = ((2.0 * (Y - target) / N).array() * Y.array() * (1.0 - Y.array())).matrix();
    }

    grads.gW.resize(L);
    grads.gb.resize(L);
    for (std::size_t l = L; l-- > 0;) {
        grads.gW[l] = cache.A[l].transpose() * delta;
        grads.gb[l] = delta.colwise().sum();
        if (l > 0) {
            delta = (delta * model.W[l].transpose())
                        .cwiseProduct((cache.Z[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return loss;
}

void adam_update(Eigen::Ref<Eigen::MatrixXd> param, Eigen::Ref<Eigen::MatrixXd> m,
                 Eigen::Ref<Eigen::MatrixXd> v, const Eigen::MatrixXd& grad, int t, double lr,
                 double beta1, double beta2, double eps, double weight_decay) {
    m = beta1 * m + (1 - beta1) * grad;
    v.array() = beta2 * v.array() + (1 - beta2) * grad.array().square();
    const double bc1 = 1 - std::pow(beta1, t);
    const double bc2 = 1 - std::pow(beta2, t);
    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    param.array() -= lr * weight_decay * param.array();
}

Eigen::MatrixXd feature_matrix(std::span<const Record> records, int n_D, int n_L) {
    const auto N = static_cast<Eigen::Index>(records.size());
    Eigen::MatrixXd X(N, 2 + n_D + n_L);
    for (Eigen::Index i = 0; i < N; ++i) {
        const std::vector<double> f = feature_vector(records[static_cast<std::size_t>(i)], n_D, n_L);
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(i, c) = f[static_cast<std::size_t>(c)];
    }
    return X;
}

Eigen::MatrixXd target_matrix(std::span<const Record> records, TrainTarget target,
                              bool log_target) {
    const auto N = static_cast<Eigen::Index>(records.size());
    Eigen::MatrixXd Y(N, target == TrainTarget::kPmf ? kPmfPad : 1);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Record& rec = records[static_cast<std::size_t>(i)];
        if (!rec.labels) throw std::invalid_argument("target_matrix: record lacks labels");
        switch (target) {
            case TrainTarget::kPmf: {
                if (rec.inst.S + 1 > kPmfPad)
                    throw std::invalid_argument("target_matrix: S exceeds PMF padding");
                for (int j = 0; j < kPmfPad; ++j)
                    Y(i, j) = rec.labels->P[static_cast<std::size_t>(j)];
                break;
            }
            case TrainTarget::kCycle:
                Y(i, 0) = log_target ? std::log(rec.labels->EC) : rec.labels->EC;
                break;
            case TrainTarget::kFulfill:
                Y(i, 0) = 1.0 - rec.labels->pi0;
                break;
        }
    }
    return Y;
}

TrainResult train_matrices(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           const Eigen::MatrixXd& Xval, const Eigen::MatrixXd& Yval,
                           const TrainConfig& cfg) {
    const Eigen::Index N = X.rows();
    if (N == 0) throw std::invalid_argument("train: empty training set");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");

    std::vector<int> dims;
    dims.push_back(static_cast<int>(X.cols()));
    const std::vector<int> hidden = cfg.hidden.empty() ? default_hidden(cfg.target) : cfg.hidden;
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(static_cast<int>(Y.cols()));

    MlpModel cur = init_mlp(dims, head_for(cfg.target), derive_stream_seed(cfg.seed, 7001));
    cur.n_D = cfg.n_D;
    cur.n_L = cfg.n_L;
    cur.log_target = cfg.log_target;
    cur.config_hash = fnv1a_hash(train_config_json(cfg));

    const std::size_t L = cur.W.size();
    std::vector<Eigen::MatrixXd> mW(L), vW(L), mB(L), vB(L);
    for (std::size_t l = 0; l < L; ++l) {
        mW[l] = Eigen::MatrixXd::Zero(cur.W[l].rows(), cur.W[l].cols());
        vW[l] = mW[l];
        mB[l] = Eigen::MatrixXd::Zero(cur.b[l].size(), 1);
        vB[l] = mB[l];
    }

    TrainResult result;
    TrainHistory& hist = result.history;
    MlpModel best = cur;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i) perm[static_cast<std::size_t>(i)] = i;
    Gradients grads;
    int t = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_stream_seed(cfg.seed, 9000 + static_cast<std::uint64_t>(epoch)));
        for (Eigen::Index i = N - 1; i > 0; --i) {
            const auto j = static_cast<Eigen::Index>(
                shuffle_rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }

        double loss_sum = 0;
        for (Eigen::Index start = 0; start < N; start += cfg.batch_size) {
            const Eigen::Index nb = std::min<Eigen::Index>(cfg.batch_size, N - start);
            Eigen::MatrixXd Xb(nb, X.cols()), Yb(nb, Y.cols());
            for (Eigen::Index r = 0; r < nb; ++r) {
                Xb.row(r) = X.row(perm[static_cast<std::size_t>(start + r)]);
                Yb.row(r) = Y.row(perm[static_cast<std::size_t>(start + r)]);
            }
            const double loss = loss_and_gradients(cur, Xb, Yb, grads);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", step " + std::to_string(t));
            ++t;
            for (std::size_t l = 0; l < L; ++l) {
                adam_update(cur.W[l], mW[l], vW[l], grads.gW[l], t, cfg.learning_rate,
                            cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay);
                Eigen::Map<Eigen::MatrixXd> bmap(cur.b[l].data(), cur.b[l].size(), 1);
                adam_update(bmap, mB[l], vB[l], Eigen::MatrixXd(grads.gb[l]), t,
                            cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
                            cfg.weight_decay);
            }
            loss_sum += loss * static_cast<double>(nb);
        }
        hist.train_loss.push_back(loss_sum / static_cast<double>(N));

        double val = hist.train_loss.back();
        if (Xval.rows() > 0) val = loss_for_head(cur.head, forward(cur, Xval), Yval);
        hist.val_loss.push_back(val);
        if (val < best_val) {
            best_val = val;
            best.W = cur.W;
            best.b = cur.b;
            hist.best_epoch = epoch;
        }

        const int w = cfg.early_stop_window;
        if (w > 0 && epoch >= w) {
            const double prev = hist.train_loss[static_cast<std::size_t>(epoch - w)];
            const double now = hist.train_loss.back();
            const double change = std::abs(prev - now);
            if ((prev != 0 && change / std::abs(prev) < cfg.early_stop_threshold) ||
                (prev == 0 && change == 0)) {
                hist.early_stopped = true;
                break;
            }
        }
    }

    best.epochs_run = static_cast<int>(hist.train_loss.size());
    best.final_train_loss = hist.train_loss.back();
    best.final_val_loss = best_val;
    result.model = std::move(best);
    return result;
}

TrainResult train(std::span<const Record> train_set, std::span<const Record> val_set,
                  const TrainConfig& cfg) {
    const Eigen::MatrixXd X = feature_matrix(train_set, cfg.n_D, cfg.n_L);
    const Eigen::MatrixXd Y = target_matrix(train_set, cfg.target, cfg.log_target);
    Eigen::MatrixXd Xval(0, X.cols()), Yval(0, Y.cols());
    if (!val_set.empty()) {
        Xval = feature_matrix(val_set, cfg.n_D, cfg.n_L);
        Yval = target_matrix(val_set, cfg.target, cfg.log_target);
    }
    return train_matrices(X, Y, Xval, Yval, cfg);
}

Eigen::VectorXd project_support(const Eigen::VectorXd& raw, int S) {
    if (S < 1 || S + 1 > raw.size())
        throw std::invalid_argument("project_support: S out of range");
    const double mass = raw.head(S + 1).sum();
    if (!(mass > 0))
        throw std::runtime_error("project_support: no probability mass on 0..S");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(raw.size());
    out.head(S + 1) = raw.head(S + 1) / mass;
    return out;
}

std::vector<PredictionBundle> predict(const ModelBundle& bundle, const Eigen::MatrixXd& X) {
    if (bundle.pmf.head != Head::kSoftmax || bundle.cycle.head != Head::kLinear ||
        bundle.fulfill.head != Head::kSigmoid)
        throw std::invalid_argument("predict: bundle heads are inconsistent");
    if (bundle.pmf.layer_sizes.back() != kPmfPad || bundle.cycle.layer_sizes.back() != 1 ||
        bundle.fulfill.layer_sizes.back() != 1)
        throw std::invalid_argument("predict: bundle output dims are inconsistent");
    const Eigen::MatrixXd P = forward(bundle.pmf, X);
    const Eigen::MatrixXd C = forward(bundle.cycle, X);
    const Eigen::MatrixXd F = forward(bundle.fulfill, X);
    std::vector<PredictionBundle> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        PredictionBundle& pb = out[static_cast<std::size_t>(i)];
        const int S = std::clamp(static_cast<int>(std::llround(X(i, 1))), 1, kPmfPad - 1);
        pb.P_hat = project_support(P.row(i).transpose(), S);
        const double ec = C(i, 0);
        pb.EC_hat = bundle.cycle.log_target ? std::exp(ec) : ec;
        const double fulfill = std::clamp(F(i, 0), 1e-7, 1.0 - 1e-7);
        pb.pi0_hat = 1.0 - fulfill;
    }
    return out;
}

std::string train_config_json(const TrainConfig& cfg) {
    std::string out = "{";
    out += "\"learning_rate\":" + fmt_double(cfg.learning_rate);
    out += ",\"batch_size\":" + std::to_string(cfg.batch_size);
    out += ",\"weight_decay\":" + fmt_double(cfg.weight_decay);
    out += ",\"max_epochs\":" + std::to_string(cfg.max_epochs);
    out += ",\"early_stop_window\":" + std::to_string(cfg.early_stop_window);
    out += ",\"early_stop_threshold\":" + fmt_double(cfg.early_stop_threshold);
    out += ",\"seed\":" + std::to_string(cfg.seed);
    out += ",\"target\":\"" + to_string(cfg.target) + "\"";
    out += ",\"hidden\":[";
    const std::vector<int> hidden = cfg.hidden.empty() ? default_hidden(cfg.target) : cfg.hidden;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(hidden[i]);
    }
    out += "],\"n_D\":" + std::to_string(cfg.n_D);
    out += ",\"n_L\":" + std::to_string(cfg.n_L);
    out += ",\"log_target\":" + std::string(cfg.log_target ? "true" : "false");
    out += ",\"adam_beta1\":" + fmt_double(cfg.adam_beta1);
    out += ",\"adam_beta2\":" + fmt_double(cfg.adam_beta2);
    out += ",\"adam_eps\":" + fmt_double(cfg.adam_eps);
    out += ",\"weight_decay_mode\":\"decoupled\"";
    out += ",\"init\":\"uniform_fan_in\"";
    out += "}";
    return out;
}

TrainConfig train_config_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig cfg;
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.early_stop_window = j.value("early_stop_window", cfg.early_stop_window);
    cfg.early_stop_threshold = j.value("early_stop_threshold", cfg.early_stop_threshold);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("target")) cfg.target = train_target_from_string(j.at("target").get<std::string>());
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<int>>();
    cfg.n_D = j.value("n_D", cfg.n_D);
    cfg.n_L = j.value("n_L", cfg.n_L);
    cfg.log_target = j.value("log_target", cfg.log_target);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    return cfg;
}

std::string checkpoint_json(const MlpModel& model, const TrainConfig& cfg) {
    std::string out = "{\"layer_sizes\":[";
    for (std::size_t i = 0; i < model.layer_sizes.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(model.layer_sizes[i]);
    }
    out += "],\"head\":\"" + to_string(model.head) + "\"";
    out += ",\"weights\":[";
    for (std::size_t l = 0; l < model.W.size(); ++l) {
        if (l) out += ',';
        out += '[';
        const Eigen::MatrixXd& W = model.W[l];
        bool first = true;
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) {
                if (!first) out += ',';
                first = false;
                append_json_double(out, W(r, c));
            }
        out += ']';
    }
    out += "],\"biases\":[";
    for (std::size_t l = 0; l < model.b.size(); ++l) {
        if (l) out += ',';
        out += '[';
        for (Eigen::Index c = 0; c < model.b[l].size(); ++c) {
            if (c) out += ',';
            append_json_double(out, model.b[l][c]);
        }
        out += ']';
    }
    out += "],\"train_config\":" + train_config_json(cfg);
    out += ",\"feature_layout\":{\"n_D\":" + std::to_string(model.n_D) +
           ",\"n_L\":" + std::to_string(model.n_L) + "}";
    out += ",\"metadata\":{\"epochs_run\":" + std::to_string(model.epochs_run);
    out += ",\"final_train_loss\":" + fmt_double(model.final_train_loss);
    out += ",\"final_val_loss\":" + fmt_double(model.final_val_loss);
    out += ",\"config_hash\":" + std::to_string(model.config_hash);
    out += ",\"log_target\":" + std::string(model.log_target ? "true" : "false");
    out += "}}";
    return out;
}

MlpModel checkpoint_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    MlpModel model;
    model.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    model.head = head_from_string(j.at("head").get<std::string>());
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() + 1 != model.layer_sizes.size() || biases.size() != weights.size())
        throw std::invalid_argument("checkpoint: layer count mismatch");
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        const int din = model.layer_sizes[l];
        const int dout = model.layer_sizes[l + 1];
        const auto flat = weights[l].get<std::vector<double>>();
        if (static_cast<int>(flat.size()) != din * dout)
            throw std::invalid_argument("checkpoint: weight size mismatch");
        Eigen::MatrixXd W(din, dout);
        for (int r = 0; r < din; ++r)
            for (int c = 0; c < dout; ++c) W(r, c) = flat[static_cast<std::size_t>(r) * dout + c];
        const auto bvec = biases[l].get<std::vector<double>>();
        if (static_cast<int>(bvec.size()) != dout)
            throw std::invalid_argument("checkpoint: bias size mismatch");
        Eigen::VectorXd b(dout);
        for (int c = 0; c < dout; ++c) b[c] = bvec[static_cast<std::size_t>(c)];
        model.W.push_back(std::move(W));
        model.b.push_back(std::move(b));
    }
    const auto& layout = j.at("feature_layout");
    model.n_D = layout.at("n_D").get<int>();
    model.n_L = layout.at("n_L").get<int>();
    if (j.contains("metadata")) {
        const auto& meta = j.at("metadata");
        model.epochs_run = meta.value("epochs_run", 0);
        model.final_train_loss = meta.value("final_train_loss", 0.0);
        model.final_val_loss = meta.value("final_val_loss", 0.0);
        model.config_hash = meta.value("config_hash", std::uint64_t{0});
        model.log_target = meta.value("log_target", false);
    }
    return model;
}

void save_checkpoint(const std::string& path, const MlpModel& model, const TrainConfig& cfg) {
    write_text_file(path, checkpoint_json(model, cfg) + "\n");
}

MlpModel load_checkpoint(const std::string& path) {
    return checkpoint_from_json(read_text_file(path));
}

ModelBundle load_bundle(const std::string& dir) {
    ModelBundle bundle{load_checkpoint(dir + "/pmf.json"), load_checkpoint(dir + "/cycle.json"),
                       load_checkpoint(dir + "/fulfill.json")};
    if (bundle.pmf.n_D != bundle.cycle.n_D || bundle.pmf.n_D != bundle.fulfill.n_D ||
        bundle.pmf.n_L != bundle.cycle.n_L || bundle.pmf.n_L != bundle.fulfill.n_L)
        throw std::invalid_argument("load_bundle: feature layouts differ across models");
    return bundle;
}

}  // namespace ssinv
