#include "ssmrecon/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ssmrecon/binary_io.hpp"
#include "ssmrecon/error.hpp"

namespace ssmrecon {

namespace {
constexpr int kWeightsFormatVersion = 1;
}

void MlpParams::validate() const {
    const auto h = w1.rows();
    const auto k = w2.rows();
    if (h < 1 || w1.cols() < 1 || k < 1 || b1.size() != h || w2.cols() != h || b2.size() != k) {
        throw DataError("MLP parameter shapes are inconsistent");
    }
    if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
        throw NumericalError("MLP parameters contain non-finite values");
    }
}

MlpParams MlpParams::zeros(int input, int hidden, int output) {
    return MlpParams{Eigen::MatrixXd::Zero(hidden, input), Eigen::VectorXd::Zero(hidden),
                     Eigen::MatrixXd::Zero(output, hidden), Eigen::VectorXd::Zero(output)};
}

MlpParams MlpParams::glorot(int input, int hidden, int output, std::uint64_t seed) {
    MlpParams p = zeros(input, hidden, output);
    std::mt19937_64 rng(seed);
    const double a1 = std::sqrt(6.0 / (input + hidden));
    const double a2 = std::sqrt(6.0 / (hidden + output));
    std::uniform_real_distribution<double> u1(-a1, a1);
    std::uniform_real_distribution<double> u2(-a2, a2);
    for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = u1(rng);
    for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = u2(rng);
    return p;
}

bool MlpParams::operator==(const MlpParams& o) const {
    auto same = [](const auto& a, const auto& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return same(w1, o.w1) && same(b1, o.b1) && same(w2, o.w2) && same(b2, o.b2);
}

SparseInput encode_input(const MaskStack& stack) {
    SparseInput in;
    in.size = static_cast<int>(stack.input_size());
    int base = 0;
    for (const Mask& m : stack.masks) {
        const auto& bits = m.bits();
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i]) in.active.push_back(base + static_cast<int>(i));
        }
        base += static_cast<int>(bits.size());
    }
    return in;
}

Eigen::VectorXd dense_input(const SparseInput& input) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(input.size);
    for (int j : input.active) x(j) = 1.0;
    return x;
}

namespace {

void check_input(const MlpParams& params, const SparseInput& input) {
    if (input.size != params.input_size()) {
        throw DataError("network expects " + std::to_string(params.input_size()) +
                        " inputs, mask stack provides " + std::to_string(input.size));
    }
}

Eigen::VectorXd hidden_pre(const MlpParams& p, const SparseInput& input) {
    Eigen::VectorXd h = p.b1;
    for (int j : input.active) h += p.w1.col(j);
    return h;
}

void check_batch(const MlpParams& params, std::span<const Sample> batch) {
    if (batch.empty()) throw DataError("empty batch");
    for (const Sample& s : batch) {
        check_input(params, s.input);
        if (s.target.size() != params.output_size()) {
            throw DataError("target length " + std::to_string(s.target.size()) +
                            " does not match network output " + std::to_string(params.output_size()));
        }
    }
}

}  // namespace

ShapeParams forward(const MlpParams& params, const SparseInput& input) {
    check_input(params, input);
    const Eigen::VectorXd act = hidden_pre(params, input).cwiseMax(0.0);
    return params.w2 * act + params.b2;
}

ShapeParams forward(const MlpParams& params, const MaskStack& stack) {
    return forward(params, encode_input(stack));
}

double loss(const MlpParams& params, std::span<const Sample> batch) {
    check_batch(params, batch);
    double sum = 0.0;
    for (const Sample& s : batch) sum += (forward(params, s.input) - s.target).squaredNorm();
    return sum / (static_cast<double>(batch.size()) * params.output_size());
}

MlpParams gradient(const MlpParams& params, std::span<const Sample> batch) {
    check_batch(params, batch);
    MlpParams g = MlpParams::zeros(params.input_size(), params.hidden_size(), params.output_size());
    const double scale = 2.0 / (static_cast<double>(batch.size()) * params.output_size());
    for (const Sample& s : batch) {
        const Eigen::VectorXd pre = hidden_pre(params, s.input);
        const Eigen::VectorXd act = pre.cwiseMax(0.0);
        const Eigen::VectorXd dout = scale * (params.w2 * act + params.b2 - s.target);
        g.w2.noalias() += dout * act.transpose();
        g.b2 += dout;
        const Eigen::VectorXd dpre =
            (params.w2.transpose() * dout).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
        g.b1 += dpre;
        for (int j : s.input.active) g.w1.col(j) += dpre;
    }
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in [0, 1)");
    }
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (hidden < 1) throw ConfigError("hidden width must be >= 1");
}

void split_validation(int n, double fraction, std::uint64_t seed, std::vector<int>& train,
                      std::vector<int>& val) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    std::shuffle(order.begin(), order.end(), rng);
    int n_val = static_cast<int>(std::floor(n * fraction + 1e-12));
    n_val = std::clamp(n_val, 0, n - 1);
    val.assign(order.begin(), order.begin() + n_val);
    train.assign(order.begin() + n_val, order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
}

namespace {

// Training state over the W1 columns that some training input activates;
// every other column has a zero gradient throughout and keeps its initial
// value, so Adam leaves it untouched.
struct CompactNet {
    Eigen::MatrixXd w1;  // H x |U|
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

struct CompactSample {
    std::vector<int> columns;   // compact indices
    Eigen::VectorXd frozen;     // contribution of columns outside U (constant)
    const Eigen::VectorXd* target = nullptr;
};

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
};

template <typename Derived>
void adam_update(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<Derived>& grad,
                 Eigen::MatrixBase<Derived>& m, Eigen::MatrixBase<Derived>& v, double lr_t,
                 const Adam& adam) {
    m = adam.beta1 * m + (1.0 - adam.beta1) * grad;
    v = adam.beta2 * v + (1.0 - adam.beta2) * grad.cwiseAbs2();
    param.array() -= lr_t * m.array() / (v.array().sqrt() + adam.eps);
}

template <typename Derived>
void sgd_update(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<Derived>& grad,
                Eigen::MatrixBase<Derived>& velocity, double lr, double momentum) {
    velocity = momentum * velocity + grad;
    param -= lr * velocity;
}

}  // namespace

TrainResult train(std::span<const Sample> dataset, const TrainConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(dataset.size());
    if (n < 2) throw DataError("training needs at least 2 samples");
    const int d = dataset.front().input.size;
    const auto k = static_cast<int>(dataset.front().target.size());
    for (const Sample& s : dataset) {
        if (s.input.size != d || s.target.size() != k) throw DataError("training samples differ in shape");
        if (!s.target.allFinite()) throw DataError("training target contains non-finite values");
    }
    const int h = cfg.hidden;

    TrainResult result;
    split_validation(n, cfg.validation_fraction, cfg.seed, result.train_indices, result.val_indices);

    MlpParams init = MlpParams::glorot(d, h, k, cfg.seed);

    std::vector<int> compact_of(static_cast<std::size_t>(d), -1);
    std::vector<int> columns;
    for (int i : result.train_indices) {
        for (int j : dataset[i].input.active) compact_of[j] = 1;
    }
    for (int j = 0; j < d; ++j) {
        if (compact_of[j] > 0) {
            compact_of[j] = static_cast<int>(columns.size());
            columns.push_back(j);
        } else {
            compact_of[j] = -1;
        }
    }
    const auto u = static_cast<Eigen::Index>(columns.size());

    CompactNet net{Eigen::MatrixXd(h, u), init.b1, init.w2, init.b2};
    for (Eigen::Index c = 0; c < u; ++c) net.w1.col(c) = init.w1.col(columns[c]);

    auto compact = [&](int i) {
        CompactSample cs;
        cs.frozen = Eigen::VectorXd::Zero(h);
        for (int j : dataset[i].input.active) {
            if (compact_of[j] >= 0) cs.columns.push_back(compact_of[j]);
            else cs.frozen += init.w1.col(j);
        }
        cs.target = &dataset[i].target;
        return cs;
    };
    std::vector<CompactSample> train_set, val_set;
    for (int i : result.train_indices) train_set.push_back(compact(i));
    for (int i : result.val_indices) val_set.push_back(compact(i));

    auto pre_of = [&](const CompactSample& s) {
        Eigen::VectorXd pre = net.b1 + s.frozen;
        for (int c : s.columns) pre += net.w1.col(c);
        return pre;
    };
    auto mean_loss = [&](const std::vector<CompactSample>& set) {
        double sum = 0.0;
        for (const CompactSample& s : set) {
            const Eigen::VectorXd out = net.w2 * pre_of(s).cwiseMax(0.0) + net.b2;
            sum += (out - *s.target).squaredNorm();
        }
        return sum / (static_cast<double>(set.size()) * k);
    };

    CompactNet grad{Eigen::MatrixXd::Zero(h, u), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(k, h),
                    Eigen::VectorXd::Zero(k)};
    CompactNet m1 = grad, m2 = grad;
    Adam adam;

    const bool has_val = !val_set.empty();
    CompactNet best = net;
    double best_score = std::numeric_limits<double>::infinity();

    auto record = [&](int epoch) {
        EpochLog entry{epoch, mean_loss(train_set), std::numeric_limits<double>::quiet_NaN()};
        if (has_val) entry.val_loss = mean_loss(val_set);
        if (!std::isfinite(entry.train_loss) || (has_val && !std::isfinite(entry.val_loss))) {
            throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        }
        result.log.push_back(entry);
        const double score = has_val ? entry.val_loss : entry.train_loss;
        if (score < best_score) {
            best_score = score;
            best = net;
            result.best_epoch = epoch;
        }
    };
    record(0);

    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const double scale = 2.0 / (static_cast<double>(stop - start) * k);
            grad.w1.setZero();
            grad.b1.setZero();
            grad.w2.setZero();
            grad.b2.setZero();
            for (std::size_t b = start; b < stop; ++b) {
                const CompactSample& s = train_set[order[b]];
                const Eigen::VectorXd pre = pre_of(s);
                const Eigen::VectorXd act = pre.cwiseMax(0.0);
                const Eigen::VectorXd dout = scale * (net.w2 * act + net.b2 - *s.target);
                grad.w2.noalias() += dout * act.transpose();
                grad.b2 += dout;
                const Eigen::VectorXd dpre =
                    (net.w2.transpose() * dout).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
                grad.b1 += dpre;
                for (int c : s.columns) grad.w1.col(c) += dpre;
            }
            if (cfg.optimizer == Optimizer::adam) {
                ++adam.step;
                const double lr_t = cfg.learning_rate * std::sqrt(1.0 - std::pow(adam.beta2, adam.step)) /
                                    (1.0 - std::pow(adam.beta1, adam.step));
                adam_update(net.w1, grad.w1, m1.w1, m2.w1, lr_t, adam);
                adam_update(net.b1, grad.b1, m1.b1, m2.b1, lr_t, adam);
                adam_update(net.w2, grad.w2, m1.w2, m2.w2, lr_t, adam);
                adam_update(net.b2, grad.b2, m1.b2, m2.b2, lr_t, adam);
            } else {
                sgd_update(net.w1, grad.w1, m1.w1, cfg.learning_rate, cfg.momentum);
                sgd_update(net.b1, grad.b1, m1.b1, cfg.learning_rate, cfg.momentum);
                sgd_update(net.w2, grad.w2, m1.w2, cfg.learning_rate, cfg.momentum);
                sgd_update(net.b2, grad.b2, m1.b2, cfg.learning_rate, cfg.momentum);
            }
        }
        record(epoch);
        if (epoch - result.best_epoch >= cfg.patience) break;
    }

    result.params = std::move(init);
    for (Eigen::Index c = 0; c < u; ++c) result.params.w1.col(columns[c]) = best.w1.col(c);
    result.params.b1 = best.b1;
    result.params.w2 = best.w2;
    result.params.b2 = best.b2;
    return result;
}

void save_weights(const MlpParams& params, const std::filesystem::path& path) {
    params.validate();
    const ModelPaths paths = model_paths(path, "mlp");
    const Eigen::Index d = params.input_size();
    const Eigen::Index h = params.hidden_size();
    const Eigen::Index k = params.output_size();

    std::vector<double> payload;
    payload.reserve(static_cast<std::size_t>(h * d + h + k * h + k));
    for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) payload.push_back(params.w1(r, c));
    }
    payload.insert(payload.end(), params.b1.data(), params.b1.data() + h);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < h; ++c) payload.push_back(params.w2(r, c));
    }
    payload.insert(payload.end(), params.b2.data(), params.b2.data() + k);

    nlohmann::json doc;
    doc["format_version"] = kWeightsFormatVersion;
    doc["D"] = d;
    doc["H"] = h;
    doc["K"] = k;
    doc["activation"] = "relu";
    doc["payload"] = {{"file", paths.payload.filename().string()},
                      {"encoding", "float64-le"},
                      {"layout", "row-major"},
                      {"order", {"W1", "b1", "W2", "b2"}}};
    write_float64_le(paths.payload, payload);
    write_json(paths.manifest, doc);
}

MlpParams load_weights(const std::filesystem::path& path) {
    const ModelPaths paths = model_paths(path, "mlp");
    const nlohmann::json doc = read_json(paths.manifest);
    try {
        if (doc.at("format_version").get<int>() != kWeightsFormatVersion) {
            throw DataError(paths.manifest.string() + ": unsupported format_version");
        }
        const auto d = doc.at("D").get<Eigen::Index>();
        const auto h = doc.at("H").get<Eigen::Index>();
        const auto k = doc.at("K").get<Eigen::Index>();
        if (d < 1 || h < 1 || k < 1) throw DataError(paths.manifest.string() + ": inconsistent dimensions");
        const auto payload_path = paths.manifest.parent_path() / doc.at("payload").at("file").get<std::string>();
        const std::vector<double> v =
            read_float64_le(payload_path, static_cast<std::size_t>(h * d + h + k * h + k));
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        MlpParams p;
        const double* at = v.data();
        p.w1 = Eigen::Map<const RowMajor>(at, h, d);
        at += h * d;
        p.b1 = Eigen::Map<const Eigen::VectorXd>(at, h);
        at += h;
        p.w2 = Eigen::Map<const RowMajor>(at, k, h);
        at += k * h;
        p.b2 = Eigen::Map<const Eigen::VectorXd>(at, k);
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(paths.manifest.string() + ": " + e.what());
    }
}

}  // namespace ssmrecon
