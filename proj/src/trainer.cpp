#include "kgperc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kgperc/errors.hpp"

namespace kgperc {
namespace {

constexpr int kMaxNegativeAttempts = 100;

// sigma(-x) without overflow.
double sigmoid_neg(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

struct Pair {
    std::uint32_t user;
    std::uint32_t news;
};

std::vector<Pair> flatten(const UserItems& train) {
    std::vector<Pair> out;
    for (std::size_t u = 0; u < train.size(); ++u)
        for (const auto n : train[u]) out.push_back({static_cast<std::uint32_t>(u), n});
    return out;
}

double pair_score(const Eigen::MatrixXd& star, std::size_t a, std::size_t b) {
    return star.col(static_cast<Eigen::Index>(a)).dot(star.col(static_cast<Eigen::Index>(b)));
}

}  // namespace

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view text) {
    if (text == "sgd") return OptimizerKind::Sgd;
    if (text == "adam") return OptimizerKind::Adam;
    throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(reg_weight >= 0.0)) throw ConfigError("regularization weight must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (validate_every < 0) throw ConfigError("validate_every must be >= 0");
}

std::uint32_t sample_negative(const UserItems& train, std::uint32_t user, std::size_t news_count,
                              std::mt19937_64& rng) {
    if (news_count == 0) throw ValidationError("no news items to sample negatives from");
    const auto& positives = train.at(user);
    std::uniform_int_distribution<std::uint32_t> pick(0,
                                                      static_cast<std::uint32_t>(news_count - 1));
    for (int attempt = 0; attempt < kMaxNegativeAttempts; ++attempt) {
        const auto candidate = pick(rng);
        if (!std::binary_search(positives.begin(), positives.end(), candidate)) return candidate;
    }
    throw ValidationError(
        fmt::format("user {} has no valid negative after {} attempts", user, kMaxNegativeAttempts));
}

std::vector<BprTriple> sample_batch(const UserItems& train, std::size_t news_count,
                                    std::size_t batch_size, std::mt19937_64& rng) {
    const auto pool = flatten(train);
    if (pool.empty()) throw ValidationError("sample_batch: no training interactions");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<BprTriple> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const auto& p = pool[pick(rng)];
        out.push_back({p.user, p.news, sample_negative(train, p.user, news_count, rng)});
    }
    return out;
}

double neg_log_sigmoid(double x) {
    if (x >= 0.0) return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

double bpr_loss(std::span<const double> scores_pos, std::span<const double> scores_neg,
                const ModelParams& params, double reg_weight) {
    if (scores_pos.size() != scores_neg.size())
        throw ValidationError("bpr_loss: score vectors differ in length");
    if (scores_pos.empty()) throw ValidationError("bpr_loss: empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < scores_pos.size(); ++i) {
        if (!std::isfinite(scores_pos[i]) || !std::isfinite(scores_neg[i]))
            throw NumericError(fmt::format("non-finite score at batch position {}", i));
        sum += neg_log_sigmoid(scores_pos[i] - scores_neg[i]);
    }
    const double reg = reg_weight == 0.0 ? 0.0 : reg_weight * params.squared_norm();
    return sum / static_cast<double>(scores_pos.size()) + reg;
}

double batch_loss(const KgupnModel& model, const ModelParams& params,
                  std::span<const BprTriple> batch, double reg_weight, int threads) {
    const auto star = model.representations(params, threads);
    std::vector<double> pos(batch.size()), neg(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto u = model.user_column(batch[i].user);
        pos[i] = pair_score(star, u, model.news_column(batch[i].positive));
        neg[i] = pair_score(star, u, model.news_column(batch[i].negative));
    }
    return bpr_loss(pos, neg, params, reg_weight);
}

LossAndGradient compute_gradients(const KgupnModel& model, const ModelParams& params,
                                  std::span<const BprTriple> batch, double reg_weight,
                                  int threads) {
    const auto fwd = model.forward(params, true, threads);
    const auto& star = fwd.star;

    std::vector<double> pos(batch.size()), neg(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto u = model.user_column(batch[i].user);
        pos[i] = pair_score(star, u, model.news_column(batch[i].positive));
        neg[i] = pair_score(star, u, model.news_column(batch[i].negative));
    }

    LossAndGradient out{bpr_loss(pos, neg, params, reg_weight),
                        ModelParams::zeros(model.config(), model.node_count(),
                                           model.category_count())};

    // dL/dx_i = -sigma(-x_i) / B with x_i = y_pos - y_neg.
    Eigen::MatrixXd grad_star = Eigen::MatrixXd::Zero(star.rows(), star.cols());
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double g = -sigmoid_neg(pos[i] - neg[i]) * inv_b;
        const auto u = static_cast<Eigen::Index>(model.user_column(batch[i].user));
        const auto p = static_cast<Eigen::Index>(model.news_column(batch[i].positive));
        const auto n = static_cast<Eigen::Index>(model.news_column(batch[i].negative));
        grad_star.col(u) += g * (star.col(p) - star.col(n));
        grad_star.col(p) += g * star.col(u);
        grad_star.col(n) -= g * star.col(u);
    }

    model.backward(params, fwd, grad_star, out.gradient, threads);

    if (reg_weight != 0.0) {
        auto grads = out.gradient.blocks();
        const auto values = params.blocks();
        for (std::size_t b = 0; b < grads.size(); ++b) *grads[b] += 2.0 * reg_weight * *values[b];
    }
    return out;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), learning_rate_(learning_rate) {}

void Optimizer::step(ModelParams& params, const ModelParams& gradient) {
    auto values = params.blocks();
    const auto grads = gradient.blocks();
    if (kind_ == OptimizerKind::Sgd) {
        for (std::size_t b = 0; b < values.size(); ++b) *values[b] -= learning_rate_ * *grads[b];
        return;
    }

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (m_.empty()) {
        for (const auto* g : grads) {
            m_.push_back(Eigen::MatrixXd::Zero(g->rows(), g->cols()));
            v_.push_back(Eigen::MatrixXd::Zero(g->rows(), g->cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t b = 0; b < values.size(); ++b) {
        m_[b] = beta1 * m_[b] + (1.0 - beta1) * *grads[b];
        v_[b] = beta2 * v_[b] + (1.0 - beta2) * grads[b]->cwiseAbs2();
        *values[b] -= (learning_rate_ * (m_[b] / c1).array() /
                       ((v_[b] / c2).array().sqrt() + eps))
                          .matrix();
    }
}

TrainResult train(const KgupnModel& model, ModelParams init, const UserItems& train_items,
                  const TrainConfig& config, const ValidationFn& validate) {
    config.validate();
    model.check_params(init);
    TrainResult result{std::move(init), {}};
    if (config.epochs == 0) return result;

    auto positives = flatten(train_items);
    if (positives.empty()) throw ValidationError("train: no training interactions");

    std::mt19937_64 rng(config.seed);
    Optimizer optimizer(config.optimizer, config.learning_rate);
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    std::vector<BprTriple> batch;
    batch.reserve(batch_size);

    double best_validation = -1.0;
    ModelParams best_params;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::shuffle(positives.begin(), positives.end(), rng);
        double weighted_loss = 0.0;
        for (std::size_t start = 0; start < positives.size(); start += batch_size) {
            const auto stop = std::min(positives.size(), start + batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                const auto& p = positives[i];
                batch.push_back(
                    {p.user, p.news, sample_negative(train_items, p.user, model.news_count(), rng)});
            }
            LossAndGradient step;
            try {
                step = compute_gradients(model, result.params, batch, config.reg_weight,
                                         config.threads);
            } catch (const NumericError& e) {
                throw NumericError(fmt::format("training diverged at epoch {}: {}", epoch, e.what()));
            }
            if (!std::isfinite(step.loss))
                throw NumericError(fmt::format("training diverged at epoch {}", epoch));
            weighted_loss += step.loss * static_cast<double>(batch.size());
            optimizer.step(result.params, step.gradient);
            if (!result.params.all_finite())
                throw NumericError(fmt::format("non-finite parameters after an update in epoch {}",
                                               epoch));
        }

        EpochRecord record;
        record.epoch = epoch;
        record.loss = weighted_loss / static_cast<double>(positives.size());
        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (validate && config.validate_every > 0 && epoch % config.validate_every == 0) {
            record.validation_recall20 = validate(result.params);
            if (config.keep_best_validation && record.validation_recall20 > best_validation) {
                best_validation = record.validation_recall20;
                best_params = result.params;
            }
        }
        spdlog::debug("epoch {:>4}  loss {:.6f}  {:.3f}s", epoch, record.loss, record.seconds);
        result.log.push_back(record);
    }

    if (config.keep_best_validation && best_validation >= 0.0)
        result.params = std::move(best_params);
    return result;
}

}  // namespace kgperc
