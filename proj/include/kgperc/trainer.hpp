#pragma once
// Pairwise BPR training of the full model.
//
//   L = mean_i -ln sigma(y(u_i, p_i) - y(u_i, n_i)) + reg * ||Theta||^2
//
// Every epoch shuffles the training interactions and walks them once in
// batches of B (the last batch may be short), drawing one unobserved news item
// per positive.

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "kgperc/model.hpp"

namespace kgperc {

enum class OptimizerKind { Sgd, Adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 1024;
    double learning_rate = 0.01;
    double reg_weight = 1e-5;
    std::uint64_t seed = 7;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    int threads = 1;
    // Compute validation Recall@20 every N epochs (0 = never).
    int validate_every = 0;
    // Return the parameters with the best validation score instead of the last.
    bool keep_best_validation = false;

    void validate() const;
};

struct BprTriple {
    std::uint32_t user = 0;
    std::uint32_t positive = 0;
    std::uint32_t negative = 0;

    bool operator==(const BprTriple&) const = default;
};

// Training positives, indexed by user: sorted news indices.
using UserItems = std::vector<std::vector<std::uint32_t>>;

// Uniform over news not in the user's training positives; resamples on
// collision and fails after 100 attempts.
std::uint32_t sample_negative(const UserItems& train, std::uint32_t user, std::size_t news_count,
                              std::mt19937_64& rng);

// B triples with positives drawn uniformly from all training interactions.
std::vector<BprTriple> sample_batch(const UserItems& train, std::size_t news_count,
                                    std::size_t batch_size, std::mt19937_64& rng);

// -ln sigma(x), stable for large |x|.
double neg_log_sigmoid(double x);

double bpr_loss(std::span<const double> scores_pos, std::span<const double> scores_neg,
                const ModelParams& params, double reg_weight);

struct LossAndGradient {
    double loss = 0.0;
    ModelParams gradient;
};

LossAndGradient compute_gradients(const KgupnModel& model, const ModelParams& params,
                                  std::span<const BprTriple> batch, double reg_weight,
                                  int threads = 1);

// Loss only; used by finite-difference checks and logging.
double batch_loss(const KgupnModel& model, const ModelParams& params,
                  std::span<const BprTriple> batch, double reg_weight, int threads = 1);

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate);
    void step(ModelParams& params, const ModelParams& gradient);

private:
    OptimizerKind kind_;
    double learning_rate_;
    long long t_ = 0;
    std::vector<Eigen::MatrixXd> m_, v_;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double seconds = 0.0;
    // NaN when not computed this epoch.
    double validation_recall20 = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> log;
};

using ValidationFn = std::function<double(const ModelParams&)>;

TrainResult train(const KgupnModel& model, ModelParams init, const UserItems& train_items,
                  const TrainConfig& config, const ValidationFn& validate = {});

}  // namespace kgperc
