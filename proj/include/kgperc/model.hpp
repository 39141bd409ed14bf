#pragma once
// Full scoring model: propagation, context encodings and inner-product scores,
// together with its parameter set and hand-derived backward pass.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgperc/context.hpp"
#include "kgperc/graph_store.hpp"
#include "kgperc/propagation.hpp"

namespace kgperc {

struct TransEState;

struct ModelConfig {
    int dimension = 64;
    int hops = 3;
    double leaky_slope = kDefaultLeakySlope;
    // Ablation switches. Without propagation e^{p*} = e^(0); without context
    // e* = e^{p*}.
    bool use_propagation = true;
    bool use_context = true;

    int propagated_layers() const { return use_propagation ? hops : 0; }
    Eigen::Index representation_dim() const {
        return static_cast<Eigen::Index>(propagated_layers() + 1) * dimension;
    }
    void validate() const;
};

struct ModelParams {
    Eigen::MatrixXd base;             // d x N
    std::vector<LayerParams> layers;  // one per propagated layer
    ContextTables context;

    static ModelParams zeros(const ModelConfig& config, std::size_t node_count,
                             std::size_t category_count);

    // Blocks in canonical order: base, m1_1, m2_1, ..., m1_K, m2_K, v1, v2, v3.
    std::vector<Eigen::MatrixXd*> blocks();
    std::vector<const Eigen::MatrixXd*> blocks() const;
    static std::vector<std::string> block_names(std::size_t layer_count);

    double squared_norm() const;
    bool all_finite() const;
    bool operator==(const ModelParams& other) const;
};

// Base embeddings come from TransE when given (dimensions must agree), else
// N(0, 0.1^2). Layer matrices use Xavier-uniform draws; context tables
// N(0, 0.01^2).
ModelParams init_params(const ModelConfig& config, std::size_t node_count,
                        std::size_t category_count, const TransEState* transe,
                        std::mt19937_64& rng);

// Immutable model structure: the graph topology, node contexts and shape
// configuration. Parameters are passed separately.
class KgupnModel {
public:
    KgupnModel(const KnowledgeGraph& graph, NodeContexts contexts, ModelConfig config,
               std::size_t category_count);

    const ModelConfig& config() const { return config_; }
    const NormalizedAdjacency& adjacency() const { return adjacency_; }
    const NodeContexts& contexts() const { return contexts_; }
    std::size_t node_count() const { return adjacency_.node_count(); }
    std::size_t user_count() const { return users_; }
    std::size_t news_count() const { return news_; }
    std::size_t category_count() const { return categories_; }
    std::size_t user_column(std::uint32_t user) const { return user; }
    std::size_t news_column(std::uint32_t news) const { return users_ + news; }

    void check_params(const ModelParams& params) const;

    struct Forward {
        Propagation propagation;  // empty when propagation is disabled
        Eigen::MatrixXd star;     // e* for every node, D x N
    };

    Forward forward(const ModelParams& params, bool keep_caches, int threads = 1) const;

    // e* for all nodes.
    Eigen::MatrixXd representations(const ModelParams& params, int threads = 1) const;

    // Backpropagates dL/de* (D x N) into parameter gradients (added to `grad`).
    void backward(const ModelParams& params, const Forward& forward,
                  const Eigen::MatrixXd& grad_star, ModelParams& grad, int threads = 1) const;

private:
    NormalizedAdjacency adjacency_;
    NodeContexts contexts_;
    ModelConfig config_;
    std::size_t users_ = 0;
    std::size_t news_ = 0;
    std::size_t categories_ = 1;
};

}  // namespace kgperc
