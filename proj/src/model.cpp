#include "kgperc/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kgperc/errors.hpp"
#include "kgperc/transe.hpp"

namespace kgperc {

void ModelConfig::validate() const {
    if (dimension < 1) throw ConfigError("embedding dimension must be >= 1");
    if (hops < 1) throw ConfigError("hop count K must be >= 1");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
        throw ConfigError("LeakyReLU slope must lie in (0, 1)");
}

ModelParams ModelParams::zeros(const ModelConfig& config, std::size_t node_count,
                               std::size_t category_count) {
    config.validate();
    const auto d = config.dimension;
    ModelParams p;
    p.base = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(node_count));
    p.layers.assign(static_cast<std::size_t>(config.propagated_layers()),
                    LayerParams{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)});
    p.context = ContextTables::zeros(config.representation_dim(), category_count);
    return p;
}

std::vector<Eigen::MatrixXd*> ModelParams::blocks() {
    std::vector<Eigen::MatrixXd*> out{&base};
    for (auto& l : layers) {
        out.push_back(&l.m1);
        out.push_back(&l.m2);
    }
    out.push_back(&context.position);
    out.push_back(&context.frequency);
    out.push_back(&context.category);
    return out;
}

std::vector<const Eigen::MatrixXd*> ModelParams::blocks() const {
    std::vector<const Eigen::MatrixXd*> out{&base};
    for (const auto& l : layers) {
        out.push_back(&l.m1);
        out.push_back(&l.m2);
    }
    out.push_back(&context.position);
    out.push_back(&context.frequency);
    out.push_back(&context.category);
    return out;
}

std::vector<std::string> ModelParams::block_names(std::size_t layer_count) {
    std::vector<std::string> out{"base"};
    for (std::size_t k = 1; k <= layer_count; ++k) {
        out.push_back(fmt::format("m1_{}", k));
        out.push_back(fmt::format("m2_{}", k));
    }
    out.insert(out.end(), {"v1", "v2", "v3"});
    return out;
}

double ModelParams::squared_norm() const {
    double total = 0.0;
    for (const auto* b : blocks()) total += b->squaredNorm();
    return total;
}

bool ModelParams::all_finite() const {
    for (const auto* b : blocks())
        if (!b->allFinite()) return false;
    return true;
}

bool ModelParams::operator==(const ModelParams& other) const {
    const auto mine = blocks();
    const auto theirs = other.blocks();
    if (mine.size() != theirs.size()) return false;
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i]->rows() != theirs[i]->rows() || mine[i]->cols() != theirs[i]->cols())
            return false;
        if (*mine[i] != *theirs[i]) return false;
    }
    return true;
}

ModelParams init_params(const ModelConfig& config, std::size_t node_count,
                        std::size_t category_count, const TransEState* transe,
                        std::mt19937_64& rng) {
    auto p = ModelParams::zeros(config, node_count, category_count);
    const auto d = config.dimension;

    if (transe) {
        if (transe->dimension != d ||
            transe->entity_vectors.cols() != static_cast<Eigen::Index>(node_count))
            throw ConfigError(fmt::format(
                "TransE vectors ({} x {}) do not match model base embeddings ({} x {})",
                transe->entity_vectors.rows(), transe->entity_vectors.cols(), d, node_count));
        p.base = transe->entity_vectors;
    } else {
        std::normal_distribution<double> normal(0.0, 0.1);
        for (Eigen::Index j = 0; j < p.base.cols(); ++j)
            for (Eigen::Index i = 0; i < p.base.rows(); ++i) p.base(i, j) = normal(rng);
    }

    const double bound = std::sqrt(6.0 / (2.0 * d));
    std::uniform_real_distribution<double> xavier(-bound, bound);
    for (auto& layer : p.layers) {
        for (auto* m : {&layer.m1, &layer.m2})
            for (Eigen::Index j = 0; j < m->cols(); ++j)
                for (Eigen::Index i = 0; i < m->rows(); ++i) (*m)(i, j) = xavier(rng);
    }

    std::normal_distribution<double> small(0.0, 0.01);
    for (auto* table : {&p.context.position, &p.context.frequency, &p.context.category})
        for (Eigen::Index j = 0; j < table->cols(); ++j)
            for (Eigen::Index i = 0; i < table->rows(); ++i) (*table)(i, j) = small(rng);
    return p;
}

KgupnModel::KgupnModel(const KnowledgeGraph& graph, NodeContexts contexts, ModelConfig config,
                       std::size_t category_count)
    : contexts_(std::move(contexts)),
      config_(config),
      users_(graph.node_count(NodeKind::User)),
      news_(graph.node_count(NodeKind::News)),
      categories_(category_count) {
    if (!graph.frozen()) throw ValidationError("the model requires a frozen graph");
    config_.validate();
    if (contexts_.size() != graph.total_nodes())
        throw ValidationError("node contexts do not cover the graph");
    if (categories_ == 0) throw ConfigError("category count must include the unknown slot");
    for (const auto& ctx : contexts_)
        if (ctx && (ctx->category < 0 || static_cast<std::size_t>(ctx->category) >= categories_))
            throw ValidationError(fmt::format("context category {} exceeds category count {}",
                                              ctx->category, categories_));
    adjacency_ = NormalizedAdjacency(graph);
}

void KgupnModel::check_params(const ModelParams& params) const {
    const auto d = config_.dimension;
    const auto n = static_cast<Eigen::Index>(node_count());
    if (params.base.rows() != d || params.base.cols() != n)
        throw ValidationError(fmt::format("base embeddings are {} x {}, expected {} x {}",
                                          params.base.rows(), params.base.cols(), d, n));
    if (params.layers.size() != static_cast<std::size_t>(config_.propagated_layers()))
        throw ValidationError(fmt::format("expected {} layers, got {}",
                                          config_.propagated_layers(), params.layers.size()));
    for (const auto& l : params.layers)
        if (l.m1.rows() != d || l.m1.cols() != d || l.m2.rows() != d || l.m2.cols() != d)
            throw ValidationError("layer matrices must be d x d");
    const auto dim = config_.representation_dim();
    if (params.context.position.rows() != dim || params.context.frequency.rows() != dim ||
        params.context.category.rows() != dim ||
        params.context.position.cols() != kPositionClasses ||
        params.context.frequency.cols() != kMaxFrequency ||
        params.context.category.cols() != static_cast<Eigen::Index>(categories_))
        throw ValidationError("context tables have the wrong shape");
}

KgupnModel::Forward KgupnModel::forward(const ModelParams& params, bool keep_caches,
                                        int threads) const {
    check_params(params);
    Forward out;
    const Eigen::MatrixXd* propagated = &params.base;
    if (config_.use_propagation) {
        out.propagation = propagate(adjacency_, params.base, params.layers,
                                    config_.leaky_slope, keep_caches, threads);
        for (std::size_t k = 1; k < out.propagation.layers.size(); ++k)
            if (!out.propagation.layers[k].allFinite())
                throw NumericError(fmt::format("non-finite activations at layer {}", k));
        propagated = &out.propagation.concatenated;
    }
    out.star = config_.use_context ? apply_context_all(*propagated, contexts_, params.context)
                                   : *propagated;
    return out;
}

Eigen::MatrixXd KgupnModel::representations(const ModelParams& params, int threads) const {
    return forward(params, false, threads).star;
}

void KgupnModel::backward(const ModelParams& params, const Forward& fwd,
                          const Eigen::MatrixXd& grad_star, ModelParams& grad,
                          int threads) const {
    if (config_.use_context) {
        for (std::size_t v = 0; v < contexts_.size(); ++v) {
            const auto& ctx = contexts_[v];
            if (!ctx) continue;
            const auto g = grad_star.col(static_cast<Eigen::Index>(v));
            grad.context.position.col(ctx->position - 1) += g;
            grad.context.frequency.col(ctx->frequency - 1) += g;
            grad.context.category.col(ctx->category) += g;
        }
    }

    if (!config_.use_propagation) {
        grad.base += grad_star;
        return;
    }

    const auto d = config_.dimension;
    const auto layers = static_cast<Eigen::Index>(params.layers.size());
    if (fwd.propagation.caches.size() != params.layers.size())
        throw ValidationError("backward requires a forward pass with cached activations");

    Eigen::MatrixXd upstream = grad_star.middleRows(layers * d, d);
    for (Eigen::Index k = layers; k >= 1; --k) {
        const auto idx = static_cast<std::size_t>(k - 1);
        upstream = backward_layer(fwd.propagation.caches[idx], adjacency_, params.layers[idx],
                                  config_.leaky_slope, upstream, grad.layers[idx], threads);
        upstream += grad_star.middleRows((k - 1) * d, d);
        if (!upstream.allFinite())
            throw NumericError(fmt::format("non-finite gradient entering layer {}", k - 1));
    }
    grad.base += upstream;
}

}  // namespace kgperc
