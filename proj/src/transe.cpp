#include "kgperc/transe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "kgperc/errors.hpp"

namespace kgperc {
namespace {

constexpr int kMaxCorruptionAttempts = 100;

Eigen::Map<const Eigen::VectorXd> column(const Eigen::MatrixXd& m, std::size_t j) {
    return {m.col(static_cast<Eigen::Index>(j)).data(), m.rows()};
}

Eigen::VectorXd translation(const TransEState& state, const KnowledgeGraph& graph,
                            const Triple& t) {
    return column(state.entity_vectors, graph.flat_index(t.head)) +
           column(state.relation_vectors, t.relation.index) -
           column(state.entity_vectors, graph.flat_index(t.tail));
}

void check_state(const TransEState& state, const KnowledgeGraph& graph) {
    if (state.entity_vectors.cols() != static_cast<Eigen::Index>(graph.total_nodes()) ||
        state.relation_vectors.cols() != static_cast<Eigen::Index>(graph.relation_count()))
        throw ValidationError("TransE state does not match the graph");
}

}  // namespace

double transe_score(std::span<const double> head, std::span<const double> relation,
                    std::span<const double> tail) {
    if (head.size() != relation.size() || head.size() != tail.size())
        throw ValidationError(fmt::format("transe_score dimension mismatch ({}, {}, {})",
                                          head.size(), relation.size(), tail.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < head.size(); ++i) {
        const double diff = head[i] + relation[i] - tail[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

double transe_score(const TransEState& state, const KnowledgeGraph& graph,
                    const Triple& triple) {
    return translation(state, graph, triple).norm();
}

Triple corrupt_triple(const Triple& triple, const KnowledgeGraph& graph, std::mt19937_64& rng) {
    if (!graph.frozen()) throw ValidationError("corrupt_triple requires a frozen graph");
    std::bernoulli_distribution coin(0.5);
    const bool replace_head = coin(rng);
    const auto kind = replace_head ? triple.head.kind : triple.tail.kind;
    const auto pool = graph.node_count(kind);
    if (pool < 2)
        throw ValidationError(
            fmt::format("cannot corrupt: fewer than 2 {} nodes", to_string(kind)));

    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(pool - 1));
    Triple out = triple;
    for (int attempt = 0; attempt < kMaxCorruptionAttempts; ++attempt) {
        const NodeId candidate{pick(rng), kind};
        (replace_head ? out.head : out.tail) = candidate;
        if (!graph.contains(out.head, out.relation, out.tail)) break;
    }
    return out;
}

TransEState init_transe(const KnowledgeGraph& graph, int dimension, double margin,
                        std::mt19937_64& rng) {
    if (dimension < 1) throw ConfigError("TransE dimension must be >= 1");
    if (!(margin > 0.0)) throw ConfigError("TransE margin must be positive");
    TransEState state;
    state.dimension = dimension;
    state.margin = margin;
    const double bound = 6.0 / std::sqrt(static_cast<double>(dimension));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    state.entity_vectors.resize(dimension, static_cast<Eigen::Index>(graph.total_nodes()));
    state.relation_vectors.resize(dimension,
                                  static_cast<Eigen::Index>(graph.relation_count()));
    for (Eigen::Index j = 0; j < state.entity_vectors.cols(); ++j)
        for (Eigen::Index i = 0; i < dimension; ++i) state.entity_vectors(i, j) = uniform(rng);
    for (Eigen::Index j = 0; j < state.relation_vectors.cols(); ++j)
        for (Eigen::Index i = 0; i < dimension; ++i) state.relation_vectors(i, j) = uniform(rng);
    return state;
}

double transe_margin_loss(const TransEState& state, const KnowledgeGraph& graph,
                          std::span<const TriplePair> pairs) {
    check_state(state, graph);
    double loss = 0.0;
    for (const auto& p : pairs) {
        const double pos = transe_score(state, graph, p.positive);
        const double neg = transe_score(state, graph, p.negative);
        loss += std::max(0.0, state.margin + pos - neg);
    }
    return loss;
}

TransEGradient transe_gradient(const TransEState& state, const KnowledgeGraph& graph,
                               std::span<const TriplePair> pairs) {
    check_state(state, graph);
    TransEGradient grad{Eigen::MatrixXd::Zero(state.entity_vectors.rows(),
                                              state.entity_vectors.cols()),
                        Eigen::MatrixXd::Zero(state.relation_vectors.rows(),
                                              state.relation_vectors.cols())};

    // d||x||/dx = x/||x||; zero at the origin.
    auto accumulate = [&](const Triple& t, const Eigen::VectorXd& diff, double sign) {
        const double norm = diff.norm();
        if (norm == 0.0) return;
        const Eigen::VectorXd unit = sign * diff / norm;
        grad.entity.col(static_cast<Eigen::Index>(graph.flat_index(t.head))) += unit;
        grad.relation.col(t.relation.index) += unit;
        grad.entity.col(static_cast<Eigen::Index>(graph.flat_index(t.tail))) -= unit;
    };

    for (const auto& p : pairs) {
        const Eigen::VectorXd pos = translation(state, graph, p.positive);
        const Eigen::VectorXd neg = translation(state, graph, p.negative);
        if (state.margin + pos.norm() - neg.norm() <= 0.0) continue;
        accumulate(p.positive, pos, 1.0);
        accumulate(p.negative, neg, -1.0);
    }
    return grad;
}

void normalize_entities(TransEState& state) {
    for (Eigen::Index j = 0; j < state.entity_vectors.cols(); ++j) {
        const double norm = state.entity_vectors.col(j).norm();
        if (norm > 0.0) state.entity_vectors.col(j) /= norm;
    }
}

TransEState train_transe(const KnowledgeGraph& graph, const TransEConfig& config,
                         const TransEEpochCallback& on_epoch) {
    if (!graph.frozen()) throw ValidationError("train_transe requires a frozen graph");
    if (graph.triples().empty()) throw ValidationError("train_transe: graph has no triples");
    if (config.epochs < 0) throw ConfigError("TransE epochs must be >= 0");
    if (config.batch_size < 1) throw ConfigError("TransE batch size must be >= 1");
    if (!(config.learning_rate > 0.0)) throw ConfigError("TransE learning rate must be > 0");

    std::mt19937_64 rng(config.seed);
    auto state = init_transe(graph, config.dimension, config.margin, rng);

    const auto& triples = graph.triples();
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<TriplePair> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const auto stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                const auto& pos = triples[order[i]];
                batch.push_back({pos, corrupt_triple(pos, graph, rng)});
            }
            epoch_loss += transe_margin_loss(state, graph, batch);
            const auto grad = transe_gradient(state, graph, batch);
            state.entity_vectors -= config.learning_rate * grad.entity;
            state.relation_vectors -= config.learning_rate * grad.relation;
        }
        normalize_entities(state);
        if (!std::isfinite(epoch_loss))
            throw NumericError(fmt::format("TransE diverged at epoch {}", epoch + 1));
        if (on_epoch) on_epoch(epoch + 1, epoch_loss);
    }
    return state;
}

}  // namespace kgperc
