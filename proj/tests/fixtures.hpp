#pragma once
// Small hand-built models shared by the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kgperc/model.hpp"
#include "kgperc/trainer.hpp"
#include "oracles.hpp"

namespace fixtures {

// 2 users, 2 news, 2 entities; clicks, mentions and one SameNews edge.
struct SixNode {
    kgperc::KnowledgeGraph graph;
    kgperc::NodeContexts contexts;
    std::size_t categories = 3;

    SixNode() {
        using kgperc::NodeKind;
        auto& g = graph;
        const auto u0 = g.register_node(NodeKind::User, "u0");
        const auto u1 = g.register_node(NodeKind::User, "u1");
        const auto n0 = g.register_node(NodeKind::News, "n0");
        const auto n1 = g.register_node(NodeKind::News, "n1");
        const auto e0 = g.register_node(NodeKind::Entity, "e0");
        const auto e1 = g.register_node(NodeKind::Entity, "e1");
        g.add_triple(u0, g.clicked(), n0);
        g.add_triple(u0, g.clicked(), n1);
        g.add_triple(u1, g.clicked(), n1);
        g.add_triple(n0, g.mentions(), e0);
        g.add_triple(n1, g.mentions(), e0);
        g.add_triple(n1, g.mentions(), e1);
        g.add_triple(e0, g.same_news(), e1);
        g.freeze();
        contexts.resize(g.total_nodes());
        contexts[g.flat_index(n0)] = kgperc::EntityContext{1, 2, 1};
        contexts[g.flat_index(n1)] = kgperc::EntityContext{2, 3, 2};
        contexts[g.flat_index(e0)] = kgperc::EntityContext{1, 3, 1};
        contexts[g.flat_index(e1)] = kgperc::EntityContext{2, 1, 0};
    }
};

// Every parameter (context tables included) drawn from N(0, sd^2).
inline kgperc::ModelParams random_params(const kgperc::ModelConfig& config, std::size_t nodes,
                                         std::size_t categories, std::mt19937_64& rng,
                                         double sd = 0.5) {
    auto p = kgperc::ModelParams::zeros(config, nodes, categories);
    for (auto* block : p.blocks()) *block = oracle::gaussian(block->rows(), block->cols(), rng, sd);
    return p;
}

struct GradientCheck {
    std::string block;
    double max_relative_error = 0.0;
    std::size_t entries = 0;
};

// Central differences of `loss` against `analytic`, per parameter block.
inline std::vector<GradientCheck> finite_difference_check(
    kgperc::ModelParams params, const kgperc::ModelParams& analytic,
    const std::function<double(const kgperc::ModelParams&)>& loss, double eps = 1e-6) {
    const auto names = kgperc::ModelParams::block_names(params.layers.size());
    auto blocks = params.blocks();
    const auto grads = analytic.blocks();
    std::vector<GradientCheck> out;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        GradientCheck c{names[b], 0.0, 0};
        auto& m = *blocks[b];
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                const double saved = m(i, j);
                m(i, j) = saved + eps;
                const double up = loss(params);
                m(i, j) = saved - eps;
                const double down = loss(params);
                m(i, j) = saved;
                const double numeric = (up - down) / (2.0 * eps);
                const double a = (*grads[b])(i, j);
                const double rel =
                    std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
                c.max_relative_error = std::max(c.max_relative_error, rel);
                ++c.entries;
            }
        out.push_back(c);
    }
    return out;
}

}  // namespace fixtures
