#pragma once
// Independent reference implementations used by the unit and acceptance
// tests. They deliberately share no code with the library's kernels.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgperc/graph_store.hpp"
#include "kgperc/propagation.hpp"

namespace oracle {

// Edge multiplicity matrix over flat node indices: each triple contributes
// one entry from each endpoint (a self-loop contributes two).
inline Eigen::MatrixXd multiplicity(const kgperc::KnowledgeGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.total_nodes());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : g.triples()) {
        const auto h = static_cast<Eigen::Index>(g.flat_index(t.head));
        const auto w = static_cast<Eigen::Index>(g.flat_index(t.tail));
        a(h, w) += 1.0;
        a(w, h) += 1.0;
    }
    return a;
}

// D^{-1/2} A D^{-1/2}; isolated nodes get an all-zero row.
inline Eigen::MatrixXd normalized(const Eigen::MatrixXd& a) {
    const Eigen::VectorXd deg = a.rowwise().sum();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0.0) out(i, j) = a(i, j) / std::sqrt(deg(i) * deg(j));
    return out;
}

inline Eigen::MatrixXd leaky(const Eigen::MatrixXd& z, double slope) {
    return z.unaryExpr([slope](double x) { return x >= 0.0 ? x : slope * x; });
}

// One layer: LeakyReLU(M1 (E + S) + M2 (S o E)) with S = E * Ahat (Ahat symmetric).
inline Eigen::MatrixXd dense_layer(const Eigen::MatrixXd& e, const Eigen::MatrixXd& ahat,
                                   const kgperc::LayerParams& layer, double slope) {
    const Eigen::MatrixXd s = e * ahat;
    const Eigen::MatrixXd z = layer.m1 * (e + s) + layer.m2 * s.cwiseProduct(e);
    return leaky(z, slope);
}

inline Eigen::MatrixXd dense_propagate(const kgperc::KnowledgeGraph& g, const Eigen::MatrixXd& base,
                                       const std::vector<kgperc::LayerParams>& layers,
                                       double slope) {
    const Eigen::MatrixXd ahat = normalized(multiplicity(g));
    std::vector<Eigen::MatrixXd> outs{base};
    for (const auto& l : layers) outs.push_back(dense_layer(outs.back(), ahat, l, slope));
    Eigen::MatrixXd cat(base.rows() * static_cast<Eigen::Index>(outs.size()), base.cols());
    for (std::size_t k = 0; k < outs.size(); ++k)
        cat.middleRows(static_cast<Eigen::Index>(k) * base.rows(), base.rows()) = outs[k];
    return cat;
}

// Random heterogeneous graph with up to `max_nodes` nodes, several relations,
// occasional self-loops and parallel edges under different relations.
inline kgperc::KnowledgeGraph random_graph(std::mt19937_64& rng, int max_nodes) {
    using kgperc::NodeKind;
    std::uniform_int_distribution<int> count(1, std::max(1, max_nodes / 3));
    kgperc::KnowledgeGraph g;
    std::vector<kgperc::NodeId> nodes;
    for (const auto kind : kgperc::kAllNodeKinds) {
        const int c = count(rng);
        for (int i = 0; i < c; ++i)
            nodes.push_back(g.register_node(kind, std::string(kgperc::to_string(kind)) + std::to_string(i)));
    }
    const kgperc::RelationId rels[] = {g.clicked(), g.mentions(), g.register_relation("r"),
                                       g.register_relation("s")};
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::uniform_int_distribution<int> rel(0, 3);
    std::uniform_int_distribution<std::size_t> edges(0, 2 * nodes.size());
    const auto m = edges(rng);
    for (std::size_t i = 0; i < m; ++i) g.add_triple(nodes[pick(rng)], rels[rel(rng)], nodes[pick(rng)]);
    g.freeze();
    return g;
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return n(rng); });
}

}  // namespace oracle
