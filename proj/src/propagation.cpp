#include "kgperc/propagation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kgperc/errors.hpp"
#include "kgperc/parallel.hpp"

namespace kgperc {
namespace {

void check_layer(const LayerParams& layer, Eigen::Index dim) {
    if (layer.m1.rows() != layer.m2.rows() || layer.m1.cols() != layer.m2.cols())
        throw ValidationError("M1 and M2 must share a shape");
    if (layer.m1.cols() != dim)
        throw ValidationError(fmt::format("layer expects input dimension {}, got {}",
                                          layer.m1.cols(), dim));
}

// out[:, v] = sum_w c_vw in[:, w]. Each column is written by one task, in
// adjacency order, so the result does not depend on the thread count.
Eigen::MatrixXd gather(const Eigen::MatrixXd& in, const NormalizedAdjacency& adjacency,
                       int threads) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(in.rows(), in.cols());
    parallel_for(adjacency.node_count(), threads, [&](std::size_t v) {
        const auto targets = adjacency.neighbors(v);
        const auto coeffs = adjacency.coefficients(v);
        auto col = out.col(static_cast<Eigen::Index>(v));
        for (std::size_t i = 0; i < targets.size(); ++i)
            col.noalias() += coeffs[i] * in.col(targets[i]);
    });
    return out;
}

}  // namespace

NormalizedAdjacency::NormalizedAdjacency(const KnowledgeGraph& graph) {
    const auto n = graph.total_nodes();
    offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + graph.degree(graph.from_flat(v));
    targets_.resize(offsets_[n]);
    coeffs_.resize(offsets_[n]);
    for (std::size_t v = 0; v < n; ++v) {
        const auto list = graph.neighbors(graph.from_flat(v));
        const double dv = static_cast<double>(list.size());
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto w = graph.flat_index(list[i].node);
            const double dw = static_cast<double>(graph.degree(list[i].node));
            targets_[offsets_[v] + i] = static_cast<std::uint32_t>(w);
            coeffs_[offsets_[v] + i] = 1.0 / std::sqrt(dv * dw);
        }
    }
}

Eigen::VectorXd leaky_relu(const Eigen::VectorXd& x, double slope) {
    return x.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
}

Eigen::VectorXd neighbor_message(const Eigen::VectorXd& e_n, const Eigen::VectorXd& e_u,
                                 const LayerParams& layer, double d_un) {
    if (e_n.size() != e_u.size())
        throw ValidationError("neighbor_message: embedding dimensions differ");
    check_layer(layer, e_n.size());
    return d_un * (layer.m1 * e_n + layer.m2 * e_n.cwiseProduct(e_u));
}

Eigen::VectorXd self_message(const Eigen::VectorXd& e_u, const LayerParams& layer) {
    check_layer(layer, e_u.size());
    return layer.m1 * e_u;
}

Eigen::MatrixXd forward_layer(const Eigen::MatrixXd& prev, const NormalizedAdjacency& adjacency,
                              const LayerParams& layer, double slope, LayerCache* cache,
                              int threads) {
    if (static_cast<std::size_t>(prev.cols()) != adjacency.node_count())
        throw ValidationError(fmt::format("forward_layer: {} embeddings for {} nodes",
                                          prev.cols(), adjacency.node_count()));
    check_layer(layer, prev.rows());

    Eigen::MatrixXd aggregate = gather(prev, adjacency, threads);
    // Self message plus the summed neighbor messages:
    //   M1 e_v + sum_w c_vw (M1 e_w + M2 (e_w o e_v)) = M1 (e_v + S_v) + M2 (S_v o e_v)
    Eigen::MatrixXd preact =
        layer.m1 * (prev + aggregate) + layer.m2 * aggregate.cwiseProduct(prev);
    Eigen::MatrixXd out =
        preact.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
    if (cache) {
        cache->input = prev;
        cache->aggregate = std::move(aggregate);
        cache->preact = std::move(preact);
    }
    return out;
}

Eigen::MatrixXd backward_layer(const LayerCache& cache, const NormalizedAdjacency& adjacency,
                               const LayerParams& layer, double slope,
                               const Eigen::MatrixXd& grad_out, LayerParams& grad_layer,
                               int threads) {
    const Eigen::MatrixXd grad_pre = grad_out.cwiseProduct(
        cache.preact.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; }));

    const Eigen::MatrixXd& e = cache.input;
    const Eigen::MatrixXd& s = cache.aggregate;
    grad_layer.m1.noalias() += grad_pre * (e + s).transpose();
    grad_layer.m2.noalias() += grad_pre * s.cwiseProduct(e).transpose();

    const Eigen::MatrixXd p = layer.m1.transpose() * grad_pre;
    const Eigen::MatrixXd q = layer.m2.transpose() * grad_pre;
    Eigen::MatrixXd grad_in = p + q.cwiseProduct(s);
    const Eigen::MatrixXd grad_aggregate = p + q.cwiseProduct(e);
    // Adjacency is symmetric with symmetric coefficients, so the transpose of
    // the gather is the gather itself.
    grad_in += gather(grad_aggregate, adjacency, threads);
    return grad_in;
}

Propagation propagate(const NormalizedAdjacency& adjacency, const Eigen::MatrixXd& base,
                      std::span<const LayerParams> layers, double slope, bool keep_caches,
                      int threads) {
    if (layers.empty()) throw ConfigError("propagate requires K >= 1 layers");
    Propagation out;
    out.layers.reserve(layers.size() + 1);
    out.layers.push_back(base);
    if (keep_caches) out.caches.resize(layers.size());
    for (std::size_t k = 0; k < layers.size(); ++k) {
        out.layers.push_back(forward_layer(out.layers.back(), adjacency, layers[k], slope,
                                           keep_caches ? &out.caches[k] : nullptr, threads));
    }

    Eigen::Index total_rows = 0;
    for (const auto& l : out.layers) total_rows += l.rows();
    out.concatenated.resize(total_rows, base.cols());
    Eigen::Index row = 0;
    for (const auto& l : out.layers) {
        out.concatenated.middleRows(row, l.rows()) = l;
        row += l.rows();
    }
    return out;
}

double score(std::span<const double> user_star, std::span<const double> news_star) {
    if (user_star.size() != news_star.size())
        throw ValidationError(fmt::format("score: dimension mismatch ({} vs {})",
                                          user_star.size(), news_star.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < user_star.size(); ++i) dot += user_star[i] * news_star[i];
    return dot;
}

}  // namespace kgperc
