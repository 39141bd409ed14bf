#pragma once
// K-hop embedding propagation over the heterogeneous graph.
//
// For every node v and layer k:
//   e_v^(k) = LeakyReLU( M1 e_v^(k-1)
//                        + sum_{w in A_v} c_vw (M1 e_w^(k-1) + M2 (e_w^(k-1) o e_v^(k-1))) )
// with c_vw = 1/sqrt(|A_v| |A_w|). Layer outputs e^(0)..e^(K) are concatenated
// into the propagated representation; scores are inner products.
//
// Embedding matrices are d x N, one column per node in the graph's flat index.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kgperc/graph_store.hpp"

namespace kgperc {

inline constexpr double kDefaultLeakySlope = 0.2;

struct LayerParams {
    Eigen::MatrixXd m1;
    Eigen::MatrixXd m2;
};

// CSR adjacency over flat node indices with symmetric degree normalization.
class NormalizedAdjacency {
public:
    NormalizedAdjacency() = default;
    explicit NormalizedAdjacency(const KnowledgeGraph& graph);

    std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::span<const std::uint32_t> neighbors(std::size_t v) const {
        return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    std::span<const double> coefficients(std::size_t v) const {
        return {coeffs_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    std::size_t degree(std::size_t v) const { return offsets_[v + 1] - offsets_[v]; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> targets_;
    std::vector<double> coeffs_;
};

Eigen::VectorXd leaky_relu(const Eigen::VectorXd& x, double slope);

// d_un (M1 e_n + M2 (e_n o e_u))
Eigen::VectorXd neighbor_message(const Eigen::VectorXd& e_n, const Eigen::VectorXd& e_u,
                                 const LayerParams& layer, double d_un);

// M1 e_u
Eigen::VectorXd self_message(const Eigen::VectorXd& e_u, const LayerParams& layer);

// Intermediates kept for the backward pass.
struct LayerCache {
    Eigen::MatrixXd input;      // e^(k-1)
    Eigen::MatrixXd aggregate;  // sum_w c_vw e_w^(k-1), per column v
    Eigen::MatrixXd preact;     // argument of LeakyReLU
};

Eigen::MatrixXd forward_layer(const Eigen::MatrixXd& prev, const NormalizedAdjacency& adjacency,
                              const LayerParams& layer, double slope,
                              LayerCache* cache = nullptr, int threads = 1);

// Backpropagates dL/de^(k) through one layer. Adds parameter gradients into
// `grad_layer` and returns dL/de^(k-1).
Eigen::MatrixXd backward_layer(const LayerCache& cache, const NormalizedAdjacency& adjacency,
                               const LayerParams& layer, double slope,
                               const Eigen::MatrixXd& grad_out, LayerParams& grad_layer,
                               int threads = 1);

struct Propagation {
    std::vector<Eigen::MatrixXd> layers;  // e^(0) .. e^(K)
    Eigen::MatrixXd concatenated;         // (K+1)d x N, layer blocks stacked in order
    std::vector<LayerCache> caches;       // one per propagated layer, if requested
};

// Runs `layers.size()` (= K >= 1) propagation layers from `base`.
Propagation propagate(const NormalizedAdjacency& adjacency, const Eigen::MatrixXd& base,
                      std::span<const LayerParams> layers, double slope,
                      bool keep_caches = false, int threads = 1);

double score(std::span<const double> user_star, std::span<const double> news_star);

}  // namespace kgperc
