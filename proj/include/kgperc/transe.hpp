#pragma once
// TransE pretraining of base node embeddings.
//
// Triples are scored by the translation distance ||h + r - t||_2 and trained
// with a margin ranking loss against corrupted triples. Entity (node) vectors
// are renormalized to unit length after every epoch; relation vectors are not.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kgperc/graph_store.hpp"

namespace kgperc {

struct TransEConfig {
    int dimension = 64;
    double margin = 1.0;
    double learning_rate = 0.01;
    int epochs = 50;
    int batch_size = 128;
    std::uint64_t seed = 1;
};

struct TransEState {
    int dimension = 0;
    double margin = 1.0;
    // d x N over the graph's flat node index.
    Eigen::MatrixXd entity_vectors;
    // d x R over relation ids.
    Eigen::MatrixXd relation_vectors;
};

// A positive triple and its corruption.
struct TriplePair {
    Triple positive;
    Triple negative;
};

struct TransEGradient {
    Eigen::MatrixXd entity;
    Eigen::MatrixXd relation;
};

double transe_score(std::span<const double> head, std::span<const double> relation,
                    std::span<const double> tail);
double transe_score(const TransEState& state, const KnowledgeGraph& graph,
                    const Triple& triple);

// Replaces head or tail (fair coin) with a uniformly drawn node of the same
// kind, resampling up to 100 times while the result is a stored positive.
Triple corrupt_triple(const Triple& triple, const KnowledgeGraph& graph, std::mt19937_64& rng);

// Uniform draws in [-6/sqrt(d), 6/sqrt(d)] for every node and relation.
TransEState init_transe(const KnowledgeGraph& graph, int dimension, double margin,
                        std::mt19937_64& rng);

// Sum over pairs of max(0, margin + score(pos) - score(neg)).
double transe_margin_loss(const TransEState& state, const KnowledgeGraph& graph,
                          std::span<const TriplePair> pairs);

// Analytic gradient of transe_margin_loss.
TransEGradient transe_gradient(const TransEState& state, const KnowledgeGraph& graph,
                               std::span<const TriplePair> pairs);

void normalize_entities(TransEState& state);

using TransEEpochCallback = std::function<void(int epoch, double loss)>;

// Mini-batch gradient descent over the frozen graph's triples. Deterministic
// for a fixed seed.
TransEState train_transe(const KnowledgeGraph& graph, const TransEConfig& config,
                         const TransEEpochCallback& on_epoch = {});

}  // namespace kgperc
