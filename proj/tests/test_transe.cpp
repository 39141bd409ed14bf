#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "kgperc/errors.hpp"
#include "kgperc/transe.hpp"

using namespace kgperc;

namespace {

NodeId ent(std::uint32_t i) { return {i, NodeKind::Entity}; }

KnowledgeGraph entity_graph(int n) {
    KnowledgeGraph g;
    for (int i = 0; i < n; ++i) g.register_node(NodeKind::Entity, "e" + std::to_string(i));
    return g;
}

double span_score(std::vector<double> h, std::vector<double> r, std::vector<double> t) {
    return transe_score(h, r, t);
}

}  // namespace

TEST(TransEScore, PerfectTranslationIsZero) {
    EXPECT_DOUBLE_EQ(span_score({0.5, -1.0, 2.0}, {1.0, 1.0, -1.0}, {1.5, 0.0, 1.0}), 0.0);
}

TEST(TransEScore, UnitVectors) {
    EXPECT_DOUBLE_EQ(span_score({1, 0}, {0, 0}, {0, 1}), std::sqrt(2.0));
}

TEST(TransEScore, ThreeFourFive) { EXPECT_DOUBLE_EQ(span_score({0, 0}, {3, 4}, {0, 0}), 5.0); }

TEST(TransEScore, DimensionMismatch) {
    EXPECT_THROW(span_score({0, 0}, {3, 4, 1}, {0, 0}), ValidationError);
}

TEST(CorruptTriple, NeverReturnsAStoredPositive) {
    auto g = entity_graph(11);
    const auto r = g.register_relation("r");
    g.add_triple(ent(0), r, ent(1));
    g.freeze();
    std::mt19937_64 rng(5);
    const Triple pos{ent(0), r, ent(1), 1.0};
    for (int i = 0; i < 500; ++i) {
        const auto neg = corrupt_triple(pos, g, rng);
        EXPECT_FALSE(g.contains(neg.head, neg.relation, neg.tail));
        EXPECT_EQ(neg.head.kind, NodeKind::Entity);
        EXPECT_EQ(neg.tail.kind, NodeKind::Entity);
        EXPECT_EQ(neg.relation, r);
    }
}

TEST(CorruptTriple, DeterministicUnderSeed) {
    auto g = entity_graph(11);
    const auto r = g.register_relation("r");
    g.add_triple(ent(0), r, ent(1));
    g.freeze();
    const Triple pos{ent(0), r, ent(1), 1.0};
    std::mt19937_64 a(9), b(9);
    for (int i = 0; i < 50; ++i) {
        const auto x = corrupt_triple(pos, g, a);
        const auto y = corrupt_triple(pos, g, b);
        EXPECT_EQ(x.head, y.head);
        EXPECT_EQ(x.tail, y.tail);
    }
}

TEST(CorruptTriple, SidesSplitEvenly) {
    auto g = entity_graph(11);
    const auto r = g.register_relation("r");
    g.add_triple(ent(0), r, ent(1));
    g.freeze();
    const Triple pos{ent(0), r, ent(1), 1.0};
    std::mt19937_64 rng(11);
    int head_replaced = 0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        const auto neg = corrupt_triple(pos, g, rng);
        const bool head_changed = neg.head != pos.head;
        const bool tail_changed = neg.tail != pos.tail;
        ASSERT_NE(head_changed, tail_changed);  // exactly one side changes
        head_replaced += head_changed;
    }
    EXPECT_NEAR(head_replaced / static_cast<double>(n), 0.5, 0.05);
}

TEST(CorruptTriple, Preconditions) {
    auto g = entity_graph(1);
    const auto r = g.register_relation("r");
    const Triple self{ent(0), r, ent(0), 1.0};
    std::mt19937_64 rng(1);
    EXPECT_THROW(corrupt_triple(self, g, rng), ValidationError);  // not frozen
    g.freeze();
    EXPECT_THROW(corrupt_triple(self, g, rng), ValidationError);  // one entity only
}

// Central differences on a 5-triple toy graph.
TEST(TransEGradientCheck, MatchesFiniteDifferences) {
    auto g = entity_graph(6);
    const auto r1 = g.register_relation("r1");
    const auto r2 = g.register_relation("r2");
    g.add_triple(ent(0), r1, ent(1));
    g.add_triple(ent(1), r1, ent(2));
    g.add_triple(ent(2), r2, ent(3));
    g.add_triple(ent(3), r2, ent(4));
    g.add_triple(ent(4), r1, ent(5));
    g.freeze();

    std::mt19937_64 rng(21);
    auto state = init_transe(g, 4, 1.0, rng);
    std::vector<TriplePair> pairs;
    for (const auto& t : g.triples()) pairs.push_back({t, corrupt_triple(t, g, rng)});
    // Keep every hinge away from its kink so the loss is smooth at the point.
    for (const auto& p : pairs) {
        const double slack = state.margin + transe_score(state, g, p.positive) -
                             transe_score(state, g, p.negative);
        ASSERT_GT(std::abs(slack), 1e-3);
    }

    const auto grad = transe_gradient(state, g, pairs);
    const double eps = 1e-6;
    auto check = [&](Eigen::MatrixXd& values, const Eigen::MatrixXd& analytic, const char* what) {
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            for (Eigen::Index i = 0; i < values.rows(); ++i) {
                const double saved = values(i, j);
                values(i, j) = saved + eps;
                const double up = transe_margin_loss(state, g, pairs);
                values(i, j) = saved - eps;
                const double down = transe_margin_loss(state, g, pairs);
                values(i, j) = saved;
                const double numeric = (up - down) / (2 * eps);
                const double a = analytic(i, j);
                const double rel =
                    std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
                EXPECT_LT(rel, 1e-4) << what << "(" << i << "," << j << ") analytic " << a
                                     << " numeric " << numeric;
            }
    };
    check(state.entity_vectors, grad.entity, "entity");
    check(state.relation_vectors, grad.relation, "relation");
}

namespace {

KnowledgeGraph chain_graph() {
    auto g = entity_graph(20);
    const auto next = g.register_relation("next");
    for (std::uint32_t c = 0; c < 4; ++c)
        for (std::uint32_t i = 0; i < 4; ++i) g.add_triple(ent(5 * c + i), next, ent(5 * c + i + 1));
    g.freeze();
    return g;
}

}  // namespace

TEST(TrainTransE, ZeroEpochsReturnsInitialization) {
    const auto g = chain_graph();
    TransEConfig cfg;
    cfg.dimension = 8;
    cfg.epochs = 0;
    cfg.seed = 4;
    const auto trained = train_transe(g, cfg);
    std::mt19937_64 rng(cfg.seed);
    const auto init = init_transe(g, cfg.dimension, cfg.margin, rng);
    EXPECT_EQ(trained.entity_vectors, init.entity_vectors);
    EXPECT_EQ(trained.relation_vectors, init.relation_vectors);
}

TEST(TrainTransE, UnitNormsAndFallingLoss) {
    const auto g = chain_graph();
    TransEConfig cfg;
    cfg.dimension = 16;
    cfg.epochs = 40;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.05;
    std::vector<double> losses;
    const auto state = train_transe(g, cfg, [&](int, double loss) { losses.push_back(loss); });
    ASSERT_EQ(losses.size(), 40u);
    for (Eigen::Index j = 0; j < state.entity_vectors.cols(); ++j)
        EXPECT_NEAR(state.entity_vectors.col(j).norm(), 1.0, 1e-9);
    // Fresh corruptions each epoch make single steps noisy; ten-epoch means must fall.
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < losses.size(); w += 10) {
        const double mean = std::accumulate(losses.begin() + static_cast<std::ptrdiff_t>(w),
                                            losses.begin() + static_cast<std::ptrdiff_t>(w + 10), 0.0) / 10.0;
        EXPECT_LT(mean, previous) << "window starting at epoch " << w + 1;
        previous = mean;
    }
    EXPECT_LT(losses.back(), losses.front());
}

TEST(TrainTransE, DeterministicForSeed) {
    const auto g = chain_graph();
    TransEConfig cfg;
    cfg.dimension = 8;
    cfg.epochs = 5;
    const auto a = train_transe(g, cfg);
    const auto b = train_transe(g, cfg);
    EXPECT_EQ(a.entity_vectors, b.entity_vectors);
    EXPECT_EQ(a.relation_vectors, b.relation_vectors);
}

TEST(TrainTransE, EmptyTripleSetIsAnError) {
    auto g = entity_graph(3);
    g.freeze();
    TransEConfig cfg;
    cfg.dimension = 4;
    EXPECT_THROW(train_transe(g, cfg), ValidationError);
}
