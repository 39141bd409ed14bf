#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "kgperc/errors.hpp"
#include "kgperc/graph_store.hpp"

using namespace kgperc;

TEST(RegisterNode, IdempotentPerKey) {
    KnowledgeGraph g;
    const auto a = g.register_node(NodeKind::User, "u1");
    const auto b = g.register_node(NodeKind::User, "u1");
    EXPECT_EQ(a, b);
    EXPECT_EQ(g.node_count(NodeKind::User), 1u);
}

TEST(RegisterNode, DenseIndices) {
    KnowledgeGraph g;
    EXPECT_EQ(g.register_node(NodeKind::User, "u1").index, 0u);
    EXPECT_EQ(g.register_node(NodeKind::User, "u2").index, 1u);
}

TEST(RegisterNode, IndicesArePerKind) {
    KnowledgeGraph g;
    const auto u = g.register_node(NodeKind::User, "u1");
    const auto n = g.register_node(NodeKind::News, "n1");
    EXPECT_EQ(u.index, 0u);
    EXPECT_EQ(n.index, 0u);
    EXPECT_NE(u, n);
    EXPECT_EQ(g.find_node(NodeKind::News, "n1"), n);
    EXPECT_FALSE(g.find_node(NodeKind::Entity, "n1"));
}

TEST(RegisterNode, FrozenGraphRejectsNewKeys) {
    KnowledgeGraph g;
    const auto u = g.register_node(NodeKind::User, "u1");
    g.freeze();
    EXPECT_EQ(g.register_node(NodeKind::User, "u1"), u);
    EXPECT_THROW(g.register_node(NodeKind::User, "u2"), ValidationError);
}

TEST(Relations, ReservedLabelsExist) {
    KnowledgeGraph g;
    EXPECT_EQ(g.relation_name(g.same_news()), "SameNews");
    EXPECT_EQ(g.relation_name(g.same_user()), "SameUser");
    EXPECT_EQ(g.relation_name(g.clicked()), "Clicked");
    EXPECT_EQ(g.relation_name(g.mentions()), "Mentions");
    const auto r = g.register_relation("related_to");
    EXPECT_EQ(g.register_relation("related_to"), r);
    EXPECT_EQ(g.find_relation("related_to"), r);
}

class AddTriple : public ::testing::Test {
protected:
    KnowledgeGraph g;
    NodeId a = g.register_node(NodeKind::Entity, "a");
    NodeId b = g.register_node(NodeKind::Entity, "b");
    RelationId r = g.register_relation("r");
};

TEST_F(AddTriple, ConfidenceAboveThresholdAccepted) {
    EXPECT_TRUE(g.add_triple(a, r, b, 0.9, 0.8));
}

TEST_F(AddTriple, ConfidenceAtThresholdRejected) {
    EXPECT_FALSE(g.add_triple(a, r, b, 0.8, 0.8));
    EXPECT_TRUE(g.triples().empty());
    EXPECT_EQ(g.degree(a), 0u);
}

TEST_F(AddTriple, FullConfidenceZeroThreshold) {
    EXPECT_TRUE(g.add_triple(a, r, b, 1.0, 0.0));
}

TEST_F(AddTriple, DuplicateIsNoOp) {
    EXPECT_TRUE(g.add_triple(a, r, b));
    EXPECT_FALSE(g.add_triple(a, r, b));
    EXPECT_EQ(g.triples().size(), 1u);
    EXPECT_EQ(g.degree(a), 1u);
}

TEST_F(AddTriple, Errors) {
    EXPECT_THROW(g.add_triple(a, r, {5, NodeKind::Entity}), ValidationError);
    EXPECT_THROW(g.add_triple(a, r, b, 1.5), ValidationError);
    EXPECT_THROW(g.add_triple(a, r, b, -0.1), ValidationError);
    EXPECT_THROW(g.add_triple(a, RelationId{999}, b), ValidationError);
    EXPECT_THROW(g.add_triple(a, g.same_news(), a), ValidationError);
    g.freeze();
    EXPECT_THROW(g.add_triple(a, r, b), ValidationError);
}

TEST_F(AddTriple, NeighborsAreBidirectional) {
    g.add_triple(a, r, b);
    ASSERT_EQ(g.neighbors(a).size(), 1u);
    ASSERT_EQ(g.neighbors(b).size(), 1u);
    EXPECT_EQ(g.neighbors(a)[0].relation, r);
    EXPECT_EQ(g.neighbors(a)[0].node, b);
    EXPECT_EQ(g.neighbors(b)[0].relation, r);
    EXPECT_EQ(g.neighbors(b)[0].node, a);
}

TEST(Degree, IsolatedNode) {
    KnowledgeGraph g;
    const auto v = g.register_node(NodeKind::Entity, "v");
    EXPECT_TRUE(g.neighbors(v).empty());
    EXPECT_EQ(g.degree(v), 0u);
    EXPECT_THROW(g.neighbors({3, NodeKind::Entity}), ValidationError);
}

TEST(Degree, TriangleMiddleNode) {
    KnowledgeGraph g;
    const auto a = g.register_node(NodeKind::Entity, "a");
    const auto b = g.register_node(NodeKind::Entity, "b");
    const auto c = g.register_node(NodeKind::Entity, "c");
    const auto r = g.register_relation("r");
    g.add_triple(a, r, b);
    g.add_triple(b, r, c);
    g.add_triple(a, r, c);
    EXPECT_EQ(g.degree(b), 2u);
}

TEST(Degree, StarCenter) {
    KnowledgeGraph g;
    const auto center = g.register_node(NodeKind::Entity, "c");
    const auto r = g.register_relation("r");
    for (int i = 0; i < 5; ++i)
        g.add_triple(center, r, g.register_node(NodeKind::Entity, "leaf" + std::to_string(i)));
    EXPECT_EQ(g.degree(center), 5u);
    EXPECT_EQ(g.degree(*g.find_node(NodeKind::Entity, "leaf3")), 1u);
}

namespace {

KnowledgeGraph random_graph(std::uint64_t seed, std::vector<Triple>* attempted = nullptr) {
    std::mt19937_64 rng(seed);
    KnowledgeGraph g;
    std::vector<NodeId> nodes;
    for (int i = 0; i < 5; ++i) nodes.push_back(g.register_node(NodeKind::User, "u" + std::to_string(i)));
    for (int i = 0; i < 6; ++i) nodes.push_back(g.register_node(NodeKind::News, "n" + std::to_string(i)));
    for (int i = 0; i < 8; ++i) nodes.push_back(g.register_node(NodeKind::Entity, "e" + std::to_string(i)));
    const auto r = g.register_relation("r");
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        const auto h = nodes[pick(rng)];
        const auto t = nodes[pick(rng)];
        const Triple tr{h, r, t, conf(rng)};
        if (attempted) attempted->push_back(tr);
        g.add_triple(tr, 0.3);
    }
    return g;
}

}  // namespace

TEST(GraphProperties, AdjacencyMirrorsTriples) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<Triple> attempted;
        const auto g = random_graph(seed, &attempted);
        std::size_t degree_sum = 0;
        for (const auto kind : kAllNodeKinds)
            for (std::uint32_t i = 0; i < g.node_count(kind); ++i) degree_sum += g.degree({i, kind});
        EXPECT_EQ(degree_sum, 2 * g.triples().size());

        for (const auto& t : g.triples()) {
            EXPECT_GT(t.confidence, 0.3);
            auto has = [&](NodeId from, NodeId to) {
                for (const auto& nb : g.neighbors(from))
                    if (nb.relation == t.relation && nb.node == to) return true;
                return false;
            };
            EXPECT_TRUE(has(t.head, t.tail));
            EXPECT_TRUE(has(t.tail, t.head));
        }
        // Every attempt above the gate is stored (once).
        for (const auto& t : attempted)
            if (t.confidence > 0.3) EXPECT_TRUE(g.contains(t.head, t.relation, t.tail));
    }
}

TEST(GraphProperties, SameInputSameAdjacencyOrder) {
    const auto g1 = random_graph(7);
    const auto g2 = random_graph(7);
    for (const auto kind : kAllNodeKinds)
        for (std::uint32_t i = 0; i < g1.node_count(kind); ++i) {
            const auto n1 = g1.neighbors({i, kind});
            const auto n2 = g2.neighbors({i, kind});
            ASSERT_EQ(n1.size(), n2.size());
            for (std::size_t j = 0; j < n1.size(); ++j) {
                EXPECT_EQ(n1[j].relation, n2[j].relation);
                EXPECT_EQ(n1[j].node, n2[j].node);
            }
        }
}

TEST(FlatIndex, UsersThenNewsThenEntities) {
    KnowledgeGraph g;
    g.register_node(NodeKind::Entity, "e0");
    g.register_node(NodeKind::User, "u0");
    g.register_node(NodeKind::User, "u1");
    g.register_node(NodeKind::News, "n0");
    g.freeze();
    EXPECT_EQ(g.total_nodes(), 4u);
    EXPECT_EQ(g.flat_index({1, NodeKind::User}), 1u);
    EXPECT_EQ(g.flat_index({0, NodeKind::News}), 2u);
    EXPECT_EQ(g.flat_index({0, NodeKind::Entity}), 3u);
    for (std::size_t f = 0; f < 4; ++f) EXPECT_EQ(g.flat_index(g.from_flat(f)), f);
}

TEST(TripleFile, ReadGateAndCount) {
    const auto path = std::filesystem::temp_directory_path() / "kgperc_triples_test.tsv";
    {
        std::ofstream out(path);
        out << "# comment\n"
            << "a\tr\tb\t0.9\n"
            << "a\tr\tc\t0.8\n"
            << "b\ts\tc\n"
            << "a\tr\tb\t0.95\n";
    }
    const auto raw = read_triple_file(path);
    ASSERT_EQ(raw.size(), 4u);
    EXPECT_DOUBLE_EQ(raw[2].confidence, 1.0);

    KnowledgeGraph g;
    const auto stats = ingest_triples(g, raw);
    EXPECT_EQ(stats.accepted, 2u);
    EXPECT_EQ(stats.below_threshold, 1u);
    EXPECT_EQ(stats.duplicates, 1u);
    EXPECT_EQ(g.node_count(NodeKind::Entity), 3u);
    EXPECT_EQ(g.triples().size(), 2u);
    std::filesystem::remove(path);
}

TEST(TripleFile, MalformedLineNamesLocation) {
    const auto path = std::filesystem::temp_directory_path() / "kgperc_bad_triples.tsv";
    {
        std::ofstream out(path);
        out << "a\tr\tb\n"
            << "only-two\tfields\n";
    }
    try {
        read_triple_file(path);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    }
    std::filesystem::remove(path);
}

TEST(TripleFile, OutOfRangeConfidenceRejected) {
    KnowledgeGraph g;
    const std::vector<RawTriple> raw{{"a", "r", "b", 1.2}};
    EXPECT_THROW(ingest_triples(g, raw), ValidationError);
}
