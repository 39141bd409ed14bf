#include <gtest/gtest.h>

#include <random>

#include "kgperc/context.hpp"
#include "kgperc/errors.hpp"
#include "oracles.hpp"

using namespace kgperc;

namespace {

NodeId ent(std::uint32_t i) { return {i, NodeKind::Entity}; }

NewsDocument doc(std::uint32_t n, std::vector<NodeId> title, std::vector<NodeId> body) {
    return NewsDocument::from_mentions({n, NodeKind::News}, title, body);
}

}  // namespace

TEST(ExtractContext, SingleTitleMention) {
    const auto ctx = extract_context({doc(0, {ent(0)}, {})}, {});
    EXPECT_EQ(ctx.at(0), (EntityContext{1, 1, 0}));
}

TEST(ExtractContext, FrequencyCapsAtThirty) {
    const std::vector<NodeId> body(100, ent(0));
    const auto ctx = extract_context({doc(0, {}, body)}, {});
    EXPECT_EQ(ctx.at(0).frequency, 30);
    EXPECT_EQ(ctx.at(0).position, 2);
}

TEST(ExtractContext, BodyOnlyAcrossSevenDocs) {
    Corpus corpus;
    for (std::uint32_t n = 0; n < 7; ++n) corpus.push_back(doc(n, {ent(1)}, {ent(0)}));
    const CategoryMap cats{{0, 3}};
    const auto ctx = extract_context(corpus, cats);
    EXPECT_EQ(ctx.at(0), (EntityContext{2, 7, 3}));
    EXPECT_EQ(ctx.at(1), (EntityContext{1, 7, 0}));
    EXPECT_FALSE(ctx.contains(2));
}

TEST(ExtractContext, TitleWinsOverBody) {
    const auto ctx = extract_context({doc(0, {}, {ent(0)}), doc(1, {ent(0)}, {ent(0)})}, {});
    EXPECT_EQ(ctx.at(0), (EntityContext{1, 3, 0}));
}

TEST(ExtractContext, OrderIndependentAndCapped) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint32_t> pick(0, 5);
    Corpus corpus;
    for (std::uint32_t n = 0; n < 40; ++n) {
        std::vector<NodeId> title, body;
        for (int i = 0; i < 2; ++i) title.push_back(ent(pick(rng)));
        for (int i = 0; i < 6; ++i) body.push_back(ent(pick(rng)));
        corpus.push_back(doc(n, title, body));
    }
    const auto a = extract_context(corpus, {});
    std::shuffle(corpus.begin(), corpus.end(), rng);
    EXPECT_EQ(a, extract_context(corpus, {}));
    for (const auto& [e, c] : a) {
        EXPECT_GE(c.frequency, 1);
        EXPECT_LE(c.frequency, kMaxFrequency);
        EXPECT_TRUE(c.position == 1 || c.position == 2);
    }
}

TEST(NewsContext, UsesOwnCategoryAndMentionCount) {
    const Corpus corpus{doc(0, {ent(0)}, {ent(1), ent(1)}), doc(1, {}, {})};
    const auto ctx = extract_news_context(corpus, {{0, 2}});
    EXPECT_EQ(ctx.at(0), (EntityContext{1, 3, 2}));
    EXPECT_EQ(ctx.at(1), (EntityContext{2, 1, 0}));
}

TEST(CategoryIndex, DenseFirstSeenWithUnknownSlot) {
    CategoryIndex idx;
    EXPECT_EQ(idx.size(), 1u);
    EXPECT_EQ(idx.get_or_add("sports"), 1u);
    EXPECT_EQ(idx.get_or_add("tech"), 2u);
    EXPECT_EQ(idx.get_or_add("sports"), 1u);
    EXPECT_EQ(idx.get_or_add(""), 0u);
    EXPECT_EQ(idx.size(), 3u);
    EXPECT_EQ(idx.name(2), "tech");
}

TEST(ApplyContext, ZeroTablesAreIdentity) {
    const auto tables = ContextTables::zeros(4, 3);
    const std::vector<double> e{1, -2, 3, 0.5};
    const auto out = apply_context(e, EntityContext{1, 5, 2}, tables);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(out(i), e[static_cast<std::size_t>(i)]);
}

TEST(ApplyContext, PureSumOfRows) {
    auto tables = ContextTables::zeros(3, 1);
    tables.position.col(0).setOnes();   // pn = 1
    tables.frequency.col(0).setOnes();  // fn = 1
    tables.category.col(0).setOnes();   // tn = 0
    const std::vector<double> e(3, 0.0);
    const auto out = apply_context(e, EntityContext{1, 1, 0}, tables);
    EXPECT_EQ(out, Eigen::VectorXd::Constant(3, 3.0));
}

TEST(ApplyContext, NoContextPassesThroughBitIdentical) {
    std::mt19937_64 rng(3);
    auto tables = ContextTables::zeros(3, 2);
    tables.position = oracle::gaussian(3, 2, rng);
    const std::vector<double> e{0.1, 0.2, 0.30000000000000004};
    const auto out = apply_context(e, std::nullopt, tables);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(out(i), e[static_cast<std::size_t>(i)]);
}

TEST(ApplyContext, BoundsAndDimensionErrors) {
    const auto tables = ContextTables::zeros(2, 2);
    const std::vector<double> e{0, 0};
    EXPECT_THROW(apply_context(e, EntityContext{3, 1, 0}, tables), ValidationError);
    EXPECT_THROW(apply_context(e, EntityContext{1, 31, 0}, tables), ValidationError);
    EXPECT_THROW(apply_context(e, EntityContext{1, 0, 0}, tables), ValidationError);
    EXPECT_THROW(apply_context(e, EntityContext{1, 1, 2}, tables), ValidationError);
    const std::vector<double> wrong{0, 0, 0};
    EXPECT_THROW(apply_context(wrong, EntityContext{1, 1, 0}, tables), ValidationError);
}

TEST(ApplyContext, UnusedCategoryRowsDoNotMatter) {
    std::mt19937_64 rng(5);
    auto tables = ContextTables::zeros(3, 4);
    tables.position = oracle::gaussian(3, 2, rng);
    tables.frequency = oracle::gaussian(3, 30, rng);
    tables.category = oracle::gaussian(3, 4, rng);
    const NodeContexts contexts{std::nullopt, EntityContext{1, 2, 1}, EntityContext{2, 30, 1}};
    const Eigen::MatrixXd p = oracle::gaussian(3, 3, rng);
    const auto before = apply_context_all(p, contexts, tables);
    tables.category.col(3).setConstant(100.0);
    tables.category.col(0).setConstant(-7.0);
    EXPECT_EQ(before, apply_context_all(p, contexts, tables));
    EXPECT_EQ(before.col(0), p.col(0));
}
