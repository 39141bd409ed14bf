#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kgperc/datasets.hpp"
#include "kgperc/errors.hpp"
#include "kgperc/evaluator.hpp"

using namespace kgperc;
namespace fs = std::filesystem;

namespace {

class DatasetFiles : public ::testing::Test {
protected:
    fs::path dir = fs::temp_directory_path() / "kgperc_dataset_test";
    void SetUp() override {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path write(const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

std::string expect_validation_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ValidationError";
    return {};
}

SyntheticSpec small_spec() {
    SyntheticSpec s;
    s.users = 40;
    s.news = 60;
    s.entities = 24;
    s.blocks = 3;
    s.seed = 11;
    return s;
}

}  // namespace

TEST_F(DatasetFiles, NativeRoundTrip) {
    const auto original = generate_synthetic(small_spec());
    write_native(original, dir / "native");
    const auto loaded = load_native(dir / "native");

    EXPECT_EQ(loaded.log.size(), original.log.size());
    for (std::size_t i = 0; i < original.log.size(); ++i) {
        const auto& a = original.log.records()[i];
        const auto& b = loaded.log.records()[i];
        EXPECT_EQ(loaded.nodes.key(b.user), original.nodes.key(a.user));
        EXPECT_EQ(loaded.nodes.key(b.news), original.nodes.key(a.news));
        EXPECT_EQ(b.timestamp, a.timestamp);
    }
    ASSERT_EQ(loaded.corpus.size(), original.corpus.size());
    for (std::size_t i = 0; i < original.corpus.size(); ++i) {
        EXPECT_EQ(loaded.corpus[i].occurrences, original.corpus[i].occurrences);
        EXPECT_EQ(loaded.corpus[i].title_entities, original.corpus[i].title_entities);
    }
    EXPECT_EQ(loaded.entity_categories, original.entity_categories);
    EXPECT_EQ(loaded.news_categories, original.news_categories);
    EXPECT_EQ(loaded.kg_triples.size(), original.kg_triples.size());
    EXPECT_EQ(loaded.nodes.node_count(NodeKind::Entity), original.nodes.node_count(NodeKind::Entity));
}

TEST_F(DatasetFiles, NativeKeepsSplitTags) {
    auto data = generate_synthetic(small_spec());
    data.log = split(data.log, {}, 4);
    write_native(data, dir / "native");
    const auto loaded = load_native(dir / "native");
    for (std::size_t i = 0; i < data.log.size(); ++i)
        EXPECT_EQ(loaded.log.records()[i].split, data.log.records()[i].split);
}

TEST_F(DatasetFiles, NativeMissingFilesAndMalformedLine) {
    EXPECT_THROW(load_native(dir / "absent"), ValidationError);
    fs::create_directories(dir / "bad");
    std::ofstream(dir / "bad" / "corpus.tsv") << "n0\te0\te1\n";
    std::ofstream(dir / "bad" / "interactions.tsv") << "u0\tn0\t5\nu0\tn0\n";
    const auto msg = expect_validation_message([&] { load_native(dir / "bad"); });
    EXPECT_NE(msg.find("interactions.tsv:2"), std::string::npos) << msg;
}

TEST_F(DatasetFiles, MindStyleMinimumClicks) {
    const auto news = write("news.tsv",
                            "n1\te1\te2\t\tsports\nn2\te2\t\t\tsports\nn3\t\te3\t\tworld\n"
                            "n4\t\t\t\tworld\nn5\te1\te1\t\tworld\n");
    // u4 has four distinct clicks (one repeated), u5 has five.
    const auto behaviors = write("behaviors.tsv",
                                 "u4\t10\tn1 n2 n3\n"
                                 "u4\t11\tn4 n1\n"
                                 "u5\t12\tn1 n2 n3 n4 n5\n");
    const auto data = load_mind_style(behaviors, news);
    EXPECT_EQ(data.nodes.node_count(NodeKind::User), 1u);
    EXPECT_EQ(data.nodes.key({0, NodeKind::User}), "u5");
    EXPECT_EQ(data.log.size(), 5u);
    EXPECT_EQ(data.stats.users_below_min_clicks, 1u);
    EXPECT_EQ(data.stats.clicks_dropped_with_users, 5u);
    EXPECT_EQ(data.corpus.size(), 5u);
    EXPECT_EQ(data.news_categories.size(), 5u);
}

TEST_F(DatasetFiles, MindStyleErrors) {
    const auto news = write("news.tsv", "n1\te1\t\n");
    const auto empty = write("empty.tsv", "");
    const auto msg = expect_validation_message([&] { load_mind_style(empty, news); });
    EXPECT_NE(msg.find("no interactions"), std::string::npos) << msg;
    const auto bad = write("bad.tsv", "u1\t1\tn1\nu1\tnot-a-time\tn1\n");
    const auto msg2 = expect_validation_message([&] { load_mind_style(bad, news, 1); });
    EXPECT_NE(msg2.find("bad.tsv:2"), std::string::npos) << msg2;
}

TEST_F(DatasetFiles, MovieLensThreshold) {
    const auto ratings = write("ratings.dat",
                               "1::10::5::100\n1::11::3::101\n2::10::4::102\n2::12::4.5::103\n");
    const auto movies = write("movies.dat", "10::Heat (1995)::Action|Crime\n12::Up::Animation\n");
    const auto data = load_movielens_style(ratings, 4.0, movies);
    EXPECT_EQ(data.log.size(), 3u);
    EXPECT_EQ(data.stats.ratings_below_threshold, 1u);
    const auto heat = data.nodes.find_node(NodeKind::News, "10");
    ASSERT_TRUE(heat);
    EXPECT_EQ(data.categories.name(data.news_categories.at(heat->index)), "Action");
    EXPECT_FALSE(data.nodes.find_node(NodeKind::News, "11"));

    EXPECT_EQ(load_movielens_style(ratings, 5.0).log.size(), 1u);
    EXPECT_EQ(load_movielens_style(ratings, 3.0).log.size(), 4u);
}

TEST_F(DatasetFiles, MovieLensBadRating) {
    const auto ratings = write("ratings.dat", "1::10::5::100\n1::11::five::101\n");
    const auto msg = expect_validation_message([&] { load_movielens_style(ratings); });
    EXPECT_NE(msg.find("ratings.dat:2"), std::string::npos) << msg;
}

TEST(Synthetic, DeterministicUnderSeed) {
    const auto a = generate_synthetic(small_spec());
    const auto b = generate_synthetic(small_spec());
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        EXPECT_EQ(a.log.records()[i].user, b.log.records()[i].user);
        EXPECT_EQ(a.log.records()[i].news, b.log.records()[i].news);
        EXPECT_EQ(a.log.records()[i].timestamp, b.log.records()[i].timestamp);
    }
    auto other = small_spec();
    other.seed = 12;
    EXPECT_NE(generate_synthetic(other).log.size(), 0u);
}

TEST(Synthetic, NoCrossBlockClicksWhenProbabilityIsZero) {
    auto spec = small_spec();
    spec.cross_block_probability = 0.0;
    const auto data = generate_synthetic(spec);
    ASSERT_GT(data.log.size(), 0u);
    for (const auto& r : data.log.records())
        EXPECT_EQ(synthetic_block(r.user.index, spec.blocks), synthetic_block(r.news.index, spec.blocks));
}

TEST(Synthetic, ClickCountWithinThreeSigma) {
    SyntheticSpec spec;  // 200 users, 300 news, 4 blocks
    const double in_pairs = 200.0 * 300.0 / 4.0;
    const double cross_pairs = 200.0 * 300.0 - in_pairs;
    const double p = spec.in_block_probability, q = spec.cross_block_probability;
    const double mean = in_pairs * p + cross_pairs * q;
    const double sd = std::sqrt(in_pairs * p * (1 - p) + cross_pairs * q * (1 - q));
    const auto n = static_cast<double>(generate_synthetic(spec).log.size());
    EXPECT_LE(std::abs(n - mean), 3 * sd) << n << " vs " << mean;
}

TEST(Synthetic, MentionsAndLinksStayInBlock) {
    const auto spec = small_spec();
    const auto data = generate_synthetic(spec);
    for (const auto& doc : data.corpus)
        for (const auto e : doc.entity_set())
            EXPECT_EQ(synthetic_block(e, spec.blocks), synthetic_block(doc.news.index, spec.blocks));
    for (const auto& t : data.kg_triples) {
        const auto h = data.nodes.find_node(NodeKind::Entity, t.head);
        const auto tl = data.nodes.find_node(NodeKind::Entity, t.tail);
        ASSERT_TRUE(h && tl);
        EXPECT_NE(h->index, tl->index);
        EXPECT_EQ(synthetic_block(h->index, spec.blocks), synthetic_block(tl->index, spec.blocks));
    }
}

TEST(Synthetic, BlockOracleBeatsConstantScorer) {
    SyntheticSpec spec;
    const auto data = generate_synthetic(spec);
    const auto tagged = split(data.log, {}, 9);
    const auto users = data.nodes.node_count(NodeKind::User);
    const auto news = data.nodes.node_count(NodeKind::News);
    const auto train = tagged.items_by_user(users, Split::Train);
    const auto test = tagged.items_by_user(users, Split::Test);
    const std::vector<int> ks{10};
    const auto oracle = evaluate_ranking(
        [&](std::uint32_t u, std::vector<double>& s) {
            s.resize(news);
            for (std::size_t n = 0; n < news; ++n)
                s[n] = synthetic_block(n, spec.blocks) == synthetic_block(u, spec.blocks) ? 1.0 : 0.0;
        },
        news, train, test, ks);
    const auto constant = evaluate_ranking(
        [&](std::uint32_t, std::vector<double>& s) { s.assign(news, 0.0); }, news, train, test, ks);
    EXPECT_GT(oracle.recall_at(10), 2.0 * constant.recall_at(10));
    EXPECT_GT(oracle.recall_at(10), 2.0 * oracle.random_recall.front());
}

TEST(Synthetic, SpecValidation) {
    auto s = small_spec();
    s.in_block_probability = 0.01;
    s.cross_block_probability = 0.3;
    EXPECT_THROW(generate_synthetic(s), ConfigError);
    s = small_spec();
    s.in_block_probability = 1.5;
    EXPECT_THROW(generate_synthetic(s), ConfigError);
    s = small_spec();
    s.entities = 5;
    EXPECT_THROW(generate_synthetic(s), ConfigError);
}
