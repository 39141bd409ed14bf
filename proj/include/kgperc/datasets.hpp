#pragma once
// Dataset adapters and the synthetic block-model generator.
//
// A Dataset keeps string keys for every node (registered in a node-only
// KnowledgeGraph, so indices are dense per kind), the click log, the
// entity-annotated corpus, raw knowledge triples (before confidence gating)
// and the category assignments.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgperc/augmentation.hpp"
#include "kgperc/context.hpp"
#include "kgperc/graph_store.hpp"
#include "kgperc/interactions.hpp"

namespace kgperc {

// Every exclusion an adapter makes is counted here.
struct AdapterStats {
    std::size_t lines = 0;
    std::size_t duplicate_clicks = 0;
    std::size_t users_below_min_clicks = 0;
    std::size_t clicks_dropped_with_users = 0;
    std::size_t ratings_below_threshold = 0;
    std::size_t news_registered_on_the_fly = 0;
    std::size_t entities_registered_on_the_fly = 0;
};

struct Dataset {
    KnowledgeGraph nodes;  // registry only; holds no triples
    InteractionLog log;
    Corpus corpus;
    std::vector<RawTriple> kg_triples;
    CategoryIndex categories;
    CategoryMap entity_categories;
    CategoryMap news_categories;
    AdapterStats stats;
};

// Native format, as written by write_native:
//   interactions.tsv  user<TAB>news<TAB>timestamp[<TAB>split]
//   corpus.tsv        news<TAB>title keys<TAB>body keys<TAB>key:category,...[<TAB>news category]
//   triples.tsv       head<TAB>relation<TAB>tail[<TAB>confidence]      (optional)
//   categories.tsv    entity<TAB>category                              (optional)
Dataset load_native(const std::filesystem::path& dir);
void write_native(const Dataset& data, const std::filesystem::path& dir);

inline constexpr int kMindMinClicks = 5;

// behaviors: user<TAB>timestamp<TAB>space-separated news keys
// news:      corpus.tsv layout with a trailing news category column
// Users with fewer than `min_clicks` distinct clicks are dropped.
Dataset load_mind_style(const std::filesystem::path& behaviors_path,
                        const std::filesystem::path& news_path, int min_clicks = kMindMinClicks);

// ratings: user::item::rating::timestamp; ratings >= threshold become clicks.
// movies (optional): item::title::genre1|genre2 ; the first genre becomes the
// item category. Items carry no entity annotations.
Dataset load_movielens_style(const std::filesystem::path& ratings_path,
                             double positive_threshold = 4.0,
                             const std::filesystem::path& movies_path = {});

struct SyntheticSpec {
    std::size_t users = 200;
    std::size_t news = 300;
    std::size_t entities = 120;
    std::size_t blocks = 4;
    double in_block_probability = 0.3;
    double cross_block_probability = 0.01;
    std::uint64_t seed = 1;
    int title_mentions = 1;
    int body_mentions = 3;
    int kg_links_per_entity = 2;

    void validate() const;
};

// Blocks are assigned round-robin: user u, news n and entity e belong to
// blocks u % B, n % B and e % B. Each (user, news) pair is clicked with the
// in-block or cross-block probability.
Dataset generate_synthetic(const SyntheticSpec& spec);

std::size_t synthetic_block(std::size_t index, std::size_t blocks);

}  // namespace kgperc
