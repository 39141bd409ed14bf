#pragma once
// Collaborative relation mining: SameNews (entity co-occurrence within a
// document) and SameUser (entities reachable from news a common user clicked).

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "kgperc/graph_store.hpp"

namespace kgperc {

class InteractionLog;

struct NewsDocument {
    NodeId news;
    // Distinct entities, in first-mention order.
    std::vector<NodeId> title_entities;
    std::vector<NodeId> body_entities;
    // Mentions of each entity within this document (title + body), keyed by
    // entity index. Every listed entity has a count >= 1.
    std::map<std::uint32_t, std::uint32_t> occurrences;

    // Builds a document from raw mention lists, which may contain repeats.
    static NewsDocument from_mentions(NodeId news, std::span<const NodeId> title_mentions,
                                      std::span<const NodeId> body_mentions);

    // Sorted, distinct union of title and body entity indices.
    std::vector<std::uint32_t> entity_set() const;
};

using Corpus = std::vector<NewsDocument>;

inline constexpr std::uint32_t kDefaultMinCooccurrence = 2;
inline constexpr std::uint32_t kDefaultMinCommonUsers = 2;

// One (a, SameNews, b) per unordered entity pair co-occurring in at least
// `min_count` distinct documents, sorted by (head index, tail index).
std::vector<Triple> mine_same_news(const KnowledgeGraph& graph, const Corpus& corpus,
                                   std::uint32_t min_count = kDefaultMinCooccurrence);

// One (a, SameUser, b) per unordered entity pair clicked (through news) by at
// least `min_users` distinct users. Only records tagged Train are used unless
// `training_only` is false.
std::vector<Triple> mine_same_user(const KnowledgeGraph& graph, const InteractionLog& log,
                                   const Corpus& corpus,
                                   std::uint32_t min_users = kDefaultMinCommonUsers,
                                   bool training_only = true);

// Inserts triples into a graph still under construction. Duplicates are
// no-ops. Returns the number of newly stored triples.
std::size_t augment(KnowledgeGraph& graph, std::span<const Triple> triples);

}  // namespace kgperc
