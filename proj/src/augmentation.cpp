#include "kgperc/augmentation.hpp"

#include <algorithm>
#include <unordered_map>

#include "kgperc/errors.hpp"
#include "kgperc/interactions.hpp"

namespace kgperc {
namespace {

// Key packs (lower index << 32 | higher index).
using PairCounts = std::unordered_map<std::uint64_t, std::uint32_t>;

// Adds one to every unordered pair of a sorted, distinct set.
void count_pairs(const std::vector<std::uint32_t>& sorted_set, PairCounts& counts) {
    for (std::size_t i = 0; i < sorted_set.size(); ++i)
        for (std::size_t j = i + 1; j < sorted_set.size(); ++j)
            ++counts[(std::uint64_t{sorted_set[i]} << 32) | sorted_set[j]];
}

std::vector<Triple> emit(const PairCounts& counts, std::uint32_t threshold,
                         RelationId relation) {
    std::vector<std::uint64_t> keys;
    for (const auto& [key, count] : counts)
        if (count >= threshold) keys.push_back(key);
    std::sort(keys.begin(), keys.end());

    std::vector<Triple> out;
    out.reserve(keys.size());
    for (const auto key : keys) {
        const auto head = static_cast<std::uint32_t>(key >> 32);
        const auto tail = static_cast<std::uint32_t>(key & 0xffffffffu);
        out.push_back({{head, NodeKind::Entity}, relation, {tail, NodeKind::Entity}, 1.0});
    }
    return out;
}

void require_entities(const KnowledgeGraph& graph, const NewsDocument& doc) {
    for (const auto* list : {&doc.title_entities, &doc.body_entities})
        for (const auto& e : *list)
            if (e.kind != NodeKind::Entity || !graph.is_registered(e))
                throw ValidationError("document " + graph.key(doc.news) +
                                      " references an unregistered entity");
}

}  // namespace

NewsDocument NewsDocument::from_mentions(NodeId news, std::span<const NodeId> title_mentions,
                                         std::span<const NodeId> body_mentions) {
    NewsDocument doc;
    doc.news = news;
    auto collect = [&](std::span<const NodeId> mentions, std::vector<NodeId>& distinct) {
        for (const auto& e : mentions) {
            if (e.kind != NodeKind::Entity)
                throw ValidationError("document mentions a non-entity node");
            if (std::find(distinct.begin(), distinct.end(), e) == distinct.end())
                distinct.push_back(e);
            ++doc.occurrences[e.index];
        }
    };
    collect(title_mentions, doc.title_entities);
    collect(body_mentions, doc.body_entities);
    return doc;
}

std::vector<std::uint32_t> NewsDocument::entity_set() const {
    std::vector<std::uint32_t> out;
    out.reserve(title_entities.size() + body_entities.size());
    for (const auto& e : title_entities) out.push_back(e.index);
    for (const auto& e : body_entities) out.push_back(e.index);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Triple> mine_same_news(const KnowledgeGraph& graph, const Corpus& corpus,
                                   std::uint32_t min_count) {
    if (min_count == 0) throw ConfigError("min_count must be positive");
    PairCounts counts;
    for (const auto& doc : corpus) {
        require_entities(graph, doc);
        count_pairs(doc.entity_set(), counts);
    }
    return emit(counts, min_count, graph.same_news());
}

std::vector<Triple> mine_same_user(const KnowledgeGraph& graph, const InteractionLog& log,
                                   const Corpus& corpus, std::uint32_t min_users,
                                   bool training_only) {
    if (min_users == 0) throw ConfigError("min_users must be positive");

    std::unordered_map<std::uint32_t, const NewsDocument*> doc_by_news;
    for (const auto& doc : corpus) {
        require_entities(graph, doc);
        doc_by_news.emplace(doc.news.index, &doc);
    }

    // user index -> entities reachable through that user's clicked news
    std::map<std::uint32_t, std::vector<std::uint32_t>> clicked_entities;
    for (const auto& r : log.records()) {
        if (!graph.is_registered(r.user) || !graph.is_registered(r.news))
            throw ValidationError("interaction references an unregistered node");
        if (training_only && (r.split == Split::Validation || r.split == Split::Test)) continue;
        auto it = doc_by_news.find(r.news.index);
        if (it == doc_by_news.end()) continue;
        auto& bucket = clicked_entities[r.user.index];
        const auto entities = it->second->entity_set();
        bucket.insert(bucket.end(), entities.begin(), entities.end());
    }

    PairCounts counts;
    for (auto& [user, entities] : clicked_entities) {
        std::sort(entities.begin(), entities.end());
        entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
        count_pairs(entities, counts);
    }
    return emit(counts, min_users, graph.same_user());
}

std::size_t augment(KnowledgeGraph& graph, std::span<const Triple> triples) {
    if (graph.frozen()) throw ValidationError("cannot augment a frozen graph");
    std::size_t added = 0;
    for (const auto& t : triples) {
        if (graph.add_triple(t.head, t.relation, t.tail, t.confidence, 0.0)) ++added;
    }
    return added;
}

}  // namespace kgperc
