#include "kgperc/graph_store.hpp"

#include <fmt/format.h>

#include "kgperc/errors.hpp"
#include "kgperc/tsv.hpp"

namespace kgperc {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::User: return "user";
        case NodeKind::News: return "news";
        case NodeKind::Entity: return "entity";
    }
    return "?";
}

KnowledgeGraph::KnowledgeGraph() {
    same_news_ = register_relation(relations::kSameNews);
    same_user_ = register_relation(relations::kSameUser);
    clicked_ = register_relation(relations::kClicked);
    mentions_ = register_relation(relations::kMentions);
}

NodeId KnowledgeGraph::register_node(NodeKind kind, std::string_view external_key) {
    auto& reg = registry(kind);
    std::string key(external_key);
    if (auto it = reg.lookup.find(key); it != reg.lookup.end()) return {it->second, kind};
    require_mutable("register_node");
    const auto index = static_cast<std::uint32_t>(reg.keys.size());
    reg.lookup.emplace(key, index);
    reg.keys.push_back(std::move(key));
    reg.adjacency.emplace_back();
    return {index, kind};
}

std::optional<NodeId> KnowledgeGraph::find_node(NodeKind kind,
                                                std::string_view external_key) const {
    const auto& reg = registry(kind);
    if (auto it = reg.lookup.find(std::string(external_key)); it != reg.lookup.end())
        return NodeId{it->second, kind};
    return std::nullopt;
}

const std::string& KnowledgeGraph::key(NodeId node) const {
    require_registered(node);
    return registry(node.kind).keys[node.index];
}

RelationId KnowledgeGraph::register_relation(std::string_view name) {
    std::string label(name);
    if (auto it = relation_lookup_.find(label); it != relation_lookup_.end())
        return {it->second};
    require_mutable("register_relation");
    const auto index = static_cast<std::uint32_t>(relation_names_.size());
    relation_lookup_.emplace(label, index);
    relation_names_.push_back(std::move(label));
    return {index};
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
    if (auto it = relation_lookup_.find(std::string(name)); it != relation_lookup_.end())
        return RelationId{it->second};
    return std::nullopt;
}

const std::string& KnowledgeGraph::relation_name(RelationId relation) const {
    if (relation.index >= relation_names_.size())
        throw ValidationError(fmt::format("unknown relation id {}", relation.index));
    return relation_names_[relation.index];
}

KnowledgeGraph::TripleKey KnowledgeGraph::make_key(NodeId head, RelationId relation,
                                                   NodeId tail) {
    return {static_cast<std::uint8_t>(head.kind), head.index, relation.index,
            static_cast<std::uint8_t>(tail.kind), tail.index};
}

bool KnowledgeGraph::add_triple(NodeId head, RelationId relation, NodeId tail,
                                double confidence, double threshold) {
    require_mutable("add_triple");
    require_registered(head);
    require_registered(tail);
    if (relation.index >= relation_names_.size())
        throw ValidationError(fmt::format("unknown relation id {}", relation.index));
    if (!(confidence >= 0.0 && confidence <= 1.0))
        throw ValidationError(fmt::format("confidence {} outside [0,1]", confidence));
    if ((relation == same_news_ || relation == same_user_) && head == tail)
        throw ValidationError("collaborative relation requires head != tail");

    if (!(confidence > threshold)) return false;
    if (!triple_index_.insert(make_key(head, relation, tail)).second) return false;

    triples_.push_back({head, relation, tail, confidence});
    registry(head.kind).adjacency[head.index].push_back({relation, tail});
    registry(tail.kind).adjacency[tail.index].push_back({relation, head});
    return true;
}

bool KnowledgeGraph::contains(NodeId head, RelationId relation, NodeId tail) const {
    return triple_index_.contains(make_key(head, relation, tail));
}

std::span<const Neighbor> KnowledgeGraph::neighbors(NodeId node) const {
    require_registered(node);
    return registry(node.kind).adjacency[node.index];
}

std::size_t KnowledgeGraph::node_count(NodeKind kind) const {
    return registry(kind).keys.size();
}

std::size_t KnowledgeGraph::total_nodes() const {
    return node_count(NodeKind::User) + node_count(NodeKind::News) +
           node_count(NodeKind::Entity);
}

std::size_t KnowledgeGraph::flat_index(NodeId node) const {
    switch (node.kind) {
        case NodeKind::User: return node.index;
        case NodeKind::News: return node_count(NodeKind::User) + node.index;
        case NodeKind::Entity:
            return node_count(NodeKind::User) + node_count(NodeKind::News) + node.index;
    }
    return 0;
}

NodeId KnowledgeGraph::from_flat(std::size_t flat) const {
    for (auto kind : kAllNodeKinds) {
        const auto n = node_count(kind);
        if (flat < n) return {static_cast<std::uint32_t>(flat), kind};
        flat -= n;
    }
    throw ValidationError("flat node index out of range");
}

void KnowledgeGraph::require_registered(NodeId node) const {
    if (!is_registered(node))
        throw ValidationError(
            fmt::format("unregistered {} node {}", to_string(node.kind), node.index));
}

void KnowledgeGraph::require_mutable(std::string_view what) const {
    if (frozen_) throw ValidationError(fmt::format("{} on a frozen graph", what));
}

std::vector<RawTriple> read_triple_file(const std::filesystem::path& path) {
    std::vector<RawTriple> out;
    tsv::for_each_line(path, [&](std::string_view line, std::size_t number) {
        const auto where = fmt::format("{}:{}", path.string(), number);
        const auto fields = tsv::split(line, '\t');
        if (fields.size() < 3 || fields.size() > 4)
            throw ValidationError(where + ": expected 3 or 4 tab-separated fields");
        RawTriple t{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                    1.0};
        if (fields.size() == 4) t.confidence = tsv::parse_double(fields[3], where);
        if (t.head.empty() || t.relation.empty() || t.tail.empty())
            throw ValidationError(where + ": empty key or relation");
        out.push_back(std::move(t));
    });
    return out;
}

void write_triple_file(const std::filesystem::path& path, std::span<const RawTriple> triples) {
    auto out = tsv::open_for_write(path);
    out << "# head\trelation\ttail\tconfidence\n";
    for (const auto& t : triples)
        out << t.head << '\t' << t.relation << '\t' << t.tail << '\t'
            << fmt::format("{}", t.confidence) << '\n';
}

TripleFileStats ingest_triples(KnowledgeGraph& graph, std::span<const RawTriple> triples,
                               double threshold) {
    TripleFileStats stats;
    for (const auto& raw : triples) {
        ++stats.lines_read;
        if (!(raw.confidence >= 0.0 && raw.confidence <= 1.0))
            throw ValidationError(fmt::format("triple {} {} {}: confidence {} outside [0,1]",
                                              raw.head, raw.relation, raw.tail,
                                              raw.confidence));
        const auto head = graph.register_node(NodeKind::Entity, raw.head);
        const auto tail = graph.register_node(NodeKind::Entity, raw.tail);
        const auto rel = graph.register_relation(raw.relation);
        if (!(raw.confidence > threshold)) {
            ++stats.below_threshold;
            continue;
        }
        if (graph.add_triple(head, rel, tail, raw.confidence, threshold))
            ++stats.accepted;
        else
            ++stats.duplicates;
    }
    return stats;
}

}  // namespace kgperc
