#pragma once
// Heterogeneous knowledge graph over users, news items and knowledge entities.
//
// - Nodes are registered per kind and get dense per-kind indices.
// - Relations are string labels with dense indices; four are reserved.
// - Every stored triple is indexed from both endpoints, so adjacency is
//   undirected for propagation purposes.
// - Once frozen, the graph is immutable and safe for concurrent reads.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace kgperc {

enum class NodeKind : std::uint8_t { User = 0, News = 1, Entity = 2 };

inline constexpr std::array<NodeKind, 3> kAllNodeKinds = {NodeKind::User, NodeKind::News,
                                                          NodeKind::Entity};

std::string_view to_string(NodeKind kind);

struct NodeId {
    std::uint32_t index = 0;
    NodeKind kind = NodeKind::Entity;

    auto operator<=>(const NodeId&) const = default;
};

struct RelationId {
    std::uint32_t index = 0;

    auto operator<=>(const RelationId&) const = default;
};

struct Triple {
    NodeId head;
    RelationId relation;
    NodeId tail;
    double confidence = 1.0;
};

struct Neighbor {
    RelationId relation;
    NodeId node;

    bool operator==(const Neighbor&) const = default;
};

namespace relations {
inline constexpr std::string_view kSameNews = "SameNews";
inline constexpr std::string_view kSameUser = "SameUser";
inline constexpr std::string_view kClicked = "Clicked";
inline constexpr std::string_view kMentions = "Mentions";
}  // namespace relations

inline constexpr double kDefaultConfidenceThreshold = 0.8;

class KnowledgeGraph {
public:
    // Registers SameNews, SameUser, Clicked and Mentions.
    KnowledgeGraph();

    // Idempotent: the same (kind, key) always maps to the same NodeId.
    NodeId register_node(NodeKind kind, std::string_view external_key);
    std::optional<NodeId> find_node(NodeKind kind, std::string_view external_key) const;
    const std::string& key(NodeId node) const;

    RelationId register_relation(std::string_view name);
    std::optional<RelationId> find_relation(std::string_view name) const;
    const std::string& relation_name(RelationId relation) const;
    std::size_t relation_count() const { return relation_names_.size(); }

    RelationId same_news() const { return same_news_; }
    RelationId same_user() const { return same_user_; }
    RelationId clicked() const { return clicked_; }
    RelationId mentions() const { return mentions_; }

    // Stores the triple iff confidence > threshold and it is not already
    // present. Returns whether a new triple was stored.
    bool add_triple(NodeId head, RelationId relation, NodeId tail, double confidence = 1.0,
                    double threshold = kDefaultConfidenceThreshold);
    bool add_triple(const Triple& triple, double threshold = kDefaultConfidenceThreshold) {
        return add_triple(triple.head, triple.relation, triple.tail, triple.confidence,
                          threshold);
    }
    bool contains(NodeId head, RelationId relation, NodeId tail) const;

    std::span<const Neighbor> neighbors(NodeId node) const;
    std::size_t degree(NodeId node) const { return neighbors(node).size(); }

    const std::vector<Triple>& triples() const { return triples_; }
    std::size_t node_count(NodeKind kind) const;
    std::size_t total_nodes() const;
    bool is_registered(NodeId node) const { return node.index < node_count(node.kind); }

    // Flat index over all nodes: users first, then news, then entities.
    // Stable only once the graph is frozen.
    std::size_t flat_index(NodeId node) const;
    NodeId from_flat(std::size_t flat) const;

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

private:
    struct Registry {
        std::vector<std::string> keys;
        std::unordered_map<std::string, std::uint32_t> lookup;
        std::vector<std::vector<Neighbor>> adjacency;
    };

    using TripleKey = std::tuple<std::uint8_t, std::uint32_t, std::uint32_t, std::uint8_t,
                                 std::uint32_t>;
    static TripleKey make_key(NodeId head, RelationId relation, NodeId tail);

    void require_registered(NodeId node) const;
    void require_mutable(std::string_view what) const;
    Registry& registry(NodeKind kind) { return registries_[static_cast<std::size_t>(kind)]; }
    const Registry& registry(NodeKind kind) const {
        return registries_[static_cast<std::size_t>(kind)];
    }

    std::array<Registry, 3> registries_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, std::uint32_t> relation_lookup_;
    std::vector<Triple> triples_;
    std::set<TripleKey> triple_index_;
    RelationId same_news_, same_user_, clicked_, mentions_;
    bool frozen_ = false;
};

// Reads `head<TAB>relation<TAB>tail[<TAB>confidence]` lines. Keys are entity
// keys; unseen ones are registered. Lines starting with '#' are skipped.
struct TripleFileStats {
    std::size_t lines_read = 0;
    std::size_t accepted = 0;
    std::size_t below_threshold = 0;
    std::size_t duplicates = 0;
};

struct RawTriple {
    std::string head;
    std::string relation;
    std::string tail;
    double confidence = 1.0;
};

std::vector<RawTriple> read_triple_file(const std::filesystem::path& path);
void write_triple_file(const std::filesystem::path& path, std::span<const RawTriple> triples);

TripleFileStats ingest_triples(KnowledgeGraph& graph, std::span<const RawTriple> triples,
                               double threshold = kDefaultConfidenceThreshold);

}  // namespace kgperc
