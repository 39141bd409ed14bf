#pragma once
// Contextual encodings added to propagated representations:
//   e* = e^{p*} + V1[pn] + V2[fn] + V3[tn]
// pn: 1 = appears in some title, 2 = body only.
// fn: corpus-wide mention count capped at 30 (rows 1..30).
// tn: category index, 0 = unknown.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "kgperc/augmentation.hpp"
#include "kgperc/graph_store.hpp"

namespace kgperc {

inline constexpr int kPositionClasses = 2;
inline constexpr int kMaxFrequency = 30;

struct EntityContext {
    int position = 2;
    int frequency = 1;
    int category = 0;

    bool operator==(const EntityContext&) const = default;
};

// Dense category names in first-seen order; index 0 is reserved for unknown.
class CategoryIndex {
public:
    CategoryIndex() : names_{""} {}

    std::uint32_t get_or_add(std::string_view name);
    std::optional<std::uint32_t> find(std::string_view name) const;
    const std::string& name(std::uint32_t index) const { return names_.at(index); }
    // Including the unknown slot.
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> lookup_;
};

// Keyed by entity (or news) index.
using CategoryMap = std::map<std::uint32_t, std::uint32_t>;
using ContextMap = std::map<std::uint32_t, EntityContext>;

// Entities that never occur in the corpus get no entry.
ContextMap extract_context(const Corpus& corpus, const CategoryMap& entity_categories);

// News items take pn = 1 when they have any title entity, fn = their total
// entity mentions clamped to 1..30, and tn from their own category.
ContextMap extract_news_context(const Corpus& corpus, const CategoryMap& news_categories);

// Flat-indexed context per node; users and context-free entities are empty.
using NodeContexts = std::vector<std::optional<EntityContext>>;
NodeContexts assign_contexts(const KnowledgeGraph& graph, const ContextMap& entity_context,
                             const ContextMap& news_context);

struct ContextTables {
    Eigen::MatrixXd position;   // D x 2, column pn-1
    Eigen::MatrixXd frequency;  // D x 30, column fn-1
    Eigen::MatrixXd category;   // D x C, column tn

    static ContextTables zeros(Eigen::Index dim, std::size_t categories);
    Eigen::Index dimension() const { return position.rows(); }
};

void validate_context(const EntityContext& context, const ContextTables& tables);

Eigen::VectorXd apply_context(std::span<const double> e_p_star,
                              const std::optional<EntityContext>& context,
                              const ContextTables& tables);

// Column-wise apply_context over a D x N matrix.
Eigen::MatrixXd apply_context_all(const Eigen::MatrixXd& propagated,
                                  const NodeContexts& contexts, const ContextTables& tables);

}  // namespace kgperc
