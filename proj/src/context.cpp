#include "kgperc/context.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "kgperc/errors.hpp"

namespace kgperc {

std::uint32_t CategoryIndex::get_or_add(std::string_view name) {
    if (name.empty()) return 0;
    std::string key(name);
    if (auto it = lookup_.find(key); it != lookup_.end()) return it->second;
    const auto index = static_cast<std::uint32_t>(names_.size());
    lookup_.emplace(key, index);
    names_.push_back(std::move(key));
    return index;
}

std::optional<std::uint32_t> CategoryIndex::find(std::string_view name) const {
    if (name.empty()) return 0u;
    if (auto it = lookup_.find(std::string(name)); it != lookup_.end()) return it->second;
    return std::nullopt;
}

ContextMap extract_context(const Corpus& corpus, const CategoryMap& entity_categories) {
    std::map<std::uint32_t, std::uint64_t> occurrences;
    std::map<std::uint32_t, bool> in_title;
    for (const auto& doc : corpus) {
        for (const auto& [entity, count] : doc.occurrences) occurrences[entity] += count;
        for (const auto& e : doc.title_entities) in_title[e.index] = true;
        for (const auto& e : doc.body_entities) in_title.try_emplace(e.index, false);
    }

    ContextMap out;
    for (const auto& [entity, count] : occurrences) {
        if (count == 0) continue;
        EntityContext ctx;
        ctx.position = in_title[entity] ? 1 : 2;
        ctx.frequency = static_cast<int>(std::min<std::uint64_t>(count, kMaxFrequency));
        if (auto it = entity_categories.find(entity); it != entity_categories.end())
            ctx.category = static_cast<int>(it->second);
        out.emplace(entity, ctx);
    }
    return out;
}

ContextMap extract_news_context(const Corpus& corpus, const CategoryMap& news_categories) {
    ContextMap out;
    for (const auto& doc : corpus) {
        std::uint64_t mentions = 0;
        for (const auto& [entity, count] : doc.occurrences) mentions += count;
        EntityContext ctx;
        ctx.position = doc.title_entities.empty() ? 2 : 1;
        ctx.frequency = static_cast<int>(std::clamp<std::uint64_t>(mentions, 1, kMaxFrequency));
        if (auto it = news_categories.find(doc.news.index); it != news_categories.end())
            ctx.category = static_cast<int>(it->second);
        out[doc.news.index] = ctx;
    }
    return out;
}

NodeContexts assign_contexts(const KnowledgeGraph& graph, const ContextMap& entity_context,
                             const ContextMap& news_context) {
    NodeContexts out(graph.total_nodes());
    auto place = [&](const ContextMap& contexts, NodeKind kind) {
        for (const auto& [index, ctx] : contexts) {
            const NodeId node{index, kind};
            if (!graph.is_registered(node))
                throw ValidationError(
                    fmt::format("context for unregistered {} {}", to_string(kind), index));
            out[graph.flat_index(node)] = ctx;
        }
    };
    place(entity_context, NodeKind::Entity);
    place(news_context, NodeKind::News);
    return out;
}

ContextTables ContextTables::zeros(Eigen::Index dim, std::size_t categories) {
    if (categories == 0) throw ConfigError("category table needs at least the unknown row");
    return {Eigen::MatrixXd::Zero(dim, kPositionClasses),
            Eigen::MatrixXd::Zero(dim, kMaxFrequency),
            Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(categories))};
}

void validate_context(const EntityContext& context, const ContextTables& tables) {
    if (context.position < 1 || context.position > tables.position.cols())
        throw ValidationError(fmt::format("position class {} out of range", context.position));
    if (context.frequency < 1 || context.frequency > tables.frequency.cols())
        throw ValidationError(fmt::format("frequency {} out of range", context.frequency));
    if (context.category < 0 || context.category >= tables.category.cols())
        throw ValidationError(fmt::format("category {} out of range", context.category));
}

Eigen::VectorXd apply_context(std::span<const double> e_p_star,
                              const std::optional<EntityContext>& context,
                              const ContextTables& tables) {
    Eigen::VectorXd out =
        Eigen::Map<const Eigen::VectorXd>(e_p_star.data(), static_cast<Eigen::Index>(e_p_star.size()));
    if (!context) return out;
    if (out.size() != tables.dimension())
        throw ValidationError(fmt::format("apply_context: representation has {} dims, tables {}",
                                          out.size(), tables.dimension()));
    validate_context(*context, tables);
    out += tables.position.col(context->position - 1);
    out += tables.frequency.col(context->frequency - 1);
    out += tables.category.col(context->category);
    return out;
}

Eigen::MatrixXd apply_context_all(const Eigen::MatrixXd& propagated,
                                  const NodeContexts& contexts, const ContextTables& tables) {
    if (static_cast<std::size_t>(propagated.cols()) != contexts.size())
        throw ValidationError("apply_context_all: context count does not match node count");
    if (propagated.rows() != tables.dimension())
        throw ValidationError(fmt::format("apply_context: representation has {} dims, tables {}",
                                          propagated.rows(), tables.dimension()));
    Eigen::MatrixXd out = propagated;
    for (std::size_t v = 0; v < contexts.size(); ++v) {
        const auto& ctx = contexts[v];
        if (!ctx) continue;
        validate_context(*ctx, tables);
        auto col = out.col(static_cast<Eigen::Index>(v));
        col += tables.position.col(ctx->position - 1);
        col += tables.frequency.col(ctx->frequency - 1);
        col += tables.category.col(ctx->category);
    }
    return out;
}

}  // namespace kgperc
