#include "kgperc/interactions.hpp"

#include <algorithm>
#include <string>

#include "kgperc/errors.hpp"

namespace kgperc {

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Unassigned: return "none";
        case Split::Train: return "train";
        case Split::Validation: return "valid";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "valid") return Split::Validation;
    if (text == "test") return Split::Test;
    if (text == "none") return Split::Unassigned;
    throw ValidationError("unknown split tag '" + std::string(text) + "'");
}

bool InteractionLog::add(NodeId user, NodeId news, std::int64_t timestamp) {
    if (user.kind != NodeKind::User || news.kind != NodeKind::News)
        throw ValidationError("interaction must link a user to a news item");
    if (!pairs_.emplace(user.index, news.index).second) return false;
    records_.push_back({user, news, timestamp, Split::Unassigned});
    return true;
}

std::vector<std::vector<std::uint32_t>> InteractionLog::items_by_user(std::size_t user_count,
                                                                      Split split) const {
    std::vector<std::vector<std::uint32_t>> out(user_count);
    for (const auto& r : records_) {
        if (r.split != split) continue;
        if (r.user.index >= user_count) throw ValidationError("interaction user out of range");
        out[r.user.index].push_back(r.news.index);
    }
    for (auto& items : out) std::sort(items.begin(), items.end());
    return out;
}

std::size_t InteractionLog::count(Split split) const {
    return static_cast<std::size_t>(std::count_if(
        records_.begin(), records_.end(), [&](const auto& r) { return r.split == split; }));
}

}  // namespace kgperc
