#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "kgperc/graph_store.hpp"

namespace kgperc {

enum class Split : std::uint8_t { Unassigned = 0, Train, Validation, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Interaction {
    NodeId user;
    NodeId news;
    std::int64_t timestamp = 0;
    Split split = Split::Unassigned;
};

// User -> news click records. (user, news) pairs are unique.
class InteractionLog {
public:
    // Returns false (and stores nothing) if the pair is already present.
    bool add(NodeId user, NodeId news, std::int64_t timestamp = 0);

    const std::vector<Interaction>& records() const { return records_; }
    std::vector<Interaction>& records() { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    // Per-user sorted news indices for records tagged `split`; indexed by user
    // index, sized to `user_count`.
    std::vector<std::vector<std::uint32_t>> items_by_user(std::size_t user_count,
                                                          Split split) const;

    std::size_t count(Split split) const;

private:
    std::vector<Interaction> records_;
    std::set<std::pair<std::uint32_t, std::uint32_t>> pairs_;
};

}  // namespace kgperc
