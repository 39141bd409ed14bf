#include "kgperc/datasets.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kgperc/errors.hpp"
#include "kgperc/tsv.hpp"

namespace kgperc {
namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
    return fmt::format("{}:{}", path.string(), line);
}

std::vector<NodeId> register_entities(Dataset& data, const std::vector<std::string>& keys) {
    std::vector<NodeId> out;
    out.reserve(keys.size());
    for (const auto& k : keys) {
        const auto before = data.nodes.node_count(NodeKind::Entity);
        out.push_back(data.nodes.register_node(NodeKind::Entity, k));
        if (data.nodes.node_count(NodeKind::Entity) > before)
            ++data.stats.entities_registered_on_the_fly;
    }
    return out;
}

// news<TAB>title<TAB>body<TAB>key:category,...[<TAB>news category]
void parse_corpus_line(Dataset& data, std::string_view line, const std::string& loc,
                       std::map<std::uint32_t, NewsDocument>& docs) {
    const auto fields = tsv::split(line, '\t');
    if (fields.size() < 3 || fields.size() > 5)
        throw ValidationError(loc + ": expected 3 to 5 tab-separated fields");
    if (fields[0].empty()) throw ValidationError(loc + ": empty news key");
    const auto news = data.nodes.register_node(NodeKind::News, fields[0]);
    if (docs.contains(news.index))
        throw ValidationError(loc + ": duplicate news entry '" + std::string(fields[0]) + "'");

    const auto title = register_entities(data, tsv::split_list(fields[1], ','));
    const auto body = register_entities(data, tsv::split_list(fields[2], ','));
    docs.emplace(news.index, NewsDocument::from_mentions(news, title, body));

    if (fields.size() >= 4) {
        for (const auto& pair : tsv::split_list(fields[3], ',')) {
            const auto colon = pair.rfind(':');
            if (colon == std::string::npos || colon == 0)
                throw ValidationError(loc + ": category entry '" + pair + "' is not key:category");
            const auto entity = data.nodes.register_node(NodeKind::Entity, pair.substr(0, colon));
            data.entity_categories[entity.index] =
                data.categories.get_or_add(pair.substr(colon + 1));
        }
    }
    if (fields.size() == 5 && !fields[4].empty())
        data.news_categories[news.index] = data.categories.get_or_add(fields[4]);
}

// Every news item gets a document (possibly empty), ordered by news index.
void finalize_corpus(Dataset& data, std::map<std::uint32_t, NewsDocument>& docs) {
    data.corpus.clear();
    for (std::uint32_t n = 0; n < data.nodes.node_count(NodeKind::News); ++n) {
        auto it = docs.find(n);
        if (it != docs.end())
            data.corpus.push_back(std::move(it->second));
        else
            data.corpus.push_back(NewsDocument::from_mentions({n, NodeKind::News}, {}, {}));
    }
}

void read_categories_file(Dataset& data, const std::filesystem::path& path) {
    tsv::for_each_line(path, [&](std::string_view line, std::size_t number) {
        const auto fields = tsv::split(line, '\t');
        if (fields.size() != 2 || fields[0].empty())
            throw ValidationError(where(path, number) + ": expected entity<TAB>category");
        const auto entity = data.nodes.register_node(NodeKind::Entity, fields[0]);
        if (!fields[1].empty())
            data.entity_categories[entity.index] = data.categories.get_or_add(fields[1]);
    });
}

}  // namespace

Dataset load_native(const std::filesystem::path& dir) {
    Dataset data;
    const auto interactions = dir / "interactions.tsv";
    const auto corpus = dir / "corpus.tsv";
    if (!std::filesystem::exists(interactions) || !std::filesystem::exists(corpus))
        throw ValidationError("dataset directory " + dir.string() +
                              " needs interactions.tsv and corpus.tsv");

    if (std::filesystem::exists(dir / "categories.tsv"))
        read_categories_file(data, dir / "categories.tsv");

    std::map<std::uint32_t, NewsDocument> docs;
    tsv::for_each_line(corpus, [&](std::string_view line, std::size_t number) {
        parse_corpus_line(data, line, where(corpus, number), docs);
    });

    tsv::for_each_line(interactions, [&](std::string_view line, std::size_t number) {
        ++data.stats.lines;
        const auto loc = where(interactions, number);
        const auto fields = tsv::split(line, '\t');
        if (fields.size() < 3 || fields.size() > 4)
            throw ValidationError(loc + ": expected user<TAB>news<TAB>timestamp[<TAB>split]");
        if (fields[0].empty() || fields[1].empty()) throw ValidationError(loc + ": empty key");
        const auto user = data.nodes.register_node(NodeKind::User, fields[0]);
        const auto before = data.nodes.node_count(NodeKind::News);
        const auto news = data.nodes.register_node(NodeKind::News, fields[1]);
        if (data.nodes.node_count(NodeKind::News) > before) ++data.stats.news_registered_on_the_fly;
        const auto ts = tsv::parse_int(fields[2], loc);
        if (!data.log.add(user, news, ts)) {
            ++data.stats.duplicate_clicks;
            return;
        }
        if (fields.size() == 4) data.log.records().back().split = parse_split(fields[3]);
    });
    if (data.log.empty()) throw ValidationError("no interactions in " + interactions.string());

    if (std::filesystem::exists(dir / "triples.tsv"))
        data.kg_triples = read_triple_file(dir / "triples.tsv");
    for (const auto& t : data.kg_triples) {
        data.nodes.register_node(NodeKind::Entity, t.head);
        data.nodes.register_node(NodeKind::Entity, t.tail);
    }
    finalize_corpus(data, docs);
    return data;
}

void write_native(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& nodes = data.nodes;

    {
        auto out = tsv::open_for_write(dir / "categories.tsv");
        out << "# entity\tcategory\n";
        for (std::uint32_t e = 0; e < nodes.node_count(NodeKind::Entity); ++e) {
            const auto it = data.entity_categories.find(e);
            out << nodes.key({e, NodeKind::Entity}) << '\t'
                << (it == data.entity_categories.end() ? "" : data.categories.name(it->second))
                << '\n';
        }
    }
    {
        auto out = tsv::open_for_write(dir / "corpus.tsv");
        out << "# news\ttitle entities\tbody entities\tentity categories\tnews category\n";
        for (const auto& doc : data.corpus) {
            // Repeats reproduce the per-document occurrence counts on reload.
            std::vector<std::string> title, body;
            for (const auto& e : doc.title_entities) title.push_back(nodes.key(e));
            for (const auto& e : doc.body_entities) body.push_back(nodes.key(e));
            for (const auto& [entity, count] : doc.occurrences) {
                const NodeId id{entity, NodeKind::Entity};
                const bool in_title = std::find(doc.title_entities.begin(),
                                                doc.title_entities.end(),
                                                id) != doc.title_entities.end();
                const bool in_body = std::find(doc.body_entities.begin(), doc.body_entities.end(),
                                               id) != doc.body_entities.end();
                const auto listed = static_cast<std::uint32_t>(in_title) + in_body;
                for (auto i = listed; i < count; ++i)
                    (in_body ? body : title).push_back(nodes.key(id));
            }
            const auto news_cat = data.news_categories.find(doc.news.index);
            out << nodes.key(doc.news) << '\t' << fmt::format("{}", fmt::join(title, ",")) << '\t'
                << fmt::format("{}", fmt::join(body, ",")) << "\t\t"
                << (news_cat == data.news_categories.end() ? ""
                                                           : data.categories.name(news_cat->second))
                << '\n';
        }
    }
    {
        auto out = tsv::open_for_write(dir / "interactions.tsv");
        out << "# user\tnews\ttimestamp\tsplit\n";
        for (const auto& r : data.log.records())
            out << nodes.key(r.user) << '\t' << nodes.key(r.news) << '\t' << r.timestamp << '\t'
                << to_string(r.split) << '\n';
    }
    write_triple_file(dir / "triples.tsv", data.kg_triples);
}

Dataset load_mind_style(const std::filesystem::path& behaviors_path,
                        const std::filesystem::path& news_path, int min_clicks) {
    Dataset data;
    std::map<std::uint32_t, NewsDocument> docs;
    tsv::for_each_line(news_path, [&](std::string_view line, std::size_t number) {
        parse_corpus_line(data, line, where(news_path, number), docs);
    });

    struct Click {
        std::string news;
        std::int64_t timestamp;
    };
    std::vector<std::pair<std::string, std::vector<Click>>> histories;
    std::map<std::string, std::size_t> history_index;
    tsv::for_each_line(behaviors_path, [&](std::string_view line, std::size_t number) {
        ++data.stats.lines;
        const auto loc = where(behaviors_path, number);
        const auto fields = tsv::split(line, '\t');
        if (fields.size() != 3 || fields[0].empty())
            throw ValidationError(loc + ": expected user<TAB>timestamp<TAB>news keys");
        const auto ts = tsv::parse_int(fields[1], loc);
        auto [it, inserted] = history_index.try_emplace(std::string(fields[0]), histories.size());
        if (inserted) histories.push_back({std::string(fields[0]), {}});
        for (auto& key : tsv::split_list(fields[2], ' '))
            histories[it->second].second.push_back({std::move(key), ts});
    });

    for (const auto& [user_key, clicks] : histories) {
        std::set<std::string> distinct;
        for (const auto& c : clicks) distinct.insert(c.news);
        if (static_cast<int>(distinct.size()) < min_clicks) {
            ++data.stats.users_below_min_clicks;
            data.stats.clicks_dropped_with_users += clicks.size();
            continue;
        }
        const auto user = data.nodes.register_node(NodeKind::User, user_key);
        for (const auto& c : clicks) {
            const auto before = data.nodes.node_count(NodeKind::News);
            const auto news = data.nodes.register_node(NodeKind::News, c.news);
            if (data.nodes.node_count(NodeKind::News) > before)
                ++data.stats.news_registered_on_the_fly;
            if (!data.log.add(user, news, c.timestamp)) ++data.stats.duplicate_clicks;
        }
    }
    if (data.log.empty()) throw ValidationError("no interactions in " + behaviors_path.string());
    finalize_corpus(data, docs);
    spdlog::info("MIND-style load: {} users kept, {} dropped (< {} clicks), {} clicks",
                 data.nodes.node_count(NodeKind::User), data.stats.users_below_min_clicks,
                 min_clicks, data.log.size());
    return data;
}

Dataset load_movielens_style(const std::filesystem::path& ratings_path, double positive_threshold,
                             const std::filesystem::path& movies_path) {
    Dataset data;
    tsv::for_each_line(ratings_path, [&](std::string_view line, std::size_t number) {
        ++data.stats.lines;
        const auto loc = where(ratings_path, number);
        std::vector<std::string_view> fields;
        for (std::size_t start = 0;;) {
            const auto pos = line.find("::", start);
            fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 2;
        }
        if (fields.size() != 4 || fields[0].empty() || fields[1].empty())
            throw ValidationError(loc + ": expected user::item::rating::timestamp");
        const double rating = tsv::parse_double(fields[2], loc);
        const auto ts = tsv::parse_int(fields[3], loc);
        if (rating < positive_threshold) {
            ++data.stats.ratings_below_threshold;
            return;
        }
        const auto user = data.nodes.register_node(NodeKind::User, fields[0]);
        const auto item = data.nodes.register_node(NodeKind::News, fields[1]);
        if (!data.log.add(user, item, ts)) ++data.stats.duplicate_clicks;
    });
    if (data.log.empty()) throw ValidationError("no interactions in " + ratings_path.string());

    if (!movies_path.empty()) {
        tsv::for_each_line(movies_path, [&](std::string_view line, std::size_t number) {
            const auto loc = where(movies_path, number);
            const auto first = line.find("::");
            const auto last = line.rfind("::");
            if (first == std::string_view::npos || first == last)
                throw ValidationError(loc + ": expected item::title::genres");
            const auto item = data.nodes.find_node(NodeKind::News, line.substr(0, first));
            if (!item) return;  // item without positive ratings
            const auto genres = tsv::split_list(line.substr(last + 2), '|');
            if (!genres.empty())
                data.news_categories[item->index] = data.categories.get_or_add(genres.front());
        });
    }
    std::map<std::uint32_t, NewsDocument> docs;
    finalize_corpus(data, docs);
    return data;
}

void SyntheticSpec::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(in_block_probability) || !prob(cross_block_probability))
        throw ConfigError("synthetic click probabilities must lie in [0, 1]");
    if (!(in_block_probability > cross_block_probability))
        throw ConfigError("in-block click probability must exceed the cross-block probability");
    if (blocks < 1) throw ConfigError("synthetic data needs at least one block");
    if (users < blocks || news < blocks || entities < 2 * blocks)
        throw ConfigError("synthetic counts must cover every block (entities: two per block)");
    if (title_mentions < 0 || body_mentions < 0 || kg_links_per_entity < 0)
        throw ConfigError("synthetic mention and link counts must be >= 0");
}

std::size_t synthetic_block(std::size_t index, std::size_t blocks) { return index % blocks; }

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Dataset data;
    std::mt19937_64 rng(spec.seed);

    for (std::size_t u = 0; u < spec.users; ++u)
        data.nodes.register_node(NodeKind::User, fmt::format("u{}", u));
    for (std::size_t n = 0; n < spec.news; ++n)
        data.nodes.register_node(NodeKind::News, fmt::format("n{}", n));
    for (std::size_t e = 0; e < spec.entities; ++e)
        data.nodes.register_node(NodeKind::Entity, fmt::format("e{}", e));

    std::vector<std::vector<std::uint32_t>> block_entities(spec.blocks);
    for (std::uint32_t e = 0; e < spec.entities; ++e) {
        const auto b = synthetic_block(e, spec.blocks);
        block_entities[b].push_back(e);
        data.entity_categories[e] = data.categories.get_or_add(fmt::format("topic{}", b));
    }

    for (std::uint32_t n = 0; n < spec.news; ++n) {
        const auto b = synthetic_block(n, spec.blocks);
        const auto& pool = block_entities[b];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        std::vector<NodeId> title, body;
        for (int i = 0; i < spec.title_mentions; ++i) title.push_back({pool[pick(rng)], NodeKind::Entity});
        for (int i = 0; i < spec.body_mentions; ++i) body.push_back({pool[pick(rng)], NodeKind::Entity});
        data.corpus.push_back(NewsDocument::from_mentions({n, NodeKind::News}, title, body));
        data.news_categories[n] = data.categories.get_or_add(fmt::format("section{}", b));
    }

    const std::string relation_names[] = {"related_to", "same_field"};
    std::uniform_real_distribution<double> confidence(0.5, 1.0);
    for (std::uint32_t e = 0; e < spec.entities; ++e) {
        const auto& pool = block_entities[synthetic_block(e, spec.blocks)];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (int l = 0; l < spec.kg_links_per_entity; ++l) {
            std::uint32_t other = e;
            while (other == e) other = pool[pick(rng)];
            data.kg_triples.push_back({fmt::format("e{}", e), relation_names[l % 2],
                                       fmt::format("e{}", other), confidence(rng)});
        }
    }

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> clock(0, 1'000'000);
    for (std::uint32_t u = 0; u < spec.users; ++u) {
        const auto ub = synthetic_block(u, spec.blocks);
        for (std::uint32_t n = 0; n < spec.news; ++n) {
            const double p = synthetic_block(n, spec.blocks) == ub ? spec.in_block_probability
                                                                   : spec.cross_block_probability;
            const double draw = coin(rng);
            const auto ts = clock(rng);
            if (draw < p) data.log.add({u, NodeKind::User}, {n, NodeKind::News}, ts);
        }
    }
    return data;
}

}  // namespace kgperc
