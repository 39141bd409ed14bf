#include "kgperc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "kgperc/checkpoint.hpp"
#include "kgperc/errors.hpp"
#include "kgperc/tsv.hpp"

namespace kgperc {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

namespace {

json to_json_synthetic(const SyntheticSpec& s) {
    return {{"users", s.users},
            {"news", s.news},
            {"entities", s.entities},
            {"blocks", s.blocks},
            {"in_block_probability", s.in_block_probability},
            {"cross_block_probability", s.cross_block_probability},
            {"seed", s.seed},
            {"title_mentions", s.title_mentions},
            {"body_mentions", s.body_mentions},
            {"kg_links_per_entity", s.kg_links_per_entity}};
}

void from_json_synthetic(const json& j, SyntheticSpec& s) {
    s.users = j.value("users", s.users);
    s.news = j.value("news", s.news);
    s.entities = j.value("entities", s.entities);
    s.blocks = j.value("blocks", s.blocks);
    s.in_block_probability = j.value("in_block_probability", s.in_block_probability);
    s.cross_block_probability = j.value("cross_block_probability", s.cross_block_probability);
    s.seed = j.value("seed", s.seed);
    s.title_mentions = j.value("title_mentions", s.title_mentions);
    s.body_mentions = j.value("body_mentions", s.body_mentions);
    s.kg_links_per_entity = j.value("kg_links_per_entity", s.kg_links_per_entity);
}

// Rejects keys that do not appear in the reference (default) document.
void check_keys(const json& given, const json& reference, const std::string& where) {
    if (!given.is_object()) {
        if (reference.is_object())
            throw ConfigError(fmt::format("config: '{}' must be an object", where));
        return;
    }
    for (const auto& [key, value] : given.items()) {
        const auto path = where.empty() ? key : where + "." + key;
        if (!reference.contains(key)) throw ConfigError("config: unknown key '" + path + "'");
        check_keys(value, reference.at(key), path);
    }
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

}  // namespace

void PipelineConfig::validate() const {
    static const std::set<std::string> adapters{"native", "mind", "movielens", "synthetic"};
    if (!adapters.contains(dataset.adapter))
        throw ConfigError("unknown dataset adapter '" + dataset.adapter +
                          "' (expected native, mind, movielens or synthetic)");
    auto need = [](const fs::path& p, const char* key) {
        if (p.empty()) throw ConfigError(fmt::format("config: dataset.{} is required", key));
    };
    if (dataset.adapter == "native") need(dataset.native_dir, "native_dir");
    if (dataset.adapter == "mind") {
        need(dataset.behaviors, "behaviors");
        need(dataset.news, "news");
        if (dataset.min_clicks < 1) throw ConfigError("dataset.min_clicks must be >= 1");
    }
    if (dataset.adapter == "movielens") need(dataset.ratings, "ratings");
    if (dataset.adapter == "synthetic") dataset.synthetic.validate();

    if (!(graph.confidence_threshold >= 0.0 && graph.confidence_threshold <= 1.0))
        throw ConfigError("graph.confidence_threshold must lie in [0, 1]");
    if (graph.min_cooccurrence < 1 || graph.min_common_users < 1)
        throw ConfigError("graph.min_cooccurrence and graph.min_common_users must be >= 1");

    if (pretrain.epochs < 0 || pretrain.batch_size < 1 || !(pretrain.learning_rate > 0.0) ||
        !(pretrain.margin > 0.0))
        throw ConfigError("pretrain: epochs >= 0, batch_size >= 1, learning_rate > 0, margin > 0");

    model.validate();
    train.validate();

    if (evaluation.ks.empty()) throw ConfigError("evaluation.ks must not be empty");
    for (const int k : evaluation.ks)
        if (k < 1) throw ConfigError("evaluation.ks entries must be >= 1");
    if (evaluation.repeats < 1) throw ConfigError("evaluation.repeats must be >= 1");
    evaluation.ratios.validate();

    if (sweep_hops.empty()) throw ConfigError("sweep_hops must not be empty");
    for (const int k : sweep_hops)
        if (k < 1) throw ConfigError("sweep_hops entries must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

void to_json(json& j, const PipelineConfig& c) {
    json train = c.train;
    train.erase("seed");
    train.erase("threads");
    j = {{"dataset",
          {{"adapter", c.dataset.adapter},
           {"native_dir", path_string(c.dataset.native_dir)},
           {"behaviors", path_string(c.dataset.behaviors)},
           {"news", path_string(c.dataset.news)},
           {"ratings", path_string(c.dataset.ratings)},
           {"movies", path_string(c.dataset.movies)},
           {"rating_threshold", c.dataset.rating_threshold},
           {"min_clicks", c.dataset.min_clicks},
           {"synthetic", to_json_synthetic(c.dataset.synthetic)}}},
         {"graph",
          {{"confidence_threshold", c.graph.confidence_threshold},
           {"min_cooccurrence", c.graph.min_cooccurrence},
           {"min_common_users", c.graph.min_common_users},
           {"collaborative", c.graph.collaborative}}},
         {"pretrain",
          {{"enabled", c.pretrain.enabled},
           {"margin", c.pretrain.margin},
           {"learning_rate", c.pretrain.learning_rate},
           {"epochs", c.pretrain.epochs},
           {"batch_size", c.pretrain.batch_size}}},
         {"model", c.model},
         {"train", train},
         {"evaluation",
          {{"ks", c.evaluation.ks},
           {"repeats", c.evaluation.repeats},
           {"ratios",
            {{"train", c.evaluation.ratios.train},
             {"validation", c.evaluation.ratios.validation},
             {"test", c.evaluation.ratios.test}}},
           {"chronological", c.evaluation.chronological}}},
         {"sweep_hops", c.sweep_hops},
         {"seed", c.seed},
         {"threads", c.threads},
         {"out", path_string(c.out)}};
}

void from_json(const json& j, PipelineConfig& c) {
    check_keys(j, json(PipelineConfig{}), "");
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        c.dataset.adapter = d.value("adapter", c.dataset.adapter);
        auto path = [&](const char* key, fs::path& out) {
            if (d.contains(key)) out = d.at(key).get<std::string>();
        };
        path("native_dir", c.dataset.native_dir);
        path("behaviors", c.dataset.behaviors);
        path("news", c.dataset.news);
        path("ratings", c.dataset.ratings);
        path("movies", c.dataset.movies);
        c.dataset.rating_threshold = d.value("rating_threshold", c.dataset.rating_threshold);
        c.dataset.min_clicks = d.value("min_clicks", c.dataset.min_clicks);
        if (d.contains("synthetic")) from_json_synthetic(d.at("synthetic"), c.dataset.synthetic);
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        c.graph.confidence_threshold = g.value("confidence_threshold", c.graph.confidence_threshold);
        c.graph.min_cooccurrence = g.value("min_cooccurrence", c.graph.min_cooccurrence);
        c.graph.min_common_users = g.value("min_common_users", c.graph.min_common_users);
        c.graph.collaborative = g.value("collaborative", c.graph.collaborative);
    }
    if (j.contains("pretrain")) {
        const auto& p = j.at("pretrain");
        c.pretrain.enabled = p.value("enabled", c.pretrain.enabled);
        c.pretrain.margin = p.value("margin", c.pretrain.margin);
        c.pretrain.learning_rate = p.value("learning_rate", c.pretrain.learning_rate);
        c.pretrain.epochs = p.value("epochs", c.pretrain.epochs);
        c.pretrain.batch_size = p.value("batch_size", c.pretrain.batch_size);
    }
    if (j.contains("model")) from_json(j.at("model"), c.model);
    if (j.contains("train")) from_json(j.at("train"), c.train);
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        c.evaluation.ks = e.value("ks", c.evaluation.ks);
        c.evaluation.repeats = e.value("repeats", c.evaluation.repeats);
        c.evaluation.chronological = e.value("chronological", c.evaluation.chronological);
        if (e.contains("ratios")) {
            const auto& r = e.at("ratios");
            c.evaluation.ratios.train = r.value("train", c.evaluation.ratios.train);
            c.evaluation.ratios.validation = r.value("validation", c.evaluation.ratios.validation);
            c.evaluation.ratios.test = r.value("test", c.evaluation.ratios.test);
        }
    }
    c.sweep_hops = j.value("sweep_hops", c.sweep_hops);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    PipelineConfig config;
    try {
        from_json(json::parse(in), config);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config {}: {}", path.string(), e.what()));
    }
    // Dataset paths are relative to the config file.
    const auto base = path.parent_path();
    for (auto* p : {&config.dataset.native_dir, &config.dataset.behaviors, &config.dataset.news,
                    &config.dataset.ratings, &config.dataset.movies})
        if (!p->empty() && p->is_relative()) *p = base / *p;
    config.validate();
    return config;
}

RunSeeds run_seeds(std::uint64_t master_seed, int repeat) {
    const auto base = derive_seed(master_seed, static_cast<std::uint64_t>(repeat));
    return {derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3), derive_seed(base, 4)};
}

// ---------------------------------------------------------------- graph

Dataset load_source(const DatasetConfig& config) {
    Dataset data;
    if (config.adapter == "native")
        data = load_native(config.native_dir);
    else if (config.adapter == "mind")
        data = load_mind_style(config.behaviors, config.news, config.min_clicks);
    else if (config.adapter == "movielens")
        data = load_movielens_style(config.ratings, config.rating_threshold, config.movies);
    else if (config.adapter == "synthetic")
        data = generate_synthetic(config.synthetic);
    else
        throw ConfigError("unknown dataset adapter '" + config.adapter + "'");
    const auto& s = data.stats;
    spdlog::info(
        "{} dataset: {} users, {} news, {} entities, {} clicks, {} KG triples; excluded: {} "
        "duplicate clicks, {} users below min clicks ({} clicks), {} ratings below threshold",
        config.adapter, data.nodes.node_count(NodeKind::User), data.nodes.node_count(NodeKind::News),
        data.nodes.node_count(NodeKind::Entity), data.log.size(), data.kg_triples.size(),
        s.duplicate_clicks, s.users_below_min_clicks, s.clicks_dropped_with_users,
        s.ratings_below_threshold);
    return data;
}

std::vector<RawTriple> mine_collaborative(const Dataset& data, const InteractionLog& tagged,
                                          const GraphConfig& config) {
    auto same_news = mine_same_news(data.nodes, data.corpus,
                                    static_cast<std::uint32_t>(config.min_cooccurrence));
    auto same_user = mine_same_user(data.nodes, tagged, data.corpus,
                                    static_cast<std::uint32_t>(config.min_common_users));
    std::vector<RawTriple> out;
    out.reserve(same_news.size() + same_user.size());
    for (const auto* list : {&same_news, &same_user})
        for (const auto& t : *list)
            out.push_back({data.nodes.key(t.head), data.nodes.relation_name(t.relation),
                           data.nodes.key(t.tail), t.confidence});
    spdlog::info("mined {} SameNews and {} SameUser triples", same_news.size(), same_user.size());
    return out;
}

TrainingGraph build_training_graph(const Dataset& data, const InteractionLog& tagged,
                                   const GraphConfig& config,
                                   const std::vector<RawTriple>* mined) {
    TrainingGraph tg;
    auto& g = tg.graph;
    g = data.nodes;
    tg.kg_stats = ingest_triples(g, data.kg_triples, config.confidence_threshold);

    for (const auto& doc : data.corpus)
        for (const auto e : doc.entity_set())
            g.add_triple(doc.news, g.mentions(), {e, NodeKind::Entity}, 1.0, 0.0);
    for (const auto& r : tagged.records())
        if (r.split == Split::Train) g.add_triple(r.user, g.clicked(), r.news, 1.0, 0.0);

    if (config.collaborative) {
        std::vector<RawTriple> computed;
        if (!mined) {
            computed = mine_collaborative(data, tagged, config);
            mined = &computed;
        }
        for (const auto& raw : *mined) {
            const auto head = g.find_node(NodeKind::Entity, raw.head);
            const auto tail = g.find_node(NodeKind::Entity, raw.tail);
            const auto rel = g.find_relation(raw.relation);
            if (!head || !tail || !rel)
                throw ValidationError("mined triple " + raw.head + " " + raw.relation + " " +
                                      raw.tail + " does not match the dataset");
            tg.mined.push_back({*head, *rel, *tail, raw.confidence});
        }
        augment(g, tg.mined);
    }
    g.freeze();

    tg.contexts = assign_contexts(g, extract_context(data.corpus, data.entity_categories),
                                  extract_news_context(data.corpus, data.news_categories));
    tg.category_count = data.categories.size();
    spdlog::debug("training graph: {} nodes, {} triples ({} KG accepted, {} below gate)",
                  g.total_nodes(), g.triples().size(), tg.kg_stats.accepted,
                  tg.kg_stats.below_threshold);
    return tg;
}

SplitItems split_items(const InteractionLog& tagged, std::size_t user_count) {
    return {tagged.items_by_user(user_count, Split::Train),
            tagged.items_by_user(user_count, Split::Validation),
            tagged.items_by_user(user_count, Split::Test)};
}

TransEState pretrain_graph(const TrainingGraph& tg, const PipelineConfig& config,
                           std::uint64_t seed) {
    TransEConfig tc;
    tc.dimension = config.model.dimension;
    tc.margin = config.pretrain.margin;
    tc.learning_rate = config.pretrain.learning_rate;
    tc.epochs = config.pretrain.epochs;
    tc.batch_size = config.pretrain.batch_size;
    tc.seed = seed;
    return train_transe(tg.graph, tc, [](int epoch, double loss) {
        spdlog::debug("transe epoch {} loss {:.6f}", epoch, loss);
    });
}

ValidationFn validation_recall(const KgupnModel& model, const SplitItems& items, int threads) {
    return [&model, &items, threads](const ModelParams& params) {
        const bool any = std::any_of(items.validation.begin(), items.validation.end(),
                                     [](const auto& v) { return !v.empty(); });
        if (!any) return std::numeric_limits<double>::quiet_NaN();
        const int ks[] = {20};
        return evaluate_ranking(model_scorer(model, params, threads), model.news_count(),
                                items.train, items.validation, ks, threads)
            .recall.front();
    };
}

RunMetrics evaluate_model(const KgupnModel& model, const ModelParams& params,
                          const SplitItems& items, std::span<const int> ks, int threads) {
    return evaluate_ranking(model_scorer(model, params, threads), model.news_count(), items.train,
                            items.test, ks, threads);
}

// ---------------------------------------------------------------- runs

namespace {

TrainConfig effective_train(const PipelineConfig& config, std::uint64_t seed) {
    auto tc = config.train;
    tc.seed = seed;
    tc.threads = config.threads;
    return tc;
}

Eigen::MatrixXd score_matrix(const KgupnModel& model, const ModelParams& params, int threads) {
    const auto star = model.representations(params, threads);
    const auto users = static_cast<Eigen::Index>(model.user_count());
    const auto news = static_cast<Eigen::Index>(model.news_count());
    return star.leftCols(users).transpose() *
           star.middleCols(static_cast<Eigen::Index>(model.news_column(0)), news);
}

std::vector<int> with_cutoffs(std::vector<int> ks, std::initializer_list<int> extra) {
    ks.insert(ks.end(), extra);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

}  // namespace

RepeatResult run_repeat(const Dataset& data, const PipelineConfig& config, int repeat,
                        const std::optional<InteractionLog>& tagged, bool keep_scores) {
    const auto seeds = run_seeds(config.seed, repeat);
    const InteractionLog log = tagged ? *tagged
                                      : split(data.log, config.evaluation.ratios, seeds.split,
                                              config.evaluation.chronological);
    const auto tg = build_training_graph(data, log, config.graph);
    const auto items = split_items(log, data.nodes.node_count(NodeKind::User));

    std::optional<TransEState> transe;
    if (config.pretrain.enabled) transe = pretrain_graph(tg, config, seeds.transe);

    const KgupnModel model(tg.graph, tg.contexts, config.model, tg.category_count);
    std::mt19937_64 rng(seeds.init);
    auto init = init_params(config.model, model.node_count(), tg.category_count,
                            transe ? &*transe : nullptr, rng);
    auto trained = train(model, std::move(init), items.train,
                         effective_train(config, seeds.train),
                         validation_recall(model, items, config.threads));

    RepeatResult out;
    out.metrics = evaluate_model(model, trained.params, items, config.evaluation.ks, config.threads);
    if (keep_scores) out.scores = score_matrix(model, trained.params, config.threads);
    out.params = std::move(trained.params);
    out.log = std::move(trained.log);
    return out;
}

std::vector<HopRow> hop_sweep(const Dataset& data, const PipelineConfig& config,
                              std::span<const int> hops,
                              const std::optional<InteractionLog>& tagged) {
    std::vector<HopRow> rows;
    for (const int k : hops) {
        auto cfg = config;
        cfg.model.hops = k;
        cfg.evaluation.ks = with_cutoffs(cfg.evaluation.ks, {10, 20});
        cfg.validate();
        std::vector<RunMetrics> runs;
        double seconds = 0.0;
        std::size_t epochs = 0;
        for (int r = 0; r < cfg.evaluation.repeats; ++r) {
            auto result = run_repeat(data, cfg, r, r == 0 ? tagged : std::nullopt);
            for (const auto& e : result.log) seconds += e.seconds;
            epochs += result.log.size();
            runs.push_back(std::move(result.metrics));
        }
        const auto report = summarize(runs);
        rows.push_back({k, report.ndcg_at(10), report.recall_at(20),
                        epochs ? seconds / static_cast<double>(epochs) : 0.0});
        spdlog::info("hop {}: NDCG@10 {:.4f} Recall@20 {:.4f} {:.3f} s/epoch", k,
                     rows.back().ndcg10, rows.back().recall20, rows.back().seconds_per_epoch);
    }
    return rows;
}

void write_hop_sweep(const fs::path& path, const std::vector<HopRow>& rows) {
    auto out = tsv::open_for_write(path);
    out << "hops\tndcg@10\trecall@20\tseconds_per_epoch\n";
    for (const auto& r : rows)
        out << fmt::format("{}\t{:.6f}\t{:.6f}\t{:.6f}\n", r.hops, r.ndcg10, r.recall20,
                           r.seconds_per_epoch);
}

std::vector<AblationRow> ablation(const Dataset& data, const PipelineConfig& config,
                                  const std::optional<InteractionLog>& tagged) {
    struct Variant {
        const char* name;
        void (*apply)(PipelineConfig&);
    };
    const Variant variants[] = {
        {"full", [](PipelineConfig&) {}},
        {"w/o-collaborative", [](PipelineConfig& c) { c.graph.collaborative = false; }},
        {"w/o-propagation", [](PipelineConfig& c) { c.model.use_propagation = false; }},
        {"w/o-context", [](PipelineConfig& c) { c.model.use_context = false; }},
    };
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        auto cfg = config;
        cfg.graph.collaborative = cfg.model.use_propagation = cfg.model.use_context = true;
        v.apply(cfg);
        cfg.evaluation.ks = with_cutoffs(cfg.evaluation.ks, {10, 20});
        cfg.validate();
        AblationRow row;
        row.variant = v.name;
        row.representation_dim = static_cast<std::size_t>(cfg.model.representation_dim());
        std::vector<RunMetrics> runs;
        for (int r = 0; r < cfg.evaluation.repeats; ++r) {
            auto result = run_repeat(data, cfg, r, r == 0 ? tagged : std::nullopt, r == 0);
            if (r == 0) row.scores = std::move(result.scores);
            runs.push_back(std::move(result.metrics));
        }
        const auto report = summarize(runs);
        row.recall20 = report.recall_at(20);
        row.ndcg10 = report.ndcg_at(10);
        spdlog::info("{}: Recall@20 {:.4f} NDCG@10 {:.4f}", row.variant, row.recall20, row.ndcg10);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_ablation(const fs::path& path, const std::vector<AblationRow>& rows) {
    auto out = tsv::open_for_write(path);
    out << "variant\trecall@20\tndcg@10\n";
    for (const auto& r : rows)
        out << fmt::format("{}\t{:.6f}\t{:.6f}\n", r.variant, r.recall20, r.ndcg10);
}

// ---------------------------------------------------------------- stages

namespace {

struct RunPaths {
    fs::path dir, data, mined, transe, model, train_log, timing, metrics_tsv, metrics_json,
        hop_sweep, ablation;

    explicit RunPaths(const fs::path& out)
        : dir(out),
          data(out / "data"),
          mined(out / "mined.tsv"),
          transe(out / "transe.ckpt"),
          model(out / "model.ckpt"),
          train_log(out / "train_log.tsv"),
          timing(out / "timing.tsv"),
          metrics_tsv(out / "metrics.tsv"),
          metrics_json(out / "metrics.json"),
          hop_sweep(out / "hop_sweep.tsv"),
          ablation(out / "ablation.tsv") {}
};

void echo_config(const PipelineConfig& config) {
    auto out = tsv::open_for_write(config.out / "config.json");
    out << json(config).dump(2) << '\n';
}

bool has_data(const RunPaths& paths) { return fs::exists(paths.data / "interactions.tsv"); }

Dataset load_run_data(const PipelineConfig& config, bool ingest_if_missing) {
    const RunPaths paths(config.out);
    if (!has_data(paths)) {
        if (!ingest_if_missing)
            throw MissingStageError((paths.data / "interactions.tsv").string(), "ingest");
        cmd_ingest(config);
    }
    auto data = load_native(paths.data);
    for (const auto& r : data.log.records())
        if (r.split == Split::Unassigned)
            throw ValidationError(paths.data.string() +
                                  " has records without a split tag; rerun `kgperc ingest`");
    return data;
}

std::vector<RawTriple> load_mined(const PipelineConfig& config, bool augment_if_missing) {
    const RunPaths paths(config.out);
    if (!fs::exists(paths.mined)) {
        if (!augment_if_missing) throw MissingStageError(paths.mined.string(), "augment");
        cmd_augment(config);
    }
    return read_triple_file(paths.mined);
}

TrainingGraph stage_graph(const Dataset& data, const PipelineConfig& config, bool run_missing) {
    std::vector<RawTriple> mined;
    if (config.graph.collaborative) mined = load_mined(config, run_missing);
    return build_training_graph(data, data.log, config.graph, &mined);
}

std::array<std::uint64_t, 3> node_counts(const KnowledgeGraph& g) {
    return {g.node_count(NodeKind::User), g.node_count(NodeKind::News),
            g.node_count(NodeKind::Entity)};
}

json metrics_json(const MetricsReport& report) {
    json runs = json::array();
    for (const auto& r : report.runs)
        runs.push_back({{"recall", r.recall},
                        {"ndcg", r.ndcg},
                        {"hit_ratio", r.hit},
                        {"users", r.users},
                        {"random_recall", r.random_recall}});
    return {{"ks", report.ks},
            {"recall_mean", report.recall_mean},
            {"recall_std", report.recall_std},
            {"ndcg_mean", report.ndcg_mean},
            {"ndcg_std", report.ndcg_std},
            {"hit_ratio_mean", report.hit_mean},
            {"hit_ratio_std", report.hit_std},
            {"runs", runs}};
}

}  // namespace

void cmd_ingest(const PipelineConfig& config) {
    config.validate();
    echo_config(config);
    const RunPaths paths(config.out);
    auto data = load_source(config.dataset);
    data.log = split(std::move(data.log), config.evaluation.ratios, run_seeds(config.seed, 0).split,
                     config.evaluation.chronological);
    write_native(data, paths.data);

    const auto& s = data.stats;
    const json report = {{"adapter", config.dataset.adapter},
                         {"users", data.nodes.node_count(NodeKind::User)},
                         {"news", data.nodes.node_count(NodeKind::News)},
                         {"entities", data.nodes.node_count(NodeKind::Entity)},
                         {"interactions", data.log.size()},
                         {"train", data.log.count(Split::Train)},
                         {"validation", data.log.count(Split::Validation)},
                         {"test", data.log.count(Split::Test)},
                         {"kg_triples", data.kg_triples.size()},
                         {"lines", s.lines},
                         {"duplicate_clicks", s.duplicate_clicks},
                         {"users_below_min_clicks", s.users_below_min_clicks},
                         {"clicks_dropped_with_users", s.clicks_dropped_with_users},
                         {"ratings_below_threshold", s.ratings_below_threshold},
                         {"news_registered_on_the_fly", s.news_registered_on_the_fly},
                         {"entities_registered_on_the_fly", s.entities_registered_on_the_fly}};
    tsv::open_for_write(paths.data / "ingest_report.json") << report.dump(2) << '\n';
    spdlog::info("wrote {}", paths.data.string());
}

void cmd_synth(const PipelineConfig& config) {
    auto cfg = config;
    cfg.dataset.adapter = "synthetic";
    cmd_ingest(cfg);
}

void cmd_augment(const PipelineConfig& config) {
    config.validate();
    echo_config(config);
    const RunPaths paths(config.out);
    const auto data = load_run_data(config, false);
    std::vector<RawTriple> mined;
    if (config.graph.collaborative)
        mined = mine_collaborative(data, data.log, config.graph);
    else
        spdlog::info("collaborative mining disabled; writing an empty {}", paths.mined.string());
    write_triple_file(paths.mined, mined);
}

void cmd_pretrain(const PipelineConfig& config) {
    config.validate();
    echo_config(config);
    const RunPaths paths(config.out);
    if (!config.pretrain.enabled) {
        spdlog::warn("pretrain.enabled is false; nothing to do");
        return;
    }
    const auto data = load_run_data(config, false);
    const auto tg = stage_graph(data, config, false);
    const auto state = pretrain_graph(tg, config, run_seeds(config.seed, 0).transe);
    save_transe(state, node_counts(tg.graph), paths.transe);
    spdlog::info("wrote {}", paths.transe.string());
}

void cmd_train(const PipelineConfig& config) {
    config.validate();
    const RunPaths paths(config.out);
    const auto data = load_run_data(config, true);
    const auto tg = stage_graph(data, config, true);
    echo_config(config);
    const auto seeds = run_seeds(config.seed, 0);

    std::optional<TransEState> transe;
    if (config.pretrain.enabled) {
        if (!fs::exists(paths.transe)) cmd_pretrain(config);
        transe = load_transe(paths.transe);
        if (transe->dimension != config.model.dimension ||
            static_cast<std::size_t>(transe->entity_vectors.cols()) != tg.graph.total_nodes() ||
            static_cast<std::size_t>(transe->relation_vectors.cols()) != tg.graph.relation_count())
            throw ValidationError(paths.transe.string() +
                                  " does not match the current data or dimension; rerun "
                                  "`kgperc pretrain`");
    }

    const KgupnModel model(tg.graph, tg.contexts, config.model, tg.category_count);
    const auto items = split_items(data.log, model.user_count());
    std::mt19937_64 rng(seeds.init);
    auto init = init_params(config.model, model.node_count(), tg.category_count,
                            transe ? &*transe : nullptr, rng);
    const auto tc = effective_train(config, seeds.train);
    const auto result =
        train(model, std::move(init), items.train, tc, validation_recall(model, items, config.threads));

    Hyperparams hp{config.model, tc, node_counts(tg.graph), tg.category_count};
    save_checkpoint(result.params, hp, paths.model);

    auto log = tsv::open_for_write(paths.train_log);
    auto timing = tsv::open_for_write(paths.timing);
    log << "epoch\tloss\tvalidation_recall@20\n";
    timing << "epoch\tseconds\n";
    for (const auto& e : result.log) {
        log << fmt::format("{}\t{:.10g}\t{:.6f}\n", e.epoch, e.loss, e.validation_recall20);
        timing << fmt::format("{}\t{:.6f}\n", e.epoch, e.seconds);
    }
    spdlog::info("wrote {} ({} epochs, final loss {:.6f})", paths.model.string(), result.log.size(),
                 result.log.empty() ? 0.0 : result.log.back().loss);
}

MetricsReport cmd_evaluate(const PipelineConfig& config) {
    config.validate();
    const RunPaths paths(config.out);
    if (!fs::exists(paths.model)) throw MissingStageError(paths.model.string(), "train");
    const auto data = load_run_data(config, false);
    const auto tg = stage_graph(data, config, false);
    echo_config(config);
    auto [params, hp] = load_checkpoint(paths.model);
    if (hp.node_counts != node_counts(tg.graph) || hp.category_count != tg.category_count)
        throw ValidationError(paths.model.string() +
                              " was trained on different data; rerun `kgperc train`");

    // Repeat 0 scores the checkpoint on the persisted split; further repeats
    // retrain from scratch on fresh splits with the checkpoint's model shape.
    auto cfg = config;
    cfg.model = hp.model;
    cfg.train = hp.train;
    std::vector<RunMetrics> runs;
    {
        const KgupnModel model(tg.graph, tg.contexts, hp.model, tg.category_count);
        const auto items = split_items(data.log, model.user_count());
        runs.push_back(evaluate_model(model, params, items, cfg.evaluation.ks, cfg.threads));
    }
    for (int r = 1; r < cfg.evaluation.repeats; ++r)
        runs.push_back(run_repeat(data, cfg, r).metrics);
    const auto report = summarize(runs);

    const std::vector<std::string> ids{"kgupn"};
    {
        auto out = tsv::open_for_write(paths.metrics_tsv);
        write_metrics_tsv(out, ids, {report});
    }
    tsv::open_for_write(paths.metrics_json) << metrics_json(report).dump(2) << '\n';
    fmt::print("{}", format_metrics_table(ids, {report}));
    return report;
}

std::vector<HopRow> cmd_hop_sweep(const PipelineConfig& config) {
    config.validate();
    const RunPaths paths(config.out);
    const auto data = load_run_data(config, true);
    echo_config(config);
    const auto rows = hop_sweep(data, config, config.sweep_hops, data.log);
    write_hop_sweep(paths.hop_sweep, rows);
    fmt::print("{:>4}  {:>9}  {:>9}  {:>9}\n", "hops", "NDCG@10", "Recall@20", "s/epoch");
    for (const auto& r : rows)
        fmt::print("{:>4}  {:>9.4f}  {:>9.4f}  {:>9.3f}\n", r.hops, r.ndcg10, r.recall20,
                   r.seconds_per_epoch);
    return rows;
}

std::vector<AblationRow> cmd_ablate(const PipelineConfig& config) {
    config.validate();
    const RunPaths paths(config.out);
    const auto data = load_run_data(config, true);
    echo_config(config);
    auto rows = ablation(data, config, data.log);
    write_ablation(paths.ablation, rows);
    fmt::print("{:<18}  {:>9}  {:>9}\n", "variant", "Recall@20", "NDCG@10");
    for (const auto& r : rows)
        fmt::print("{:<18}  {:>9.4f}  {:>9.4f}\n", r.variant, r.recall20, r.ndcg10);
    return rows;
}

void run_command(const std::string& command, const PipelineConfig& config) {
    if (command == "ingest")
        cmd_ingest(config);
    else if (command == "synth")
        cmd_synth(config);
    else if (command == "augment")
        cmd_augment(config);
    else if (command == "pretrain")
        cmd_pretrain(config);
    else if (command == "train")
        cmd_train(config);
    else if (command == "evaluate")
        cmd_evaluate(config);
    else if (command == "hop-sweep")
        cmd_hop_sweep(config);
    else if (command == "ablate")
        cmd_ablate(config);
    else
        throw ValidationError("unknown command '" + command + "'");
}

}  // namespace kgperc
