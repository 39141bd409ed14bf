#pragma once
// Data splitting and top-K ranking evaluation.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kgperc/interactions.hpp"
#include "kgperc/model.hpp"
#include "kgperc/trainer.hpp"

namespace kgperc {

struct SplitRatios {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;

    void validate() const;
};

// Per-user split. Counts are rounded per user; a user with at least one
// record always keeps one in Train. With `chronological` the oldest records
// go to Train, otherwise assignment is a seeded shuffle.
InteractionLog split(InteractionLog log, const SplitRatios& ratios, std::uint64_t seed,
                     bool chronological = false);

struct RankedList {
    std::uint32_t user = 0;
    std::vector<std::uint32_t> items;  // news indices, best first
    std::vector<double> scores;        // aligned, non-increasing
};

// Sorts candidates by descending score, ties by ascending news index.
// `news_scores` is indexed by news index.
RankedList rank_items(std::uint32_t user, std::span<const double> news_scores,
                      std::span<const std::uint32_t> candidates);

// All news minus the sorted `excluded` list.
std::vector<std::uint32_t> candidate_set(std::size_t news_count,
                                         std::span<const std::uint32_t> excluded);

// `relevant` must be sorted. All three return 0 when `relevant` is empty.
double recall_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                   int k);
double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                 int k);
double hit_ratio_at_k(std::span<const std::uint32_t> ranked,
                      std::span<const std::uint32_t> relevant, int k);

// Closed-form expectations for a uniformly random ranking of C candidates
// containing R relevant items.
double random_recall_expectation(std::size_t candidates, int k);
double random_hit_expectation(std::size_t candidates, std::size_t relevant, int k);

// Metric means over evaluable users for one run.
struct RunMetrics {
    std::vector<int> ks;
    std::vector<double> recall;
    std::vector<double> ndcg;
    std::vector<double> hit;
    std::size_t users = 0;
    // Mean over users of random_recall_expectation at each k.
    std::vector<double> random_recall;

    double recall_at(int k) const;
    double ndcg_at(int k) const;
    double hit_at(int k) const;
};

// Fills `scores` (resized to news_count) for one user.
using ScoreFn = std::function<void(std::uint32_t user, std::vector<double>& scores)>;

// Ranks every user with at least one relevant item against all news minus
// `excluded[user]`. Throws when no user is evaluable.
RunMetrics evaluate_ranking(const ScoreFn& scorer, std::size_t news_count,
                            const UserItems& excluded, const UserItems& relevant,
                            std::span<const int> ks, int threads = 1);

// Scores from the model's final representations.
ScoreFn model_scorer(const KgupnModel& model, const ModelParams& params, int threads = 1);

struct MetricsReport {
    std::vector<int> ks;
    std::vector<double> recall_mean, recall_std;
    std::vector<double> ndcg_mean, ndcg_std;
    std::vector<double> hit_mean, hit_std;
    std::vector<RunMetrics> runs;

    double recall_at(int k) const;
    double ndcg_at(int k) const;
};

// Mean and population standard deviation over runs.
MetricsReport summarize(const std::vector<RunMetrics>& runs);

// Calls run_once(repeat, seed) for repeat = 0..repeats-1 with seeds derived
// from `master_seed`, then summarizes.
MetricsReport evaluate(const std::function<RunMetrics(int repeat, std::uint64_t seed)>& run_once,
                       int repeats, std::uint64_t master_seed);

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream);

// One TSV row per report: config, recall@K..., ndcg@K..., hit@K..., then the
// matching *_std columns.
void write_metrics_tsv(std::ostream& out, const std::vector<std::string>& config_ids,
                       const std::vector<MetricsReport>& reports);
std::string format_metrics_table(const std::vector<std::string>& config_ids,
                                 const std::vector<MetricsReport>& reports);

}  // namespace kgperc
