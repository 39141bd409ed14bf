#include "kgperc/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "kgperc/errors.hpp"
#include "kgperc/parallel.hpp"

namespace kgperc {
namespace {

std::size_t index_of(const std::vector<int>& ks, int k) {
    const auto it = std::find(ks.begin(), ks.end(), k);
    if (it == ks.end()) throw ValidationError(fmt::format("metric @{} was not computed", k));
    return static_cast<std::size_t>(it - ks.begin());
}

std::size_t hits_in_top(std::span<const std::uint32_t> ranked,
                        std::span<const std::uint32_t> relevant, int k) {
    const auto limit = std::min(ranked.size(), static_cast<std::size_t>(std::max(k, 0)));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < limit; ++i)
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) ++hits;
    return hits;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

void SplitRatios::validate() const {
    if (!(train > 0.0 && validation > 0.0 && test > 0.0))
        throw ConfigError("split ratios must be positive");
    if (std::abs(train + validation + test - 1.0) > 1e-9)
        throw ConfigError(fmt::format("split ratios sum to {}, expected 1",
                                      train + validation + test));
}

InteractionLog split(InteractionLog log, const SplitRatios& ratios, std::uint64_t seed,
                     bool chronological) {
    ratios.validate();
    std::map<std::uint32_t, std::vector<std::size_t>> by_user;
    auto& records = log.records();
    for (std::size_t i = 0; i < records.size(); ++i) by_user[records[i].user.index].push_back(i);

    std::mt19937_64 rng(seed);
    for (auto& [user, idx] : by_user) {
        if (chronological) {
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (records[a].timestamp != records[b].timestamp)
                    return records[a].timestamp < records[b].timestamp;
                return records[a].news.index < records[b].news.index;
            });
        } else {
            std::shuffle(idx.begin(), idx.end(), rng);
        }
        const auto n = static_cast<long>(idx.size());
        long n_val = std::lround(static_cast<double>(n) * ratios.validation);
        long n_test = std::lround(static_cast<double>(n) * ratios.test);
        while (n - n_val - n_test < 1) {
            if (n_test > 0)
                --n_test;
            else
                --n_val;
        }
        const long n_train = n - n_val - n_test;
        for (long i = 0; i < n; ++i) {
            auto& r = records[idx[static_cast<std::size_t>(i)]];
            r.split = i < n_train ? Split::Train
                      : i < n_train + n_val ? Split::Validation
                                            : Split::Test;
        }
    }
    return log;
}

RankedList rank_items(std::uint32_t user, std::span<const double> news_scores,
                      std::span<const std::uint32_t> candidates) {
    if (candidates.empty())
        throw ValidationError(fmt::format("user {} has no candidate items to rank", user));
    RankedList out;
    out.user = user;
    out.items.assign(candidates.begin(), candidates.end());
    for (const auto c : out.items)
        if (c >= news_scores.size()) throw ValidationError("candidate outside the score vector");
    std::sort(out.items.begin(), out.items.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (news_scores[a] != news_scores[b]) return news_scores[a] > news_scores[b];
        return a < b;
    });
    out.scores.reserve(out.items.size());
    for (const auto c : out.items) out.scores.push_back(news_scores[c]);
    return out;
}

std::vector<std::uint32_t> candidate_set(std::size_t news_count,
                                         std::span<const std::uint32_t> excluded) {
    std::vector<std::uint32_t> out;
    out.reserve(news_count);
    for (std::uint32_t n = 0; n < news_count; ++n)
        if (!std::binary_search(excluded.begin(), excluded.end(), n)) out.push_back(n);
    return out;
}

double recall_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                   int k) {
    if (relevant.empty()) return 0.0;
    return static_cast<double>(hits_in_top(ranked, relevant, k)) /
           static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                 int k) {
    if (relevant.empty() || k < 1) return 0.0;
    const auto limit = std::min(ranked.size(), static_cast<std::size_t>(k));
    double dcg = 0.0;
    for (std::size_t i = 0; i < limit; ++i)
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i]))
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double idcg = 0.0;
    const auto ideal = std::min(relevant.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

double hit_ratio_at_k(std::span<const std::uint32_t> ranked,
                      std::span<const std::uint32_t> relevant, int k) {
    return hits_in_top(ranked, relevant, k) > 0 ? 1.0 : 0.0;
}

double random_recall_expectation(std::size_t candidates, int k) {
    if (candidates == 0) return 0.0;
    return static_cast<double>(std::min<std::size_t>(candidates, static_cast<std::size_t>(k))) /
           static_cast<double>(candidates);
}

double random_hit_expectation(std::size_t candidates, std::size_t relevant, int k) {
    // 1 - C(C-R, k) / C(C, k) = 1 - prod_{i=0}^{k-1} (C-R-i)/(C-i)
    const auto kk = std::min<std::size_t>(candidates, static_cast<std::size_t>(std::max(k, 0)));
    double miss = 1.0;
    for (std::size_t i = 0; i < kk; ++i) {
        if (candidates - i <= relevant) return 1.0;
        miss *= static_cast<double>(candidates - relevant - i) / static_cast<double>(candidates - i);
    }
    return 1.0 - miss;
}

double RunMetrics::recall_at(int k) const { return recall[index_of(ks, k)]; }
double RunMetrics::ndcg_at(int k) const { return ndcg[index_of(ks, k)]; }
double RunMetrics::hit_at(int k) const { return hit[index_of(ks, k)]; }

RunMetrics evaluate_ranking(const ScoreFn& scorer, std::size_t news_count,
                            const UserItems& excluded, const UserItems& relevant,
                            std::span<const int> ks, int threads) {
    for (const int k : ks)
        if (k < 1) throw ConfigError("metric cutoffs must be >= 1");

    std::vector<std::uint32_t> users;
    for (std::size_t u = 0; u < relevant.size(); ++u)
        if (!relevant[u].empty()) users.push_back(static_cast<std::uint32_t>(u));
    if (users.empty()) throw ValidationError("no evaluable users (no relevant items)");

    const auto nk = ks.size();
    // Per-user rows, reduced below in user order.
    std::vector<std::vector<double>> rows(users.size(), std::vector<double>(4 * nk));
    parallel_for(users.size(), threads, [&](std::size_t i) {
        const auto u = users[i];
        std::vector<double> scores;
        scorer(u, scores);
        if (scores.size() != news_count) throw ValidationError("scorer returned a wrong-sized vector");
        static const std::vector<std::uint32_t> none;
        const auto& skip = u < excluded.size() ? excluded[u] : none;
        const auto candidates = candidate_set(news_count, skip);
        const auto ranked = rank_items(u, scores, candidates);
        for (std::size_t j = 0; j < nk; ++j) {
            rows[i][j] = recall_at_k(ranked.items, relevant[u], ks[j]);
            rows[i][nk + j] = ndcg_at_k(ranked.items, relevant[u], ks[j]);
            rows[i][2 * nk + j] = hit_ratio_at_k(ranked.items, relevant[u], ks[j]);
            rows[i][3 * nk + j] = random_recall_expectation(candidates.size(), ks[j]);
        }
    });

    RunMetrics out;
    out.ks.assign(ks.begin(), ks.end());
    out.users = users.size();
    std::vector<double> sums(4 * nk, 0.0);
    for (const auto& row : rows)
        for (std::size_t j = 0; j < row.size(); ++j) sums[j] += row[j];
    const double inv = 1.0 / static_cast<double>(users.size());
    for (std::size_t j = 0; j < nk; ++j) {
        out.recall.push_back(sums[j] * inv);
        out.ndcg.push_back(sums[nk + j] * inv);
        out.hit.push_back(sums[2 * nk + j] * inv);
        out.random_recall.push_back(sums[3 * nk + j] * inv);
    }
    return out;
}

ScoreFn model_scorer(const KgupnModel& model, const ModelParams& params, int threads) {
    auto star = std::make_shared<Eigen::MatrixXd>(model.representations(params, threads));
    const auto news_begin = static_cast<Eigen::Index>(model.news_column(0));
    const auto news_count = static_cast<Eigen::Index>(model.news_count());
    const KgupnModel* m = &model;
    return [star, news_begin, news_count, m](std::uint32_t user, std::vector<double>& scores) {
        scores.resize(static_cast<std::size_t>(news_count));
        Eigen::Map<Eigen::RowVectorXd> out(scores.data(), news_count);
        out.noalias() = star->col(static_cast<Eigen::Index>(m->user_column(user))).transpose() *
                        star->middleCols(news_begin, news_count);
    };
}

double MetricsReport::recall_at(int k) const { return recall_mean[index_of(ks, k)]; }
double MetricsReport::ndcg_at(int k) const { return ndcg_mean[index_of(ks, k)]; }

MetricsReport summarize(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) throw ValidationError("no runs to summarize");
    MetricsReport out;
    out.ks = runs.front().ks;
    out.runs = runs;
    for (const auto& r : runs)
        if (r.ks != out.ks) throw ValidationError("runs disagree on metric cutoffs");
    auto reduce = [&](auto member, std::vector<double>& mean, std::vector<double>& sd) {
        for (std::size_t j = 0; j < out.ks.size(); ++j) {
            std::vector<double> xs;
            for (const auto& r : runs) xs.push_back((r.*member)[j]);
            double m = 0.0, s = 0.0;
            mean_std(xs, m, s);
            mean.push_back(m);
            sd.push_back(s);
        }
    };
    reduce(&RunMetrics::recall, out.recall_mean, out.recall_std);
    reduce(&RunMetrics::ndcg, out.ndcg_mean, out.ndcg_std);
    reduce(&RunMetrics::hit, out.hit_mean, out.hit_std);
    return out;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream) {
    // splitmix64 over (master, stream)
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

MetricsReport evaluate(const std::function<RunMetrics(int repeat, std::uint64_t seed)>& run_once,
                       int repeats, std::uint64_t master_seed) {
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    std::vector<RunMetrics> runs;
    for (int r = 0; r < repeats; ++r)
        runs.push_back(run_once(r, derive_seed(master_seed, static_cast<std::uint64_t>(r))));
    return summarize(runs);
}

void write_metrics_tsv(std::ostream& out, const std::vector<std::string>& config_ids,
                       const std::vector<MetricsReport>& reports) {
    if (reports.empty()) return;
    const auto& ks = reports.front().ks;
    out << "config";
    for (const char* name : {"recall", "ndcg", "hit"})
        for (const int k : ks) out << '\t' << name << '@' << k;
    for (const char* name : {"recall", "ndcg", "hit"})
        for (const int k : ks) out << '\t' << name << '@' << k << "_std";
    out << '\n';
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        out << config_ids.at(i);
        for (const auto* v : {&r.recall_mean, &r.ndcg_mean, &r.hit_mean, &r.recall_std,
                              &r.ndcg_std, &r.hit_std})
            for (const double x : *v) out << '\t' << fmt::format("{:.17g}", x);
        out << '\n';
    }
}

std::string format_metrics_table(const std::vector<std::string>& config_ids,
                                 const std::vector<MetricsReport>& reports) {
    if (reports.empty()) return {};
    const auto& ks = reports.front().ks;
    std::size_t width = 6;
    for (const auto& id : config_ids) width = std::max(width, id.size());
    std::string out = fmt::format("{:<{}}", "config", width);
    for (const char* name : {"Recall", "NDCG", "Hit"})
        for (const int k : ks) out += fmt::format("  {:>10}", fmt::format("{}@{}", name, k));
    out += '\n';
    for (std::size_t i = 0; i < reports.size(); ++i) {
        out += fmt::format("{:<{}}", config_ids.at(i), width);
        for (const auto* v : {&reports[i].recall_mean, &reports[i].ndcg_mean, &reports[i].hit_mean})
            for (const double x : *v) out += fmt::format("  {:>10.4f}", x);
        out += '\n';
    }
    return out;
}

}  // namespace kgperc
