#include "f2f/episodic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "f2f/parallel.hpp"
#include "f2f/rng.hpp"

namespace f2f {

namespace {

constexpr std::uint64_t tag_episode = 0xe915;

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) {
        return s;
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / n;
    double sq = 0.0;
    for (double v : values) {
        sq += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(sq / n);
    return s;
}

std::size_t resolve(const EmbeddingSet& embeddings, const EpisodeEntry& e) {
    if (e.record < embeddings.size()) {
        const auto& r = embeddings[e.record];
        if (r.subject == e.subject && r.image == e.image) {
            return e.record;
        }
    }
    const auto idx = embeddings.find(e.subject, e.image);
    if (idx == EmbeddingSet::npos) {
        throw MissingEmbeddingError("no embedding for " + e.subject.str() + "/" + e.image);
    }
    return idx;
}

}  // namespace

void EpisodeSpec::validate() const {
    if (n_way < 2) {
        throw InvalidSpecError("n_way must be at least 2");
    }
    if (k_shot < 1) {
        throw InvalidSpecError("k_shot must be at least 1");
    }
    if (episodes < 1) {
        throw InvalidSpecError("episodes must be at least 1");
    }
    for (auto r : hit_rs) {
        if (r < 1 || r > n_way * k_shot) {
            throw InvalidSpecError("hit R = " + std::to_string(r) + " outside [1, n_way*k_shot = " +
                                   std::to_string(n_way * k_shot) + "]");
        }
    }
}

std::string EpisodeSpec::label() const {
    return std::to_string(n_way) + "-" + std::to_string(k_shot);
}

Episode sample_episode(const EmbeddingSet& set, const EpisodeSpec& spec, std::size_t episode_index) {
    auto groups = set.group_by_subject();
    std::erase_if(groups, [&](const SubjectGroup& g) { return g.records.size() < spec.k_shot + 1; });
    if (groups.size() < spec.n_way) {
        throw InsufficientDataError("n_way = " + std::to_string(spec.n_way) + " needs that many subjects with at least k_shot+1 = " +
                                    std::to_string(spec.k_shot + 1) + " images; only " +
                                    std::to_string(groups.size()) + " qualify");
    }

    auto rng = Rng::derive(spec.seed, {tag_episode, episode_index});
    Episode ep;
    ep.supports.reserve(spec.n_way * spec.k_shot);
    ep.queries.reserve(spec.n_way);
    for (auto g : rng.sample_without_replacement(groups.size(), spec.n_way)) {
        const auto& group = groups[g];
        const auto picks = rng.sample_without_replacement(group.records.size(), spec.k_shot + 1);
        for (std::size_t k = 0; k < picks.size(); ++k) {
            const auto rec = group.records[picks[k]];
            EpisodeEntry entry{rec, group.subject, set[rec].image};
            if (k + 1 < picks.size()) {
                ep.supports.push_back(std::move(entry));
            } else {
                ep.queries.push_back(std::move(entry));
            }
        }
    }
    return ep;
}

std::vector<std::size_t> rank_supports(const Episode& episode, const EmbeddingSet& embeddings,
                                       const EpisodeSpec& spec, std::size_t query_index) {
    const auto& query = embeddings[resolve(embeddings, episode.queries.at(query_index))].vector;
    std::vector<double> dist(episode.supports.size());
    for (std::size_t s = 0; s < episode.supports.size(); ++s) {
        const auto& v = embeddings[resolve(embeddings, episode.supports[s])].vector;
        dist[s] = distance(spec.distance, query, v);
    }
    std::vector<std::size_t> order(episode.supports.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return order;
}

double recall_at_k(std::span<const SubjectId> ranked_subjects, const SubjectId& query_subject,
                   std::size_t k_shot) {
    if (k_shot == 0) {
        return 0.0;
    }
    const std::size_t top = std::min(k_shot, ranked_subjects.size());
    const auto hits = std::count(ranked_subjects.begin(), ranked_subjects.begin() + static_cast<std::ptrdiff_t>(top),
                                 query_subject);
    return static_cast<double>(hits) / static_cast<double>(k_shot);
}

int hit_at_r(std::span<const SubjectId> ranked_subjects, const SubjectId& query_subject, std::size_t r) {
    if (r < 1 || r > ranked_subjects.size()) {
        throw InvalidSpecError("R = " + std::to_string(r) + " outside [1, " +
                               std::to_string(ranked_subjects.size()) + "]");
    }
    const auto end = ranked_subjects.begin() + static_cast<std::ptrdiff_t>(r);
    return std::find(ranked_subjects.begin(), end, query_subject) != end ? 1 : 0;
}

EpisodeResult evaluate_episode(const Episode& episode, const EmbeddingSet& embeddings, const EpisodeSpec& spec) {
    EpisodeResult result;
    for (auto r : spec.hit_rs) {
        result.hit_at_r[r] = 0.0;
    }
    std::vector<SubjectId> ranked(episode.supports.size());
    for (std::size_t q = 0; q < episode.queries.size(); ++q) {
        const auto order = rank_supports(episode, embeddings, spec, q);
        for (std::size_t i = 0; i < order.size(); ++i) {
            ranked[i] = episode.supports[order[i]].subject;
        }
        const auto& subject = episode.queries[q].subject;
        result.recall_at_k += recall_at_k(ranked, subject, spec.k_shot);
        for (auto& [r, value] : result.hit_at_r) {
            value += hit_at_r(ranked, subject, r);
        }
    }
    const double n = static_cast<double>(episode.queries.size());
    result.recall_at_k /= n;
    for (auto& [r, value] : result.hit_at_r) {
        value /= n;
    }
    return result;
}

AggregateReport evaluate(const EmbeddingSet& set, const EpisodeSpec& spec, unsigned threads) {
    spec.validate();
    // fail on data shortage before spawning anything
    sample_episode(set, spec, 0);

    AggregateReport report;
    report.spec = spec;
    report.per_episode.resize(spec.episodes);
    parallel_for(spec.episodes, threads, [&](std::size_t e) {
        report.per_episode[e] = evaluate_episode(sample_episode(set, spec, e), set, spec);
    });

    std::vector<double> values(spec.episodes);
    for (std::size_t e = 0; e < spec.episodes; ++e) {
        values[e] = report.per_episode[e].recall_at_k;
    }
    report.recall_at_k = summarize(values);
    for (auto r : spec.hit_rs) {
        for (std::size_t e = 0; e < spec.episodes; ++e) {
            values[e] = report.per_episode[e].hit_at_r.at(r);
        }
        report.hit_at_r[r] = summarize(values);
    }
    return report;
}

}  // namespace f2f
