#ifndef F2F_EPISODIC_HPP
#define F2F_EPISODIC_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "f2f/embedding.hpp"

namespace f2f {

struct EpisodeSpec {
    std::size_t n_way = 20;
    std::size_t k_shot = 1;
    std::vector<std::size_t> hit_rs{1, 5};
    std::size_t episodes = 100;
    std::uint64_t seed = 0;
    DistanceKind distance = DistanceKind::euclidean;

    /// Throws InvalidSpecError (n_way < 2, k_shot < 1, no episodes, R outside [1, n_way*k_shot]).
    void validate() const;
    /// "20-1" style label used in report tables.
    std::string label() const;
};

/// A record of the sampled set together with its subject.
struct EpisodeEntry {
    std::size_t record;
    SubjectId subject;
    std::string image;

    friend bool operator==(const EpisodeEntry&, const EpisodeEntry&) = default;
};

/**
 * One N-way K-shot draw. Supports are grouped by subject in draw order
 * (K per subject); queries[q] is the held-out image of the q-th subject.
 */
struct Episode {
    std::vector<EpisodeEntry> supports;
    std::vector<EpisodeEntry> queries;

    friend bool operator==(const Episode&, const Episode&) = default;
};

struct EpisodeResult {
    double recall_at_k = 0.0;
    std::map<std::size_t, double> hit_at_r;
};

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation across episodes
};

struct AggregateReport {
    EpisodeSpec spec;
    MetricSummary recall_at_k;
    std::map<std::size_t, MetricSummary> hit_at_r;
    std::vector<EpisodeResult> per_episode;
};

/**
 * Samples N subjects uniformly without replacement among those with at least
 * K+1 images, then K+1 distinct images per subject; the last one is the
 * query. Deterministic in (spec.seed, episode_index).
 *
 * Throws InsufficientDataError naming the unmet constraint.
 */
Episode sample_episode(const EmbeddingSet& set, const EpisodeSpec& spec, std::size_t episode_index);

/**
 * Support positions ordered by ascending distance to query `query_index`
 * (similarity is negated distance); ties go to the lower support position.
 * Records are looked up in `embeddings` by (subject, image), so the episode
 * may have been sampled from a different but record-aligned set.
 *
 * Throws MissingEmbeddingError if a record cannot be resolved.
 */
std::vector<std::size_t> rank_supports(const Episode& episode, const EmbeddingSet& embeddings,
                                       const EpisodeSpec& spec, std::size_t query_index);

/// Fraction of the top k_shot entries of `ranked_subjects` equal to query_subject.
double recall_at_k(std::span<const SubjectId> ranked_subjects, const SubjectId& query_subject,
                   std::size_t k_shot);

/// 1 if any of the top r entries is the query subject. Throws InvalidSpecError if r is 0 or too large.
int hit_at_r(std::span<const SubjectId> ranked_subjects, const SubjectId& query_subject, std::size_t r);

/// Per-query metrics averaged over the N queries of one episode.
EpisodeResult evaluate_episode(const Episode& episode, const EmbeddingSet& embeddings, const EpisodeSpec& spec);

/**
 * Runs spec.episodes episodes and averages. Each episode is seeded by
 * (spec.seed, index), so the report does not depend on `threads`.
 */
AggregateReport evaluate(const EmbeddingSet& set, const EpisodeSpec& spec, unsigned threads = 1);

}  // namespace f2f

#endif  // F2F_EPISODIC_HPP
