#ifndef F2F_CLUSTER_HPP
#define F2F_CLUSTER_HPP

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

#include "f2f/embedding.hpp"

namespace f2f {

/// Per-subject centroids in first-appearance order, accumulated in double.
using SubjectMeans = std::vector<std::pair<SubjectId, std::vector<double>>>;

struct Histogram {
    std::vector<double> edges;          ///< bins + 1 edges, edges[0] = 0
    std::vector<std::size_t> counts;

    std::size_t total() const;
};

/**
 * Intra-subject spread and inter-subject separation.
 *
 * intra(s) is the mean distance of subject s's images to its centroid;
 * MIASD is the mean (and population std) of intra(s) over subjects with at
 * least two images. MIESD is the mean (and population std) of centroid
 * distances over all unordered subject pairs.
 */
struct ClusterStats {
    SubjectMeans per_subject_mean;
    double miasd_mean = 0.0;
    double miasd_std = 0.0;
    double miesd_mean = 0.0;
    double miesd_std = 0.0;
    std::size_t intra_subjects = 0;  ///< subjects contributing to MIASD
    std::size_t inter_pairs = 0;
    /// Both histograms share edges spanning [0, largest observed distance].
    Histogram intra_histogram;
    Histogram inter_histogram;
};

SubjectMeans subject_means(const EmbeddingSet& set);

/// Throws InsufficientDataError for fewer than 2 subjects, InvalidSpecError for bins == 0.
ClusterStats cluster_stats(const EmbeddingSet& set, DistanceKind distance = DistanceKind::euclidean,
                           std::size_t bins = 50);

/// CSV with header bin_lo,bin_hi,intra_count,inter_count.
void write_histogram_csv(const ClusterStats& stats, const std::filesystem::path& path);

}  // namespace f2f

#endif  // F2F_CLUSTER_HPP
