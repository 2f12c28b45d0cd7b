#ifndef F2F_TRIPLET_HPP
#define F2F_TRIPLET_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "f2f/embedding.hpp"

namespace f2f {

struct LossConfig {
    double margin = 0.2;
    DistanceKind distance = DistanceKind::euclidean;

    /// Throws InvalidSpecError if the margin is negative or not finite.
    void validate() const;
};

/**
 * One anchor/positive pair per subject. Row i of `anchors` and `positives`
 * are two distinct images of subject `ids[i]`; ids are pairwise distinct.
 */
struct TripletBatch {
    Matrix anchors;
    Matrix positives;
    std::vector<SubjectId> ids;

    std::size_t size() const noexcept { return ids.size(); }

    /// Throws DimensionError on misaligned shapes, InvalidSpecError on repeated ids.
    void validate() const;
};

struct Triple {
    std::size_t anchor;
    std::size_t positive;
    std::size_t negative;

    friend bool operator==(const Triple&, const Triple&) = default;
};

/**
 * Output of hard-negative mining. All indices refer to rows of the original
 * batch: `anchor == positive == i` for a surviving pair i, and `negative`
 * is the anchor row of another subject.
 */
struct MinedTriplets {
    std::vector<Triple> triples;
    std::vector<std::size_t> survivors;
    std::vector<std::size_t> dropped;

    friend bool operator==(const MinedTriplets&, const MinedTriplets&) = default;
};

struct TripletGradients {
    std::vector<double> anchor;
    std::vector<double> positive;
    std::vector<double> negative;
};

struct TripletLossResult {
    double loss = 0.0;
    TripletGradients grad;
};

/// max(d(a, p) - d(a, n) + margin, 0).
double triplet_loss(std::span<const double> a, std::span<const double> p, std::span<const double> n,
                    const LossConfig& cfg);

/**
 * Loss and its analytic gradient with respect to a, p and n.
 *
 * An inactive hinge gives all-zero gradients. For the euclidean distance the
 * derivative at d = 0 is taken to be the zero vector; cosine_distance needs
 * nonzero inputs as usual.
 */
TripletLossResult triplet_loss_grad(std::span<const double> a, std::span<const double> p,
                                    std::span<const double> n, const LossConfig& cfg);

/**
 * Batched hard triplet mining.
 *
 * For each pair i, every anchor j of a different subject with
 * d(a_i, a_j) <= d(a_i, p_i) is a hard candidate; one is chosen uniformly with
 * a stream keyed by (seed, i). Pairs without candidates are dropped. Candidates
 * are always searched over the full original batch. The margin is not used.
 *
 * Throws BatchTooSmallError for fewer than 2 pairs.
 */
MinedTriplets mine_hard_triplets(const TripletBatch& batch, const LossConfig& cfg, std::uint64_t seed);

/// Candidate set of pair i, ascending row order. Exposed for diagnostics.
std::vector<std::size_t> hard_negative_candidates(const TripletBatch& batch, const LossConfig& cfg,
                                                  std::size_t i);

struct BatchLossResult {
    double mean_loss = 0.0;
    std::size_t survivor_count = 0;
    /// d(mean_loss)/d(anchor row); negatives contribute to the anchor row they were mined from.
    Matrix grad_anchors;
    Matrix grad_positives;
};

/// Mean triplet loss over the mined triples (0 with zero gradients when none survive).
BatchLossResult batch_loss(const TripletBatch& batch, const MinedTriplets& mined, const LossConfig& cfg);

}  // namespace f2f

#endif  // F2F_TRIPLET_HPP
