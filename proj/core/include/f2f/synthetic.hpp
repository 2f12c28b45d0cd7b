#ifndef F2F_SYNTHETIC_HPP
#define F2F_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "f2f/embedding.hpp"

namespace f2f {

/**
 * Subject point clouds used in place of real image data.
 *
 * Subject s has a center drawn uniformly from [-center_scale, center_scale]^input_dim
 * and images center + N(0, cluster_std^2 I). With `scramble` every vector is
 * then pushed through one fixed invertible map derived from `seed`: an
 * ill-conditioned linear mix followed by a monotone per-coordinate warp. Raw
 * euclidean distances become a poor identity signal while a learned encoder
 * can still recover it.
 *
 * Subjects are generated from per-subject streams, so subject k is the same
 * for any n_subjects > k.
 */
struct SyntheticSpec {
    std::size_t n_subjects = 100;
    std::size_t images_per_subject = 4;
    std::size_t input_dim = 32;
    double cluster_std = 0.23;
    double center_scale = 1.0;
    bool scramble = true;
    std::uint64_t seed = 0;

    /// Throws InvalidSpecError.
    void validate() const;
};

struct SyntheticSplits {
    EmbeddingSet train;
    EmbeddingSet val;
    EmbeddingSet test;
};

/// Subject-wise 70/10/20 split of n_subjects generated subjects.
SyntheticSplits generate_synthetic(const SyntheticSpec& spec);

/// Subjects first .. first+count-1 of the same generator (same scramble map), unsplit.
EmbeddingSet generate_subjects(const SyntheticSpec& spec, std::size_t first, std::size_t count);

/// "s000042" style id used for generated subject k.
std::string synthetic_subject_id(std::size_t k);

}  // namespace f2f

#endif  // F2F_SYNTHETIC_HPP
