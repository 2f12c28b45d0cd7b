#ifndef F2F_PCA_HPP
#define F2F_PCA_HPP

#include <array>
#include <filesystem>
#include <vector>

#include "f2f/embedding.hpp"

namespace f2f {

struct PcaProjection {
    Matrix coords;                     ///< one row (pc1, pc2) per record
    Matrix components;                 ///< 2 x dim principal directions, rows unit length
    std::array<double, 2> variance{};  ///< covariance eigenvalues of the two directions
    bool degenerate = false;           ///< input had zero variance; coords are all zero
};

/**
 * Projects mean-centred records onto the two leading eigenvectors of the
 * population covariance. Each component is sign-fixed so that its first
 * nonzero loading is positive. With dim == 1 the second column is zero.
 *
 * Throws InsufficientDataError for fewer than 2 records.
 */
PcaProjection pca_project(const EmbeddingSet& set);

/// CSV with header subject_id,image_id,pc1,pc2.
void write_projection_csv(const EmbeddingSet& set, const PcaProjection& projection,
                          const std::filesystem::path& path);

}  // namespace f2f

#endif  // F2F_PCA_HPP
