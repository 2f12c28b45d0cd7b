#include "f2f/pca.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <string>

#include "binary_io.hpp"

namespace f2f {

namespace {

// Loadings below this count as zero for the sign convention.
constexpr double loading_eps = 1e-12;

}  // namespace

PcaProjection pca_project(const EmbeddingSet& set) {
    if (set.size() < 2) {
        throw InsufficientDataError("PCA projection needs at least 2 records, got " + std::to_string(set.size()));
    }
    const auto n = static_cast<Eigen::Index>(set.size());
    const auto dim = static_cast<Eigen::Index>(set.dim());

    Eigen::MatrixXd x(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = set[static_cast<std::size_t>(i)].vector;
        for (Eigen::Index d = 0; d < dim; ++d) {
            x(i, d) = v[static_cast<std::size_t>(d)];
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);

    PcaProjection out;
    out.coords = Matrix(set.size(), 2);
    out.components = Matrix(2, set.dim());
    if (cov.isZero(0.0)) {
        out.degenerate = true;
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // eigenvalues come back ascending
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    const Eigen::Index available = std::min<Eigen::Index>(2, dim);
    for (Eigen::Index c = 0; c < available; ++c) {
        const Eigen::Index col = dim - 1 - c;
        Eigen::VectorXd v = vectors.col(col);
        for (Eigen::Index d = 0; d < dim; ++d) {
            if (std::abs(v(d)) > loading_eps) {
                if (v(d) < 0.0) {
                    v = -v;
                }
                break;
            }
        }
        out.variance[static_cast<std::size_t>(c)] = std::max(0.0, values(col));
        for (Eigen::Index d = 0; d < dim; ++d) {
            out.components(static_cast<std::size_t>(c), static_cast<std::size_t>(d)) = v(d);
        }
        const Eigen::VectorXd proj = x * v;
        for (Eigen::Index i = 0; i < n; ++i) {
            out.coords(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = proj(i);
        }
    }
    return out;
}

void write_projection_csv(const EmbeddingSet& set, const PcaProjection& projection,
                          const std::filesystem::path& path) {
    std::string out = "subject_id,image_id,pc1,pc2\n";
    char buf[64];
    for (std::size_t i = 0; i < set.size(); ++i) {
        out += set[i].subject.str() + "," + set[i].image;
        for (std::size_t c = 0; c < 2; ++c) {
            out.push_back(',');
            auto res = std::to_chars(buf, buf + sizeof buf, projection.coords(i, c));
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    detail::write_file_atomic(path, out);
}

}  // namespace f2f
