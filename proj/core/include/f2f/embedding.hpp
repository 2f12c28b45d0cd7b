#ifndef F2F_EMBEDDING_HPP
#define F2F_EMBEDDING_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "f2f/errors.hpp"

namespace f2f {

/// Subject label. Case-sensitive, non-empty, no whitespace.
class SubjectId {
public:
    SubjectId() = default;
    explicit SubjectId(std::string id);

    const std::string& str() const noexcept { return id_; }

    friend bool operator==(const SubjectId&, const SubjectId&) = default;
    friend auto operator<=>(const SubjectId&, const SubjectId&) = default;

private:
    std::string id_;
};

/// Throws DataValidationError unless `token` is non-empty and whitespace-free.
void validate_token(std::string_view token, std::string_view what);

struct EmbeddingRecord {
    SubjectId subject;
    std::string image;
    std::vector<float> vector;
};

/**
 * Dense row-major matrix. Used for batches of embeddings during training and
 * for distance matrices.
 */
template <typename T>
class RowMatrix {
public:
    RowMatrix() = default;
    RowMatrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    friend bool operator==(const RowMatrix&, const RowMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = RowMatrix<double>;

/// Records grouped by subject, subjects in first-appearance order.
struct SubjectGroup {
    SubjectId subject;
    std::vector<std::size_t> records;
};

/**
 * Ordered collection of fixed-dimension embeddings tagged with (subject, image).
 *
 * Insertion order is preserved and is the iteration order everywhere, which
 * keeps seeded sampling reproducible. Records are validated on insertion.
 */
class EmbeddingSet {
public:
    explicit EmbeddingSet(std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }
    const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }

    /// Throws DimensionError, DataValidationError (non-finite or bad ids) or DuplicateRecordError.
    void add(EmbeddingRecord record);
    void add(SubjectId subject, std::string image, std::vector<float> vector);

    /// Index of the (subject, image) record, or npos.
    std::size_t find(const SubjectId& subject, std::string_view image) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::vector<SubjectGroup> group_by_subject() const;
    std::size_t subject_count() const;

    RowMatrix<float> to_matrix() const;

    friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b);

private:
    static std::string key(const SubjectId& subject, std::string_view image);

    std::size_t dim_;
    std::vector<EmbeddingRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class DistanceKind { euclidean, squared_euclidean, cosine_distance };

std::string_view to_string(DistanceKind kind);
/// Throws InvalidSpecError on an unknown name.
DistanceKind parse_distance_kind(std::string_view name);

/**
 * Distance between two vectors. Elements are widened to double and summed in
 * ascending index order, so the result is bit-identical under argument swap.
 *
 * Throws DimensionError on a length mismatch or empty input, and
 * DegenerateVectorError for a zero vector under cosine_distance.
 */
template <typename T>
double distance(DistanceKind kind, std::span<const T> x, std::span<const T> y);

/// Entry (i, j) is distance(kind, a.row(i), b.row(j)).
template <typename T>
Matrix pairwise_distances(DistanceKind kind, const RowMatrix<T>& a, const RowMatrix<T>& b);

extern template double distance<float>(DistanceKind, std::span<const float>, std::span<const float>);
extern template double distance<double>(DistanceKind, std::span<const double>, std::span<const double>);
extern template Matrix pairwise_distances<float>(DistanceKind, const RowMatrix<float>&, const RowMatrix<float>&);
extern template Matrix pairwise_distances<double>(DistanceKind, const RowMatrix<double>&, const RowMatrix<double>&);

inline double distance(DistanceKind kind, const std::vector<float>& x, const std::vector<float>& y) {
    return distance<float>(kind, x, y);
}

inline double distance(DistanceKind kind, const std::vector<double>& x, const std::vector<double>& y) {
    return distance<double>(kind, x, y);
}

}  // namespace f2f

#endif  // F2F_EMBEDDING_HPP
