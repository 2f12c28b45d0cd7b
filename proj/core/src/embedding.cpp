#include "f2f/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>

namespace f2f {

void validate_token(std::string_view token, std::string_view what) {
    if (token.empty()) {
        throw DataValidationError(std::string(what) + " must not be empty");
    }
    for (unsigned char c : token) {
        if (std::isspace(c)) {
            throw DataValidationError(std::string(what) + " '" + std::string(token) +
                                      "' contains whitespace");
        }
    }
}

SubjectId::SubjectId(std::string id) : id_(std::move(id)) {
    validate_token(id_, "subject id");
}

EmbeddingSet::EmbeddingSet(std::size_t dim) : dim_(dim) {
    if (dim == 0) {
        throw DimensionError("embedding dimension must be at least 1");
    }
}

std::string EmbeddingSet::key(const SubjectId& subject, std::string_view image) {
    std::string k = subject.str();
    k.push_back('\0');
    k.append(image);
    return k;
}

void EmbeddingSet::add(EmbeddingRecord record) {
    if (record.subject.str().empty()) {
        throw DataValidationError("record has an empty subject id");
    }
    validate_token(record.image, "image id");
    if (record.vector.size() != dim_) {
        throw DimensionError("record " + record.subject.str() + "/" + record.image + " has length " +
                             std::to_string(record.vector.size()) + ", set dimension is " +
                             std::to_string(dim_));
    }
    for (float v : record.vector) {
        if (!std::isfinite(v)) {
            throw DataValidationError("record " + record.subject.str() + "/" + record.image +
                                      " contains a non-finite value");
        }
    }
    auto [it, inserted] = index_.emplace(key(record.subject, record.image), records_.size());
    if (!inserted) {
        throw DuplicateRecordError("duplicate record " + record.subject.str() + "/" + record.image);
    }
    records_.push_back(std::move(record));
}

void EmbeddingSet::add(SubjectId subject, std::string image, std::vector<float> vector) {
    add(EmbeddingRecord{std::move(subject), std::move(image), std::move(vector)});
}

std::size_t EmbeddingSet::find(const SubjectId& subject, std::string_view image) const {
    auto it = index_.find(key(subject, image));
    return it == index_.end() ? npos : it->second;
}

std::vector<SubjectGroup> EmbeddingSet::group_by_subject() const {
    std::vector<SubjectGroup> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& s = records_[i].subject;
        auto [it, inserted] = slot.emplace(s.str(), groups.size());
        if (inserted) {
            groups.push_back(SubjectGroup{s, {}});
        }
        groups[it->second].records.push_back(i);
    }
    return groups;
}

std::size_t EmbeddingSet::subject_count() const {
    return group_by_subject().size();
}

RowMatrix<float> EmbeddingSet::to_matrix() const {
    RowMatrix<float> m(records_.size(), dim_);
    for (std::size_t i = 0; i < records_.size(); ++i) {
        std::copy(records_[i].vector.begin(), records_[i].vector.end(), m.row(i).begin());
    }
    return m;
}

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.dim_ != b.dim_ || a.records_.size() != b.records_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.records_.size(); ++i) {
        const auto& ra = a.records_[i];
        const auto& rb = b.records_[i];
        if (ra.subject != rb.subject || ra.image != rb.image) {
            return false;
        }
        // bitwise, so -0.0 and 0.0 differ
        if (!std::equal(ra.vector.begin(), ra.vector.end(), rb.vector.begin(),
                        [](float x, float y) { return std::bit_cast<std::uint32_t>(x) ==
                                                      std::bit_cast<std::uint32_t>(y); })) {
            return false;
        }
    }
    return true;
}

std::string_view to_string(DistanceKind kind) {
    switch (kind) {
        case DistanceKind::euclidean: return "euclidean";
        case DistanceKind::squared_euclidean: return "squared_euclidean";
        case DistanceKind::cosine_distance: return "cosine_distance";
    }
    return "unknown";
}

DistanceKind parse_distance_kind(std::string_view name) {
    if (name == "euclidean") return DistanceKind::euclidean;
    if (name == "squared_euclidean") return DistanceKind::squared_euclidean;
    if (name == "cosine_distance" || name == "cosine") return DistanceKind::cosine_distance;
    throw InvalidSpecError("unknown distance kind '" + std::string(name) + "'");
}

template <typename T>
double distance(DistanceKind kind, std::span<const T> x, std::span<const T> y) {
    if (x.size() != y.size()) {
        throw DimensionError("distance between vectors of length " + std::to_string(x.size()) +
                             " and " + std::to_string(y.size()));
    }
    if (x.empty()) {
        throw DimensionError("distance of empty vectors");
    }
    const std::size_t n = x.size();
    switch (kind) {
        case DistanceKind::euclidean:
        case DistanceKind::squared_euclidean: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double diff = static_cast<double>(x[i]) - static_cast<double>(y[i]);
                sum += diff * diff;
            }
            return kind == DistanceKind::euclidean ? std::sqrt(sum) : sum;
        }
        case DistanceKind::cosine_distance: {
            double dot = 0.0, xx = 0.0, yy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = x[i];
                const double yi = y[i];
                dot += xi * yi;
                xx += xi * xi;
                yy += yi * yi;
            }
            if (xx == 0.0 || yy == 0.0) {
                throw DegenerateVectorError("cosine distance is undefined for a zero vector");
            }
            // xx*yy commutes exactly, so the result is symmetric
            const double cosine = dot / std::sqrt(xx * yy);
            return std::clamp(1.0 - cosine, 0.0, 2.0);
        }
    }
    throw InvalidSpecError("unknown distance kind");
}

template <typename T>
Matrix pairwise_distances(DistanceKind kind, const RowMatrix<T>& a, const RowMatrix<T>& b) {
    if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols()) {
        throw DimensionError("pairwise distances between dimensions " + std::to_string(a.cols()) +
                             " and " + std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            out(i, j) = distance<T>(kind, a.row(i), b.row(j));
        }
    }
    return out;
}

template double distance<float>(DistanceKind, std::span<const float>, std::span<const float>);
template double distance<double>(DistanceKind, std::span<const double>, std::span<const double>);
template Matrix pairwise_distances<float>(DistanceKind, const RowMatrix<float>&, const RowMatrix<float>&);
template Matrix pairwise_distances<double>(DistanceKind, const RowMatrix<double>&, const RowMatrix<double>&);

}  // namespace f2f
