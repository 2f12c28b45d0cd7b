#include "f2f/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "f2f/rng.hpp"

namespace f2f {

namespace {

// Stream tags.
constexpr std::uint64_t tag_map = 0x5c7a;
constexpr std::uint64_t tag_subject = 0x5b1e;
constexpr std::uint64_t tag_split = 0x5911;

// Singular values of the mixing map are log-spaced over [1/spread, spread].
constexpr double mix_spread = 1000.0;
// Warp f(x) = x + warp_amplitude * sin(x); f' >= 1 - warp_amplitude > 0.
constexpr double warp_amplitude = 0.5;

// Random orthogonal matrix by Gram-Schmidt on a gaussian matrix.
Matrix random_orthogonal(std::size_t n, Rng& rng) {
    Matrix q(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (;;) {
            auto row = q.row(i);
            for (auto& v : row) {
                v = rng.normal();
            }
            for (std::size_t j = 0; j < i; ++j) {
                const auto prev = q.row(j);
                const double dot = std::inner_product(row.begin(), row.end(), prev.begin(), 0.0);
                for (std::size_t k = 0; k < n; ++k) {
                    row[k] -= dot * prev[k];
                }
            }
            const double norm = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
            if (norm > 1e-6) {
                for (auto& v : row) {
                    v /= norm;
                }
                break;
            }
        }
    }
    return q;
}

// Q1 diag(s) Q2^T
Matrix scramble_map(std::size_t n, std::uint64_t seed) {
    auto rng = Rng::derive(seed, {tag_map});
    const Matrix q1 = random_orthogonal(n, rng);
    const Matrix q2 = random_orthogonal(n, rng);
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = n == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(n - 1);
        s[k] = std::pow(mix_spread, 2.0 * t - 1.0);
    }
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                sum += q1(i, k) * s[k] * q2(j, k);
            }
            a(i, j) = sum;
        }
    }
    return a;
}

std::vector<float> apply_scramble(const Matrix& map, const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sum += map(i, j) * x[j];
        }
        out[i] = static_cast<float>(sum + warp_amplitude * std::sin(sum));
    }
    return out;
}

void append_subject(const SyntheticSpec& spec, const Matrix* map, std::size_t k, EmbeddingSet& out) {
    auto rng = Rng::derive(spec.seed, {tag_subject, k});
    std::vector<double> center(spec.input_dim);
    for (auto& c : center) {
        c = rng.uniform(-spec.center_scale, spec.center_scale);
    }
    const SubjectId subject(synthetic_subject_id(k));
    std::vector<double> x(spec.input_dim);
    for (std::size_t img = 0; img < spec.images_per_subject; ++img) {
        for (std::size_t d = 0; d < spec.input_dim; ++d) {
            x[d] = center[d] + spec.cluster_std * rng.normal();
        }
        std::vector<float> v = map ? apply_scramble(*map, x) : std::vector<float>(x.begin(), x.end());
        out.add(subject, "img" + std::to_string(img), std::move(v));
    }
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_subjects == 0) {
        throw InvalidSpecError("n_subjects must be positive");
    }
    if (images_per_subject < 2) {
        throw InvalidSpecError("images_per_subject must be at least 2 for anchor/positive sampling");
    }
    if (input_dim == 0) {
        throw InvalidSpecError("input_dim must be positive");
    }
    if (!(cluster_std >= 0.0) || !std::isfinite(cluster_std)) {
        throw InvalidSpecError("cluster_std must be finite and nonnegative");
    }
    if (!(center_scale > 0.0) || !std::isfinite(center_scale)) {
        throw InvalidSpecError("center_scale must be finite and positive");
    }
}

std::string synthetic_subject_id(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06zu", k);
    return buf;
}

EmbeddingSet generate_subjects(const SyntheticSpec& spec, std::size_t first, std::size_t count) {
    spec.validate();
    Matrix map;
    if (spec.scramble) {
        map = scramble_map(spec.input_dim, spec.seed);
    }
    EmbeddingSet out(spec.input_dim);
    for (std::size_t k = first; k < first + count; ++k) {
        append_subject(spec, spec.scramble ? &map : nullptr, k, out);
    }
    return out;
}

SyntheticSplits generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_subjects;
    const std::size_t n_train = (7 * n + 5) / 10;
    const std::size_t n_val = std::min((n + 5) / 10, n - n_train);

    auto rng = Rng::derive(spec.seed, {tag_split});
    const auto order = rng.sample_without_replacement(n, n);
    // 0 = train, 1 = val, 2 = test
    std::vector<int> split(n);
    for (std::size_t r = 0; r < n; ++r) {
        split[order[r]] = r < n_train ? 0 : (r < n_train + n_val ? 1 : 2);
    }

    Matrix map;
    if (spec.scramble) {
        map = scramble_map(spec.input_dim, spec.seed);
    }
    SyntheticSplits out{EmbeddingSet(spec.input_dim), EmbeddingSet(spec.input_dim),
                        EmbeddingSet(spec.input_dim)};
    for (std::size_t k = 0; k < n; ++k) {
        EmbeddingSet& target = split[k] == 0 ? out.train : (split[k] == 1 ? out.val : out.test);
        append_subject(spec, spec.scramble ? &map : nullptr, k, target);
    }
    return out;
}

}  // namespace f2f
