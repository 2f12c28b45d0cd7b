#include "f2f/cluster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <tuple>

#include "binary_io.hpp"

namespace f2f {

namespace {

std::pair<double, double> mean_and_population_std(const std::vector<double>& v) {
    if (v.empty()) {
        return {0.0, 0.0};
    }
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) {
        sum += x;
    }
    const double mean = sum / n;
    double sq = 0.0;
    for (double x : v) {
        sq += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(sq / n)};
}

Histogram bin(const std::vector<double>& values, const std::vector<double>& edges) {
    Histogram h;
    h.edges = edges;
    const std::size_t bins = edges.size() - 1;
    h.counts.assign(bins, 0);
    const double hi = edges.back();
    for (double v : values) {
        std::size_t b = 0;
        if (hi > 0.0) {
            b = static_cast<std::size_t>(v / hi * static_cast<double>(bins));
            b = std::min(b, bins - 1);
        }
        ++h.counts[b];
    }
    return h;
}

void append_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

std::size_t Histogram::total() const {
    std::size_t n = 0;
    for (auto c : counts) {
        n += c;
    }
    return n;
}

SubjectMeans subject_means(const EmbeddingSet& set) {
    SubjectMeans out;
    for (const auto& group : set.group_by_subject()) {
        std::vector<double> mean(set.dim(), 0.0);
        for (auto r : group.records) {
            const auto& v = set[r].vector;
            for (std::size_t d = 0; d < set.dim(); ++d) {
                mean[d] += v[d];
            }
        }
        for (auto& m : mean) {
            m /= static_cast<double>(group.records.size());
        }
        out.emplace_back(group.subject, std::move(mean));
    }
    return out;
}

ClusterStats cluster_stats(const EmbeddingSet& set, DistanceKind kind, std::size_t bins) {
    if (bins == 0) {
        throw InvalidSpecError("histogram needs at least one bin");
    }
    const auto groups = set.group_by_subject();
    if (groups.size() < 2) {
        throw InsufficientDataError("cluster statistics need at least 2 subjects, found " +
                                    std::to_string(groups.size()));
    }

    ClusterStats stats;
    stats.per_subject_mean = subject_means(set);

    std::vector<double> intra_raw;
    std::vector<double> intra_per_subject;
    std::vector<double> x(set.dim());
    for (std::size_t s = 0; s < groups.size(); ++s) {
        const auto& records = groups[s].records;
        if (records.size() < 2) {
            continue;
        }
        const auto& mean = stats.per_subject_mean[s].second;
        double sum = 0.0;
        for (auto r : records) {
            std::copy(set[r].vector.begin(), set[r].vector.end(), x.begin());
            const double d = distance(kind, x, mean);
            intra_raw.push_back(d);
            sum += d;
        }
        intra_per_subject.push_back(sum / static_cast<double>(records.size()));
    }

    std::vector<double> inter;
    inter.reserve(groups.size() * (groups.size() - 1) / 2);
    for (std::size_t s = 0; s < groups.size(); ++s) {
        for (std::size_t t = s + 1; t < groups.size(); ++t) {
            inter.push_back(distance(kind, stats.per_subject_mean[s].second, stats.per_subject_mean[t].second));
        }
    }

    std::tie(stats.miasd_mean, stats.miasd_std) = mean_and_population_std(intra_per_subject);
    std::tie(stats.miesd_mean, stats.miesd_std) = mean_and_population_std(inter);
    stats.intra_subjects = intra_per_subject.size();
    stats.inter_pairs = inter.size();

    double hi = 0.0;
    for (double d : intra_raw) hi = std::max(hi, d);
    for (double d : inter) hi = std::max(hi, d);
    std::vector<double> edges(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        edges[b] = hi * static_cast<double>(b) / static_cast<double>(bins);
    }
    stats.intra_histogram = bin(intra_raw, edges);
    stats.inter_histogram = bin(inter, edges);
    return stats;
}

void write_histogram_csv(const ClusterStats& stats, const std::filesystem::path& path) {
    std::string out = "bin_lo,bin_hi,intra_count,inter_count\n";
    const auto& edges = stats.intra_histogram.edges;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        append_double(out, edges[b]);
        out.push_back(',');
        append_double(out, edges[b + 1]);
        out += "," + std::to_string(stats.intra_histogram.counts[b]) + "," +
               std::to_string(stats.inter_histogram.counts[b]) + "\n";
    }
    detail::write_file_atomic(path, out);
}

}  // namespace f2f
