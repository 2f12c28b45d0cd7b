#include "f2f/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "f2f/rng.hpp"

namespace f2f {

namespace {

void check_dims(std::span<const double> a, std::span<const double> p, std::span<const double> n) {
    if (a.size() != p.size() || a.size() != n.size()) {
        throw DimensionError("triplet with dimensions " + std::to_string(a.size()) + ", " +
                             std::to_string(p.size()) + ", " + std::to_string(n.size()));
    }
}

// d(x, y) plus its partial derivatives, written into gx and gy (same length as x).
double distance_with_grad(DistanceKind kind, std::span<const double> x, std::span<const double> y,
                          std::span<double> gx, std::span<double> gy) {
    const double d = distance<double>(kind, x, y);
    const std::size_t n = x.size();
    switch (kind) {
        case DistanceKind::euclidean:
            for (std::size_t i = 0; i < n; ++i) {
                // subgradient at the origin is zero
                const double g = d > 0.0 ? (x[i] - y[i]) / d : 0.0;
                gx[i] = g;
                gy[i] = -g;
            }
            break;
        case DistanceKind::squared_euclidean:
            for (std::size_t i = 0; i < n; ++i) {
                const double g = 2.0 * (x[i] - y[i]);
                gx[i] = g;
                gy[i] = -g;
            }
            break;
        case DistanceKind::cosine_distance: {
            double xx = 0.0, yy = 0.0, dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                xx += x[i] * x[i];
                yy += y[i] * y[i];
                dot += x[i] * y[i];
            }
            const double nx = std::sqrt(xx);
            const double ny = std::sqrt(yy);
            const double cosine = dot / (nx * ny);
            for (std::size_t i = 0; i < n; ++i) {
                gx[i] = -(y[i] / (nx * ny) - cosine * x[i] / xx);
                gy[i] = -(x[i] / (nx * ny) - cosine * y[i] / yy);
            }
            break;
        }
    }
    return d;
}

}  // namespace

void LossConfig::validate() const {
    if (!std::isfinite(margin) || margin < 0.0) {
        throw InvalidSpecError("margin must be a finite nonnegative number");
    }
}

void TripletBatch::validate() const {
    if (anchors.rows() != ids.size() || positives.rows() != ids.size()) {
        throw DimensionError("batch has " + std::to_string(anchors.rows()) + " anchors, " +
                             std::to_string(positives.rows()) + " positives and " +
                             std::to_string(ids.size()) + " ids");
    }
    if (anchors.cols() != positives.cols()) {
        throw DimensionError("anchor and positive dimensions differ");
    }
    std::set<SubjectId> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            throw InvalidSpecError("subject " + id.str() + " appears twice in one batch");
        }
    }
}

double triplet_loss(std::span<const double> a, std::span<const double> p, std::span<const double> n,
                    const LossConfig& cfg) {
    check_dims(a, p, n);
    const double d_pos = distance<double>(cfg.distance, a, p);
    const double d_neg = distance<double>(cfg.distance, a, n);
    return std::max(d_pos - d_neg + cfg.margin, 0.0);
}

TripletLossResult triplet_loss_grad(std::span<const double> a, std::span<const double> p,
                                    std::span<const double> n, const LossConfig& cfg) {
    check_dims(a, p, n);
    const std::size_t dim = a.size();
    TripletLossResult out;
    out.grad.anchor.assign(dim, 0.0);
    out.grad.positive.assign(dim, 0.0);
    out.grad.negative.assign(dim, 0.0);

    std::vector<double> ga_pos(dim), ga_neg(dim);
    const double d_pos = distance_with_grad(cfg.distance, a, p, ga_pos, out.grad.positive);
    const double d_neg = distance_with_grad(cfg.distance, a, n, ga_neg, out.grad.negative);
    const double hinge = d_pos - d_neg + cfg.margin;
    if (hinge <= 0.0) {
        std::fill(out.grad.positive.begin(), out.grad.positive.end(), 0.0);
        std::fill(out.grad.negative.begin(), out.grad.negative.end(), 0.0);
        return out;
    }

    out.loss = hinge;
    for (std::size_t i = 0; i < dim; ++i) {
        out.grad.anchor[i] = ga_pos[i] - ga_neg[i];
        out.grad.negative[i] = -out.grad.negative[i];
    }
    return out;
}

std::vector<std::size_t> hard_negative_candidates(const TripletBatch& batch, const LossConfig& cfg,
                                                  std::size_t i) {
    const double d_pos = distance<double>(cfg.distance, batch.anchors.row(i), batch.positives.row(i));
    std::vector<std::size_t> hard;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (batch.ids[i] == batch.ids[j]) {
            continue;
        }
        const double d_neg = distance<double>(cfg.distance, batch.anchors.row(i), batch.anchors.row(j));
        if (d_neg <= d_pos) {
            hard.push_back(j);
        }
    }
    return hard;
}

MinedTriplets mine_hard_triplets(const TripletBatch& batch, const LossConfig& cfg, std::uint64_t seed) {
    if (batch.size() < 2) {
        throw BatchTooSmallError("hard triplet mining needs at least 2 pairs, got " +
                                 std::to_string(batch.size()));
    }
    batch.validate();

    MinedTriplets out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto hard = hard_negative_candidates(batch, cfg, i);
        if (hard.empty()) {
            out.dropped.push_back(i);
            continue;
        }
        auto rng = Rng::derive(seed, {i});
        out.triples.push_back(Triple{i, i, hard[rng.uniform_index(hard.size())]});
        out.survivors.push_back(i);
    }
    return out;
}

BatchLossResult batch_loss(const TripletBatch& batch, const MinedTriplets& mined, const LossConfig& cfg) {
    const std::size_t dim = batch.anchors.cols();
    BatchLossResult out;
    out.grad_anchors = Matrix(batch.size(), dim);
    out.grad_positives = Matrix(batch.size(), dim);
    out.survivor_count = mined.triples.size();
    if (mined.triples.empty()) {
        return out;
    }

    const double scale = 1.0 / static_cast<double>(mined.triples.size());
    double total = 0.0;
    for (const auto& t : mined.triples) {
        if (t.anchor >= batch.size() || t.positive >= batch.size() || t.negative >= batch.size()) {
            throw DimensionError("mined triple refers outside the batch");
        }
        const auto r = triplet_loss_grad(batch.anchors.row(t.anchor), batch.positives.row(t.positive),
                                         batch.anchors.row(t.negative), cfg);
        total += r.loss;
        auto ga = out.grad_anchors.row(t.anchor);
        auto gp = out.grad_positives.row(t.positive);
        auto gn = out.grad_anchors.row(t.negative);
        for (std::size_t k = 0; k < dim; ++k) {
            ga[k] += scale * r.grad.anchor[k];
            gp[k] += scale * r.grad.positive[k];
            gn[k] += scale * r.grad.negative[k];
        }
    }
    out.mean_loss = total / static_cast<double>(mined.triples.size());
    return out;
}

}  // namespace f2f
