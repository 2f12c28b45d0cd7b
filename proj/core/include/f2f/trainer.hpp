#ifndef F2F_TRAINER_HPP
#define F2F_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "f2f/embedding.hpp"
#include "f2f/encoder.hpp"
#include "f2f/rng.hpp"
#include "f2f/triplet.hpp"

namespace f2f {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    std::size_t subjects_per_batch = 32;
    std::size_t steps = 2000;
    double learning_rate = 1e-3;
    OptimizerConfig optimizer;
    LossConfig loss;
    std::uint64_t seed = 0;
    bool l2_normalize_output = false;

    /// Throws InvalidSpecError.
    void validate() const;
};

struct StepTelemetry {
    double mean_loss = 0.0;
    std::size_t survivors = 0;
    std::size_t dropped = 0;
    bool updated = false;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<StepTelemetry> steps;
    std::uint64_t final_checksum = 0;
    double total_seconds = 0.0;
};

struct TrainResult {
    EncoderModel model;
    TrainReport report;
};

/**
 * Siamese triplet training.
 *
 * Each step draws `subjects_per_batch` distinct subjects and two distinct
 * images of each (anchor, positive), encodes both with the same parameters,
 * mines hard negatives among the anchors and takes one optimizer step on the
 * mean triplet loss. Steps where no pair survives mining leave the model
 * (and the optimizer state) untouched.
 *
 * Throws InsufficientDataError if fewer than subjects_per_batch subjects have
 * at least two images, DimensionError on an input size mismatch.
 */
TrainResult train(EncoderModel model, const EmbeddingSet& train_inputs, const TrainConfig& config);

/// Subjects with at least two records, in first-appearance order.
std::vector<SubjectGroup> eligible_subjects(const EmbeddingSet& set);

/// Record indices of one anchor/positive batch.
struct PairBatch {
    std::vector<std::size_t> anchors;
    std::vector<std::size_t> positives;
    std::vector<SubjectId> ids;
};

/// Throws InsufficientDataError if `subjects` exceeds eligible.size().
PairBatch sample_pair_batch(const std::vector<SubjectGroup>& eligible, std::size_t subjects, Rng& rng);

/// Encoded batch plus the forward caches needed to backpropagate through it.
struct BatchEncoding {
    TripletBatch batch;
    std::vector<ForwardCache> anchor_caches;
    std::vector<ForwardCache> positive_caches;
};

BatchEncoding encode_pair_batch(const EncoderArchitecture& arch, std::span<const double> params,
                                const EmbeddingSet& inputs, const PairBatch& pairs, bool l2_normalize_output);

/// Mean triplet loss of `mined`; its parameter gradient is accumulated into grad_params.
double backprop_triplets(const EncoderArchitecture& arch, std::span<const double> params,
                         const BatchEncoding& encoding, const MinedTriplets& mined, const LossConfig& loss,
                         bool l2_normalize_output, std::span<double> grad_params);

/**
 * Loss of the whole encode -> triplet pipeline for a fixed set of triples,
 * as a function of the parameters. Gradient is written to grad_params when
 * it is non-empty. Used by gradient checks.
 */
double triplet_objective(const EncoderArchitecture& arch, std::span<const double> params,
                         const EmbeddingSet& inputs, const PairBatch& pairs, const MinedTriplets& mined,
                         const LossConfig& loss, bool l2_normalize_output, std::span<double> grad_params);

}  // namespace f2f

#endif  // F2F_TRAINER_HPP
