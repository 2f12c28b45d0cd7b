#include "f2f/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace f2f {

namespace {

constexpr std::uint64_t tag_batch = 0xba7c;
constexpr std::uint64_t tag_mine = 0x3173;

class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, double lr, std::size_t n)
        : cfg_(cfg), lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<float> params, std::span<const double> grad) {
        ++t_;
        if (cfg_.kind == OptimizerKind::sgd) {
            for (std::size_t k = 0; k < params.size(); ++k) {
                params[k] = static_cast<float>(static_cast<double>(params[k]) - lr_ * grad[k]);
            }
            return;
        }
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grad[k];
            v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
            const double m_hat = m_[k] / c1;
            const double v_hat = v_[k] / c2;
            const double update = lr_ * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            params[k] = static_cast<float>(static_cast<double>(params[k]) - update);
        }
    }

private:
    OptimizerConfig cfg_;
    double lr_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

}  // namespace

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw InvalidSpecError("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (subjects_per_batch < 2) {
        throw InvalidSpecError("subjects_per_batch must be at least 2");
    }
    if (steps == 0) {
        throw InvalidSpecError("steps must be positive");
    }
    // zero is accepted so that a run can be checked to leave the model untouched
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidSpecError("learning_rate must be finite and nonnegative");
    }
    if (optimizer.kind == OptimizerKind::adam &&
        !(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 &&
          optimizer.beta2 < 1.0 && optimizer.epsilon > 0.0)) {
        throw InvalidSpecError("adam needs 0 <= beta < 1 and epsilon > 0");
    }
    loss.validate();
}

std::vector<SubjectGroup> eligible_subjects(const EmbeddingSet& set) {
    auto groups = set.group_by_subject();
    std::erase_if(groups, [](const SubjectGroup& g) { return g.records.size() < 2; });
    return groups;
}

PairBatch sample_pair_batch(const std::vector<SubjectGroup>& eligible, std::size_t subjects, Rng& rng) {
    if (subjects > eligible.size()) {
        throw InsufficientDataError("batch needs " + std::to_string(subjects) +
                                    " subjects with at least 2 images, only " +
                                    std::to_string(eligible.size()) + " available");
    }
    PairBatch out;
    for (auto s : rng.sample_without_replacement(eligible.size(), subjects)) {
        const auto& group = eligible[s];
        const auto pick = rng.sample_without_replacement(group.records.size(), 2);
        out.anchors.push_back(group.records[pick[0]]);
        out.positives.push_back(group.records[pick[1]]);
        out.ids.push_back(group.subject);
    }
    return out;
}

BatchEncoding encode_pair_batch(const EncoderArchitecture& arch, std::span<const double> params,
                                const EmbeddingSet& inputs, const PairBatch& pairs, bool l2_normalize_output) {
    const std::size_t b = pairs.ids.size();
    const std::size_t dim = arch.output_dim();
    BatchEncoding enc;
    enc.batch.anchors = Matrix(b, dim);
    enc.batch.positives = Matrix(b, dim);
    enc.batch.ids = pairs.ids;
    enc.anchor_caches.resize(b);
    enc.positive_caches.resize(b);

    auto run = [&](std::size_t record, ForwardCache& cache, std::span<double> row) {
        forward(arch, params, inputs[record].vector, cache);
        std::copy(cache.output.begin(), cache.output.end(), row.begin());
        if (l2_normalize_output) {
            l2_normalize(row);
        }
    };
    for (std::size_t i = 0; i < b; ++i) {
        run(pairs.anchors[i], enc.anchor_caches[i], enc.batch.anchors.row(i));
        run(pairs.positives[i], enc.positive_caches[i], enc.batch.positives.row(i));
    }
    return enc;
}

double backprop_triplets(const EncoderArchitecture& arch, std::span<const double> params,
                         const BatchEncoding& encoding, const MinedTriplets& mined, const LossConfig& loss,
                         bool l2_normalize_output, std::span<double> grad_params) {
    const auto result = batch_loss(encoding.batch, mined, loss);
    if (grad_params.empty() || mined.triples.empty()) {
        return result.mean_loss;
    }

    auto push = [&](const ForwardCache& cache, std::span<const double> grad_row) {
        bool any = false;
        for (double g : grad_row) {
            any = any || g != 0.0;
        }
        if (!any) {
            return;
        }
        if (l2_normalize_output) {
            const auto g = l2_normalize_backward(cache.output, grad_row);
            backward(arch, params, cache, g, grad_params);
        } else {
            backward(arch, params, cache, grad_row, grad_params);
        }
    };
    // fixed order: all anchors, then all positives
    for (std::size_t i = 0; i < encoding.batch.size(); ++i) {
        push(encoding.anchor_caches[i], result.grad_anchors.row(i));
    }
    for (std::size_t i = 0; i < encoding.batch.size(); ++i) {
        push(encoding.positive_caches[i], result.grad_positives.row(i));
    }
    return result.mean_loss;
}

double triplet_objective(const EncoderArchitecture& arch, std::span<const double> params,
                         const EmbeddingSet& inputs, const PairBatch& pairs, const MinedTriplets& mined,
                         const LossConfig& loss, bool l2_normalize_output, std::span<double> grad_params) {
    const auto enc = encode_pair_batch(arch, params, inputs, pairs, l2_normalize_output);
    return backprop_triplets(arch, params, enc, mined, loss, l2_normalize_output, grad_params);
}

TrainResult train(EncoderModel model, const EmbeddingSet& train_inputs, const TrainConfig& config) {
    config.validate();
    const auto& arch = model.architecture();
    if (train_inputs.dim() != arch.input_dim()) {
        throw DimensionError("encoder expects input dimension " + std::to_string(arch.input_dim()) +
                             ", training set has " + std::to_string(train_inputs.dim()));
    }
    const auto eligible = eligible_subjects(train_inputs);
    if (eligible.size() < config.subjects_per_batch) {
        throw InsufficientDataError("training needs " + std::to_string(config.subjects_per_batch) +
                                    " subjects with at least 2 images, found " +
                                    std::to_string(eligible.size()));
    }

    model.set_l2_normalize_output(config.l2_normalize_output);
    Optimizer optimizer(config.optimizer, config.learning_rate, arch.parameter_count());
    TrainResult result{model, {}};
    result.report.steps.reserve(config.steps);
    std::vector<double> grad(arch.parameter_count());

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    for (std::size_t step = 0; step < config.steps; ++step) {
        const auto step_start = clock::now();
        auto rng = Rng::derive(config.seed, {tag_batch, step});
        const auto pairs = sample_pair_batch(eligible, config.subjects_per_batch, rng);

        const auto params = result.model.parameters_as_double();
        const auto enc = encode_pair_batch(arch, params, train_inputs, pairs, config.l2_normalize_output);
        const auto mined = mine_hard_triplets(enc.batch, config.loss,
                                              Rng::derive(config.seed, {tag_mine, step}).next());

        StepTelemetry t;
        t.survivors = mined.survivors.size();
        t.dropped = mined.dropped.size();
        if (!mined.triples.empty()) {
            std::fill(grad.begin(), grad.end(), 0.0);
            t.mean_loss = backprop_triplets(arch, params, enc, mined, config.loss,
                                            config.l2_normalize_output, grad);
            optimizer.step(result.model.parameters(), grad);
            t.updated = true;
        }
        t.seconds = std::chrono::duration<double>(clock::now() - step_start).count();
        result.report.steps.push_back(t);
    }
    result.report.total_seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.report.final_checksum = result.model.checksum();
    return result;
}

}  // namespace f2f
