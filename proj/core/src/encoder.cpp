#include "f2f/encoder.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "f2f/parallel.hpp"
#include "f2f/rng.hpp"

namespace f2f {

namespace {

constexpr char checkpoint_magic[4] = {'F', '2', 'F', 'M'};
constexpr std::uint16_t checkpoint_version = 1;

double activate(Activation act, double x) {
    switch (act) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::identity: return x;
    }
    return x;
}

double activate_derivative(Activation act, double pre) {
    switch (act) {
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

std::string_view to_string(Activation act) {
    switch (act) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "unknown";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw InvalidSpecError("unknown activation '" + std::string(name) + "'");
}

void EncoderArchitecture::validate() const {
    if (layer_dims.size() < 2) {
        throw InvalidSpecError("an encoder needs at least an input and an output dimension");
    }
    for (auto d : layer_dims) {
        if (d == 0) {
            throw InvalidSpecError("layer dimensions must be positive");
        }
    }
}

std::size_t EncoderArchitecture::weight_offset(std::size_t layer) const {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layer; ++l) {
        offset += layer_dims[l + 1] * (layer_dims[l] + 1);
    }
    return offset;
}

std::size_t EncoderArchitecture::bias_offset(std::size_t layer) const {
    return weight_offset(layer) + layer_dims[layer + 1] * layer_dims[layer];
}

std::size_t EncoderArchitecture::parameter_count() const {
    return weight_offset(layer_count());
}

void forward(const EncoderArchitecture& arch, std::span<const double> params,
             std::span<const float> input, ForwardCache& cache) {
    if (input.size() != arch.input_dim()) {
        throw DimensionError("encoder expects input dimension " + std::to_string(arch.input_dim()) +
                             ", got " + std::to_string(input.size()));
    }
    const std::size_t layers = arch.layer_count();
    cache.inputs.resize(layers);
    cache.pre.resize(layers);
    cache.inputs[0].assign(input.begin(), input.end());

    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in_dim = arch.layer_dims[l];
        const std::size_t out_dim = arch.layer_dims[l + 1];
        const double* w = params.data() + arch.weight_offset(l);
        const double* b = params.data() + arch.bias_offset(l);
        const auto& x = cache.inputs[l];
        auto& z = cache.pre[l];
        z.resize(out_dim);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double sum = b[o];
            const double* row = w + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) {
                sum += row[i] * x[i];
            }
            z[o] = sum;
        }

        auto& next = (l + 1 < layers) ? cache.inputs[l + 1] : cache.output;
        next.resize(out_dim);
        const bool hidden = l + 1 < layers;
        for (std::size_t o = 0; o < out_dim; ++o) {
            next[o] = hidden ? activate(arch.activation, z[o]) : z[o];
        }
    }
}

void backward(const EncoderArchitecture& arch, std::span<const double> params,
              const ForwardCache& cache, std::span<const double> grad_output,
              std::span<double> grad_params) {
    const std::size_t layers = arch.layer_count();
    std::vector<double> delta(grad_output.begin(), grad_output.end());
    std::vector<double> prev;

    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in_dim = arch.layer_dims[l];
        const std::size_t out_dim = arch.layer_dims[l + 1];
        if (l + 1 < layers) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                delta[o] *= activate_derivative(arch.activation, cache.pre[l][o]);
            }
        }

        const auto& x = cache.inputs[l];
        double* gw = grad_params.data() + arch.weight_offset(l);
        double* gb = grad_params.data() + arch.bias_offset(l);
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double d = delta[o];
            if (d == 0.0) {
                continue;
            }
            double* row = gw + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) {
                row[i] += d * x[i];
            }
            gb[o] += d;
        }

        if (l == 0) {
            break;
        }
        const double* w = params.data() + arch.weight_offset(l);
        prev.assign(in_dim, 0.0);
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double d = delta[o];
            const double* row = w + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) {
                prev[i] += row[i] * d;
            }
        }
        delta.swap(prev);
    }
}

bool l2_normalize(std::span<double> v) {
    double sq = 0.0;
    for (double x : v) {
        sq += x * x;
    }
    if (sq == 0.0) {
        return false;
    }
    const double norm = std::sqrt(sq);
    for (double& x : v) {
        x /= norm;
    }
    return true;
}

std::vector<double> l2_normalize_backward(std::span<const double> z, std::span<const double> g) {
    double sq = 0.0;
    for (double x : z) {
        sq += x * x;
    }
    std::vector<double> out(z.size(), 0.0);
    if (sq == 0.0) {
        return out;
    }
    const double norm = std::sqrt(sq);
    // dy/dz = (I - y y^T) / |z|
    double yg = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        yg += (z[i] / norm) * g[i];
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = (g[i] - (z[i] / norm) * yg) / norm;
    }
    return out;
}

EncoderModel::EncoderModel(EncoderArchitecture arch, std::vector<float> params, bool l2_normalize_output)
    : arch_(std::move(arch)), params_(std::move(params)), l2_normalize_output_(l2_normalize_output) {
    arch_.validate();
    if (params_.size() != arch_.parameter_count()) {
        throw DimensionError("encoder needs " + std::to_string(arch_.parameter_count()) +
                             " parameters, got " + std::to_string(params_.size()));
    }
}

EncoderModel EncoderModel::initialize(EncoderArchitecture arch, std::uint64_t seed) {
    arch.validate();
    std::vector<float> params(arch.parameter_count(), 0.0f);
    auto rng = Rng::derive(seed, {0x1417});
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        const std::size_t fan_in = arch.layer_dims[l];
        const std::size_t fan_out = arch.layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        const std::size_t begin = arch.weight_offset(l);
        for (std::size_t k = 0; k < fan_in * fan_out; ++k) {
            params[begin + k] = static_cast<float>(rng.uniform(-limit, limit));
        }
    }
    return EncoderModel(std::move(arch), std::move(params));
}

std::vector<double> EncoderModel::parameters_as_double() const {
    return {params_.begin(), params_.end()};
}

std::uint64_t EncoderModel::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (float p : params_) {
        const auto bits = std::bit_cast<std::uint32_t>(p);
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

bool operator==(const EncoderModel& a, const EncoderModel& b) {
    return a.arch_ == b.arch_ && a.l2_normalize_output_ == b.l2_normalize_output_ &&
           std::equal(a.params_.begin(), a.params_.end(), b.params_.begin(), b.params_.end(),
                      [](float x, float y) {
                          return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
                      });
}

EncodeResult encode(const EncoderModel& model, const EmbeddingSet& inputs, bool l2_normalize_output,
                    unsigned threads) {
    const auto& arch = model.architecture();
    if (inputs.dim() != arch.input_dim()) {
        throw DimensionError("encoder expects input dimension " + std::to_string(arch.input_dim()) +
                             ", set has " + std::to_string(inputs.dim()));
    }
    const auto params = model.parameters_as_double();
    std::vector<std::vector<float>> outputs(inputs.size());
    std::vector<char> zero(inputs.size(), 0);

    parallel_for(inputs.size(), threads, [&](std::size_t i) {
        ForwardCache cache;
        forward(arch, params, inputs[i].vector, cache);
        if (l2_normalize_output && !l2_normalize(cache.output)) {
            zero[i] = 1;
        }
        outputs[i].assign(cache.output.begin(), cache.output.end());
    });

    EncodeResult result{EmbeddingSet(arch.output_dim()), 0};
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        result.zero_norm_count += static_cast<std::size_t>(zero[i]);
        result.embeddings.add(inputs[i].subject, inputs[i].image, std::move(outputs[i]));
    }
    return result;
}

void save_checkpoint(const EncoderModel& model, const std::filesystem::path& path) {
    const auto& arch = model.architecture();
    detail::ByteWriter w;
    w.raw({checkpoint_magic, 4});
    w.u16(checkpoint_version);
    w.u32(static_cast<std::uint32_t>(arch.layer_dims.size()));
    for (auto d : arch.layer_dims) {
        w.u32(static_cast<std::uint32_t>(d));
    }
    w.u8(static_cast<std::uint8_t>(arch.activation));
    w.u8(model.l2_normalize_output() ? 1 : 0);
    for (float p : model.parameters()) {
        w.f32(p);
    }
    detail::write_file_atomic(path, w.bytes());
}

EncoderModel load_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    detail::ByteReader r(bytes, path.string());
    if (r.remaining() < 4 || r.raw(4) != std::string_view(checkpoint_magic, 4)) {
        throw FormatError(path.string() + ": not an F2FM checkpoint");
    }
    const auto version = r.u16();
    if (version != checkpoint_version) {
        throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto n_dims = r.u32();
    if (n_dims < 2) {
        throw FormatError(path.string() + ": checkpoint declares " + std::to_string(n_dims) + " layer dims");
    }
    // each dim takes 4 bytes; reject absurd counts before allocating
    r.need(std::size_t{n_dims} * 4);
    EncoderArchitecture arch;
    for (std::uint32_t i = 0; i < n_dims; ++i) {
        const auto d = r.u32();
        if (d == 0) {
            throw FormatError(path.string() + ": zero layer dimension");
        }
        arch.layer_dims.push_back(d);
    }
    const auto act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::identity)) {
        throw FormatError(path.string() + ": unknown activation tag " + std::to_string(act));
    }
    arch.activation = static_cast<Activation>(act);
    const auto normalize = r.u8();
    if (normalize > 1) {
        throw FormatError(path.string() + ": bad normalize flag");
    }

    const std::size_t count = arch.parameter_count();
    r.need(count * 4);
    std::vector<float> params(count);
    for (auto& p : params) {
        p = r.f32();
        if (!std::isfinite(p)) {
            throw DataValidationError(path.string() + ": non-finite parameter");
        }
    }
    if (r.remaining() != 0) {
        throw CorruptFileError(path.string() + ": " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return EncoderModel(std::move(arch), std::move(params), normalize == 1);
}

}  // namespace f2f
