#ifndef F2F_ENCODER_HPP
#define F2F_ENCODER_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "f2f/embedding.hpp"

namespace f2f {

enum class Activation : std::uint8_t { relu = 0, tanh = 1, identity = 2 };

std::string_view to_string(Activation act);
/// Throws InvalidSpecError on an unknown name.
Activation parse_activation(std::string_view name);

/**
 * Shape of a fully connected encoder: layer_dims = [in, h1, ..., out].
 * Hidden layers apply `activation`; the last layer is linear.
 *
 * Parameters live in one flat vector. Layer l occupies a block of
 * out_l * in_l weights (row-major, one row per output unit) followed by
 * out_l biases; blocks are stored in layer order.
 */
struct EncoderArchitecture {
    std::vector<std::size_t> layer_dims;
    Activation activation = Activation::relu;

    /// Throws InvalidSpecError unless there are >= 2 dims, all positive.
    void validate() const;

    std::size_t layer_count() const noexcept { return layer_dims.size() - 1; }
    std::size_t input_dim() const noexcept { return layer_dims.front(); }
    std::size_t output_dim() const noexcept { return layer_dims.back(); }
    std::size_t parameter_count() const;
    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;

    friend bool operator==(const EncoderArchitecture&, const EncoderArchitecture&) = default;
};

/// Per-layer values kept from a forward pass for backpropagation.
struct ForwardCache {
    std::vector<std::vector<double>> inputs;  ///< input to each layer
    std::vector<std::vector<double>> pre;     ///< pre-activation of each layer
    std::vector<double> output;

    const std::vector<double>& result() const noexcept { return output; }
};

/// Forward pass in double precision. Throws DimensionError on an input size mismatch.
void forward(const EncoderArchitecture& arch, std::span<const double> params,
             std::span<const float> input, ForwardCache& cache);

/// Accumulates d(loss)/d(params) into grad_params given d(loss)/d(output).
void backward(const EncoderArchitecture& arch, std::span<const double> params,
              const ForwardCache& cache, std::span<const double> grad_output,
              std::span<double> grad_params);

/// In-place L2 normalisation. Returns false (and leaves v untouched) for a zero vector.
bool l2_normalize(std::span<double> v);

/// Gradient through y = z / |z|, given the unnormalised z and upstream gradient g.
std::vector<double> l2_normalize_backward(std::span<const double> z, std::span<const double> g);

/**
 * Feed-forward encoder with 32-bit parameter storage. Computation is carried
 * out in double; outputs are rounded to float when they become embeddings.
 */
class EncoderModel {
public:
    EncoderModel() = default;
    EncoderModel(EncoderArchitecture arch, std::vector<float> params, bool l2_normalize_output = false);

    /// Glorot-uniform weights from a seeded stream, zero biases.
    static EncoderModel initialize(EncoderArchitecture arch, std::uint64_t seed);

    const EncoderArchitecture& architecture() const noexcept { return arch_; }
    std::span<const float> parameters() const noexcept { return params_; }
    std::span<float> parameters() noexcept { return params_; }
    std::vector<double> parameters_as_double() const;

    bool l2_normalize_output() const noexcept { return l2_normalize_output_; }
    void set_l2_normalize_output(bool on) noexcept { l2_normalize_output_ = on; }

    /// FNV-1a over the little-endian parameter bytes.
    std::uint64_t checksum() const;

    friend bool operator==(const EncoderModel& a, const EncoderModel& b);

private:
    EncoderArchitecture arch_;
    std::vector<float> params_;
    bool l2_normalize_output_ = false;
};

struct EncodeResult {
    EmbeddingSet embeddings;
    std::size_t zero_norm_count = 0;  ///< vectors left at zero under l2 normalisation
};

/**
 * Applies the encoder to every record, keeping subject/image tags and order.
 * Output does not depend on `threads`.
 */
EncodeResult encode(const EncoderModel& model, const EmbeddingSet& inputs, bool l2_normalize,
                    unsigned threads = 1);

/// Writes the F2FM checkpoint atomically (temp file then rename).
void save_checkpoint(const EncoderModel& model, const std::filesystem::path& path);
/// Throws FormatError / CorruptFileError / DataValidationError.
EncoderModel load_checkpoint(const std::filesystem::path& path);

}  // namespace f2f

#endif  // F2F_ENCODER_HPP
