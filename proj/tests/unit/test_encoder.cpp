#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "f2f/encoder.hpp"
#include "test_support.hpp"

using namespace f2f;
using f2f::testing::TempDir;

namespace {

EmbeddingSet inputs_2d() {
    EmbeddingSet set(2);
    set.add(SubjectId("a"), "0", {1.0f, -2.0f});
    set.add(SubjectId("a"), "1", {0.5f, 3.0f});
    set.add(SubjectId("b"), "0", {0.0f, 0.0f});
    return set;
}

}  // namespace

TEST(Architecture, Validation) {
    EXPECT_THROW((EncoderArchitecture{{4}, Activation::relu}.validate()), InvalidSpecError);
    EXPECT_THROW((EncoderArchitecture{{4, 0, 2}, Activation::relu}.validate()), InvalidSpecError);
    EXPECT_NO_THROW((EncoderArchitecture{{4, 3, 2}, Activation::tanh}.validate()));
    EXPECT_THROW(parse_activation("sigmoid"), InvalidSpecError);
}

TEST(Architecture, ParameterLayout) {
    const EncoderArchitecture arch{{4, 3, 2}, Activation::relu};
    EXPECT_EQ(arch.parameter_count(), 4u * 3 + 3 + 3u * 2 + 2);
    EXPECT_EQ(arch.weight_offset(0), 0u);
    EXPECT_EQ(arch.bias_offset(0), 12u);
    EXPECT_EQ(arch.weight_offset(1), 15u);
    EXPECT_EQ(arch.bias_offset(1), 21u);
}

TEST(Encoder, IdentityLayerIsIdentity) {
    const EncoderArchitecture arch{{2, 2}, Activation::identity};
    EncoderModel model(arch, {1, 0, 0, 1, 0, 0});
    const auto in = inputs_2d();
    const auto out = encode(model, in, false);
    EXPECT_EQ(out.embeddings, in);
}

TEST(Encoder, HandComputedForward) {
    // 2 -> 2 relu -> 1; W1 = [[1, -1], [2, 0]], b1 = [0, -1], W2 = [[3, 1]], b2 = [0.5]
    const EncoderArchitecture arch{{2, 2, 1}, Activation::relu};
    EncoderModel model(arch, {1, -1, 2, 0, 0, -1, 3, 1, 0.5f});
    EmbeddingSet in(2);
    in.add(SubjectId("s"), "x", {1.0f, 2.0f});
    // h = relu([1-2, 2-1]) = [0, 1]; y = 3*0 + 1*1 + 0.5
    EXPECT_FLOAT_EQ(encode(model, in, false).embeddings[0].vector[0], 1.5f);

    const EncoderArchitecture tanh_arch{{2, 2, 1}, Activation::tanh};
    EncoderModel tanh_model(tanh_arch, {1, -1, 2, 0, 0, -1, 3, 1, 0.5f});
    const double expect = 3 * std::tanh(-1.0) + std::tanh(1.0) + 0.5;
    EXPECT_FLOAT_EQ(encode(tanh_model, in, false).embeddings[0].vector[0], static_cast<float>(expect));
}

TEST(Encoder, DimensionMismatch) {
    const auto model = EncoderModel::initialize({{3, 2}, Activation::relu}, 1);
    EXPECT_THROW(encode(model, inputs_2d(), false), DimensionError);
    EXPECT_THROW(EncoderModel(EncoderArchitecture{{2, 2}, Activation::relu}, std::vector<float>(5)), DimensionError);
}

TEST(Encoder, L2NormalizedOutputs) {
    const auto model = EncoderModel::initialize({{8, 16, 4}, Activation::relu}, 3);
    const auto in = f2f::testing::random_set(10, 3, 8, 5);
    const auto out = encode(model, in, true);
    for (const auto& rec : out.embeddings.records()) {
        double n2 = 0.0;
        for (float v : rec.vector) n2 += double(v) * v;
        const double norm = std::sqrt(n2);
        EXPECT_TRUE(norm == 0.0 || std::abs(norm - 1.0) <= 1e-6) << norm;
    }
}

TEST(Encoder, ZeroVectorStaysZeroAndIsCounted) {
    const EncoderArchitecture arch{{2, 2}, Activation::identity};
    EncoderModel model(arch, {1, 0, 0, 1, 0, 0});
    const auto out = encode(model, inputs_2d(), true);
    EXPECT_EQ(out.zero_norm_count, 1u);
    EXPECT_EQ(out.embeddings[2].vector, (std::vector<float>{0.0f, 0.0f}));
}

TEST(Encoder, DeterministicAcrossThreadCounts) {
    const auto model = EncoderModel::initialize({{16, 32, 8}, Activation::tanh}, 9);
    const auto in = f2f::testing::random_set(40, 5, 16, 6);
    const auto base = encode(model, in, false, 1);
    EXPECT_EQ(encode(model, in, false, 1).embeddings, base.embeddings);
    for (unsigned t : {2u, 3u, 8u}) {
        EXPECT_EQ(encode(model, in, false, t).embeddings, base.embeddings);
    }
}

TEST(Encoder, GlorotInitialisation) {
    const EncoderArchitecture arch{{32, 64, 16}, Activation::relu};
    const auto model = EncoderModel::initialize(arch, 4);
    EXPECT_EQ(model, EncoderModel::initialize(arch, 4));
    EXPECT_FALSE(model == EncoderModel::initialize(arch, 5));
    const auto p = model.parameters();
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        const double fan_in = static_cast<double>(arch.layer_dims[l]);
        const double fan_out = static_cast<double>(arch.layer_dims[l + 1]);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (std::size_t i = arch.weight_offset(l); i < arch.bias_offset(l); ++i) {
            EXPECT_LE(std::abs(p[i]), bound);
        }
        for (std::size_t i = arch.bias_offset(l); i < arch.bias_offset(l) + arch.layer_dims[l + 1]; ++i) {
            EXPECT_EQ(p[i], 0.0f);
        }
    }
}

TEST(Encoder, BackwardMatchesFiniteDifferences) {
    const EncoderArchitecture arch{{5, 4, 3}, Activation::tanh};
    const auto model = EncoderModel::initialize(arch, 12);
    auto params = model.parameters_as_double();
    const std::vector<float> x{0.3f, -1.2f, 0.7f, 2.0f, -0.4f};
    const std::vector<double> g{0.5, -1.0, 2.0};
    auto objective = [&](const std::vector<double>& w) {
        ForwardCache c;
        forward(arch, w, x, c);
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += g[i] * c.output[i];
        return s;
    };
    ForwardCache cache;
    forward(arch, params, x, cache);
    std::vector<double> grad(params.size(), 0.0);
    backward(arch, params, cache, g, grad);
    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double up = objective(params);
        params[i] = keep - h;
        const double down = objective(params);
        params[i] = keep;
        EXPECT_NEAR(grad[i], (up - down) / (2 * h), 1e-7);
    }
}

TEST(Encoder, L2NormalizeBackward) {
    std::vector<double> z{0.3, -2.0, 1.1};
    const std::vector<double> g{1.0, 0.5, -0.25};
    const auto grad = l2_normalize_backward(z, g);
    const double h = 1e-7;
    for (std::size_t i = 0; i < 3; ++i) {
        auto f = [&](double delta) {
            auto y = z;
            y[i] += delta;
            l2_normalize(y);
            return g[0] * y[0] + g[1] * y[1] + g[2] * y[2];
        };
        EXPECT_NEAR(grad[i], (f(h) - f(-h)) / (2 * h), 1e-7);
    }
    std::vector<double> zero{0.0, 0.0};
    EXPECT_FALSE(l2_normalize(zero));
}

TEST(Checkpoint, RoundTripBitExact) {
    TempDir dir("ckpt");
    for (auto act : {Activation::relu, Activation::tanh, Activation::identity}) {
        auto model = EncoderModel::initialize({{7, 5, 3}, act}, 77);
        model.set_l2_normalize_output(act == Activation::tanh);
        save_checkpoint(model, dir / "m.f2fm");
        const auto back = load_checkpoint(dir / "m.f2fm");
        EXPECT_EQ(back, model);
        EXPECT_EQ(back.checksum(), model.checksum());
        EXPECT_EQ(back.l2_normalize_output(), model.l2_normalize_output());
    }
}

TEST(Checkpoint, RejectsBadFiles) {
    TempDir dir("ckpt_bad");
    const auto model = EncoderModel::initialize({{3, 2}, Activation::relu}, 1);
    save_checkpoint(model, dir / "m.f2fm");
    const auto bytes = f2f::testing::slurp(dir / "m.f2fm");

    auto bad = bytes;
    bad[0] = 'X';
    f2f::testing::spit(dir / "magic.f2fm", bad);
    EXPECT_THROW(load_checkpoint(dir / "magic.f2fm"), FormatError);

    bad = bytes;
    bad[4] = 9;  // version
    f2f::testing::spit(dir / "version.f2fm", bad);
    EXPECT_THROW(load_checkpoint(dir / "version.f2fm"), FormatError);

    f2f::testing::spit(dir / "short.f2fm", bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(load_checkpoint(dir / "short.f2fm"), CorruptFileError);

    f2f::testing::spit(dir / "long.f2fm", bytes + "xx");
    EXPECT_THROW(load_checkpoint(dir / "long.f2fm"), CorruptFileError);

    EXPECT_THROW(load_checkpoint(dir / "missing.f2fm"), FormatError);
}
