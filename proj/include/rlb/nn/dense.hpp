#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace rlb::nn
{
    /// Batches are column-major: one sample per column.
    using Matrix = Eigen::MatrixXd;
    using Vector = Eigen::VectorXd;
    using RowVector = Eigen::RowVectorXd;

    enum class Activation : std::uint8_t
    {
        linear = 0,
        relu = 1,
        tanh = 2,
    };

    inline constexpr double kLayerNormEps = 1e-5;

    struct LayerSpec
    {
        int in = 0;
        int out = 0;
        Activation activation = Activation::linear;
        bool layer_norm = false;
    };

    /// affine -> optional layer norm -> activation
    struct DenseLayer
    {
        LayerSpec spec;
        Matrix weight; // out x in
        Vector bias;
        Vector gain; // layer-norm scale, empty without layer norm
        Vector shift;

        Matrix d_weight;
        Vector d_bias;
        Vector d_gain;
        Vector d_shift;
    };

    /// Contiguous parameter block with its gradient buffer.
    struct ParamRef
    {
        double* value = nullptr;
        double* grad = nullptr;
        std::size_t size = 0;
    };

    class DenseNet
    {
    public:
        struct LayerCache
        {
            Matrix input;
            Matrix normalized; // zhat, layer-norm layers only
            RowVector inv_std; // per column, layer-norm layers only
            Matrix output;     // post-activation
        };
        using Cache = std::vector<LayerCache>;

        DenseNet() = default;
        /// Uniform(-1/sqrt(in), 1/sqrt(in)) weights and biases; unit gain,
        /// zero shift.
        DenseNet(std::span<const LayerSpec> specs, std::mt19937_64& rng);

        int input_dim() const;
        int output_dim() const;
        std::size_t layer_count() const noexcept { return layers_.size(); }
        std::span<DenseLayer> layers() noexcept { return layers_; }
        std::span<const DenseLayer> layers() const noexcept { return layers_; }

        Matrix forward(const Matrix& x) const;
        Matrix forward(const Matrix& x, Cache& cache) const;

        /// Accumulates parameter gradients of <upstream, output> and returns
        /// the gradient with respect to the input of the cached forward.
        Matrix backward(const Cache& cache, const Matrix& upstream);

        void zero_grad();
        /// Fixed order: per layer weight, bias, then gain and shift if present.
        std::vector<ParamRef> parameters();
        std::size_t parameter_count() const;

        /// Multiplies the last layer's weights and bias by `factor`.
        void scale_output_layer(double factor);

    private:
        std::vector<DenseLayer> layers_;
    };

    /// Two-hidden-layer encoder: Linear -> LayerNorm -> relu -> Linear -> relu.
    std::vector<LayerSpec> encoder_specs(int in, int hidden);
    /// Two relu hidden layers followed by a linear output.
    std::vector<LayerSpec> head_specs(int in, int hidden, int out);
} // namespace rlb::nn
