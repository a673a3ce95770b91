#include "rlb/nn/dense.hpp"

#include "rlb/errors.hpp"

#include <cmath>
#include <string>

namespace rlb::nn
{
    namespace
    {
        void apply_activation(Activation a, Matrix& m)
        {
            switch (a)
            {
            case Activation::linear:
                break;
            case Activation::relu:
                m = m.cwiseMax(0.0);
                break;
            case Activation::tanh:
                m = m.array().tanh().matrix();
                break;
            }
        }

        // dL/d(pre-activation) from dL/d(output) and the cached output.
        Matrix activation_backward(Activation a, const Matrix& output, const Matrix& upstream)
        {
            switch (a)
            {
            case Activation::linear:
                return upstream;
            case Activation::relu:
                return (output.array() > 0.0).select(upstream, 0.0);
            case Activation::tanh:
                return (upstream.array() * (1.0 - output.array().square())).matrix();
            }
            return upstream;
        }

        Matrix layer_forward(const DenseLayer& layer, const Matrix& x, DenseNet::LayerCache* cache)
        {
            Matrix z = layer.weight * x;
            z.colwise() += layer.bias;
            if (layer.spec.layer_norm)
            {
                const RowVector mean = z.colwise().mean();
                z.rowwise() -= mean;
                const RowVector var = z.array().square().colwise().mean();
                const RowVector inv_std = (var.array() + kLayerNormEps).rsqrt();
                z = z * inv_std.asDiagonal();
                if (cache != nullptr)
                {
                    cache->normalized = z;
                    cache->inv_std = inv_std;
                }
                z = layer.gain.asDiagonal() * z;
                z.colwise() += layer.shift;
            }
            apply_activation(layer.spec.activation, z);
            if (cache != nullptr)
            {
                cache->input = x;
                cache->output = z;
            }
            return z;
        }
    } // namespace

    std::vector<LayerSpec> encoder_specs(int in, int hidden)
    {
        return {LayerSpec{in, hidden, Activation::relu, true},
                LayerSpec{hidden, hidden, Activation::relu, false}};
    }

    std::vector<LayerSpec> head_specs(int in, int hidden, int out)
    {
        return {LayerSpec{in, hidden, Activation::relu, false},
                LayerSpec{hidden, hidden, Activation::relu, false},
                LayerSpec{hidden, out, Activation::linear, false}};
    }

    DenseNet::DenseNet(std::span<const LayerSpec> specs, std::mt19937_64& rng)
    {
        if (specs.empty())
        {
            throw ConfigError("DenseNet needs at least one layer");
        }
        for (std::size_t i = 0; i < specs.size(); ++i)
        {
            const LayerSpec& s = specs[i];
            if (s.in < 1 || s.out < 1)
            {
                throw ConfigError("DenseNet: layer " + std::to_string(i) + " has empty dimension");
            }
            if (i > 0 && specs[i - 1].out != s.in)
            {
                throw ConfigError("DenseNet: layer " + std::to_string(i) +
                                  " input does not match previous output");
            }
            DenseLayer layer;
            layer.spec = s;
            const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
            std::uniform_real_distribution<double> init(-bound, bound);
            layer.weight = Matrix::NullaryExpr(s.out, s.in, [&]() { return init(rng); });
            layer.bias = Vector::NullaryExpr(s.out, [&]() { return init(rng); });
            if (s.layer_norm)
            {
                layer.gain = Vector::Ones(s.out);
                layer.shift = Vector::Zero(s.out);
            }
            layers_.push_back(std::move(layer));
        }
        zero_grad();
    }

    int DenseNet::input_dim() const
    {
        return layers_.empty() ? 0 : layers_.front().spec.in;
    }

    int DenseNet::output_dim() const
    {
        return layers_.empty() ? 0 : layers_.back().spec.out;
    }

    Matrix DenseNet::forward(const Matrix& x) const
    {
        if (x.rows() != input_dim())
        {
            throw ConfigError("DenseNet::forward: expected " + std::to_string(input_dim()) +
                              " input rows, got " + std::to_string(x.rows()));
        }
        Matrix h = x;
        for (const auto& layer : layers_)
        {
            h = layer_forward(layer, h, nullptr);
        }
        return h;
    }

    Matrix DenseNet::forward(const Matrix& x, Cache& cache) const
    {
        if (x.rows() != input_dim())
        {
            throw ConfigError("DenseNet::forward: expected " + std::to_string(input_dim()) +
                              " input rows, got " + std::to_string(x.rows()));
        }
        cache.assign(layers_.size(), LayerCache{});
        const Matrix* h = &x;
        for (std::size_t i = 0; i < layers_.size(); ++i)
        {
            layer_forward(layers_[i], *h, &cache[i]);
            h = &cache[i].output;
        }
        return cache.back().output;
    }

    Matrix DenseNet::backward(const Cache& cache, const Matrix& upstream)
    {
        if (cache.size() != layers_.size())
        {
            throw InvariantError("DenseNet::backward called without a matching forward cache");
        }
        Matrix grad = upstream;
        for (std::size_t idx = layers_.size(); idx-- > 0;)
        {
            DenseLayer& layer = layers_[idx];
            const LayerCache& c = cache[idx];
            Matrix dz = activation_backward(layer.spec.activation, c.output, grad);
            if (layer.spec.layer_norm)
            {
                layer.d_gain += (dz.cwiseProduct(c.normalized)).rowwise().sum();
                layer.d_shift += dz.rowwise().sum();
                const Matrix dzhat = layer.gain.asDiagonal() * dz;
                const RowVector mean_d = dzhat.colwise().mean();
                const RowVector mean_dx = dzhat.cwiseProduct(c.normalized).colwise().mean();
                Matrix centred = dzhat;
                centred.rowwise() -= mean_d;
                centred -= c.normalized * mean_dx.asDiagonal();
                dz = centred * c.inv_std.asDiagonal();
            }
            layer.d_weight.noalias() += dz * c.input.transpose();
            layer.d_bias += dz.rowwise().sum();
            grad = layer.weight.transpose() * dz;
        }
        return grad;
    }

    void DenseNet::zero_grad()
    {
        for (auto& layer : layers_)
        {
            layer.d_weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
            layer.d_bias = Vector::Zero(layer.bias.size());
            layer.d_gain = Vector::Zero(layer.gain.size());
            layer.d_shift = Vector::Zero(layer.shift.size());
        }
    }

    std::vector<ParamRef> DenseNet::parameters()
    {
        std::vector<ParamRef> out;
        for (auto& layer : layers_)
        {
            out.push_back({layer.weight.data(), layer.d_weight.data(),
                           static_cast<std::size_t>(layer.weight.size())});
            out.push_back({layer.bias.data(), layer.d_bias.data(),
                           static_cast<std::size_t>(layer.bias.size())});
            if (layer.spec.layer_norm)
            {
                out.push_back({layer.gain.data(), layer.d_gain.data(),
                               static_cast<std::size_t>(layer.gain.size())});
                out.push_back({layer.shift.data(), layer.d_shift.data(),
                               static_cast<std::size_t>(layer.shift.size())});
            }
        }
        return out;
    }

    std::size_t DenseNet::parameter_count() const
    {
        std::size_t total = 0;
        for (const auto& layer : layers_)
        {
            total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size() +
                                              layer.gain.size() + layer.shift.size());
        }
        return total;
    }

    void DenseNet::scale_output_layer(double factor)
    {
        if (!layers_.empty())
        {
            layers_.back().weight *= factor;
            layers_.back().bias *= factor;
        }
    }
} // namespace rlb::nn
