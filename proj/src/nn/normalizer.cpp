#include "rlb/nn/normalizer.hpp"

#include "rlb/errors.hpp"

namespace rlb::nn
{
    InputNormalizer::InputNormalizer(int features, double clip)
        : mean_(Vector::Zero(features)), m2_(Vector::Zero(features)), clip_(clip)
    {
    }

    void InputNormalizer::update(const Vector& x)
    {
        if (x.size() != mean_.size())
        {
            throw ConfigError("InputNormalizer::update: feature count mismatch");
        }
        ++count_;
        const Vector delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta.cwiseProduct(x - mean_);
    }

    Vector InputNormalizer::variance() const
    {
        if (count_ == 0)
        {
            return Vector::Ones(mean_.size());
        }
        return m2_ / static_cast<double>(count_);
    }

    Vector InputNormalizer::normalize(const Vector& x) const
    {
        if (count_ == 0)
        {
            return x;
        }
        const Vector inv = (variance().array() + kEpsilon).rsqrt();
        return ((x - mean_).cwiseProduct(inv)).cwiseMax(-clip_).cwiseMin(clip_);
    }

    Matrix InputNormalizer::normalize(const Matrix& batch) const
    {
        if (count_ == 0)
        {
            return batch;
        }
        const Vector inv = (variance().array() + kEpsilon).rsqrt();
        Matrix out = batch.colwise() - mean_;
        out = inv.asDiagonal() * out;
        return out.cwiseMax(-clip_).cwiseMin(clip_);
    }

    void InputNormalizer::restore(Vector mean, Vector m2, std::uint64_t count)
    {
        if (mean.size() != m2.size())
        {
            throw ConfigError("InputNormalizer::restore: size mismatch");
        }
        mean_ = std::move(mean);
        m2_ = std::move(m2);
        count_ = count;
    }
} // namespace rlb::nn
