#pragma once

#include "rlb/nn/dense.hpp"

#include <cstdint>

namespace rlb::nn
{
    /// Streaming per-feature standardisation, (x - mean) / sqrt(var + 1e-5),
    /// with the result clipped to [-clip, clip]. Before the first update it
    /// passes inputs through unchanged.
    class InputNormalizer
    {
    public:
        static constexpr double kEpsilon = 1e-5;

        InputNormalizer() = default;
        explicit InputNormalizer(int features, double clip = 10.0);

        void update(const Vector& x);
        Vector normalize(const Vector& x) const;
        /// Column-wise normalisation of a batch.
        Matrix normalize(const Matrix& batch) const;

        int features() const noexcept { return static_cast<int>(mean_.size()); }
        std::uint64_t count() const noexcept { return count_; }
        const Vector& mean() const noexcept { return mean_; }
        Vector variance() const;
        double clip() const noexcept { return clip_; }

        /// Restores accumulators, used when loading checkpoints.
        void restore(Vector mean, Vector m2, std::uint64_t count);
        const Vector& m2() const noexcept { return m2_; }

    private:
        Vector mean_;
        Vector m2_; // sum of squared deviations (Welford)
        std::uint64_t count_ = 0;
        double clip_ = 10.0;
    };
} // namespace rlb::nn
