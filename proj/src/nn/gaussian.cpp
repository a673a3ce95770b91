#include "rlb/nn/gaussian.hpp"

#include "rlb/errors.hpp"

#include <cmath>
#include <numbers>

namespace rlb::nn
{
    SquashedSample gaussian_head_sample(const Matrix& mean, const Matrix& log_std,
                                        const Matrix& noise)
    {
        if (mean.rows() != log_std.rows() || mean.cols() != log_std.cols() ||
            mean.rows() != noise.rows() || mean.cols() != noise.cols())
        {
            throw ConfigError("gaussian_head_sample: shape mismatch");
        }
        SquashedSample s;
        s.noise = noise;
        const auto inside = (log_std.array() >= kLogStdMin) && (log_std.array() <= kLogStdMax);
        s.clamp_mask = inside.cast<double>().matrix();
        const Matrix clamped = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
        s.std = clamped.array().exp().matrix();
        const Matrix pre = mean + s.std.cwiseProduct(noise);
        s.action = pre.array().tanh().matrix();

        const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
        const Matrix per_dim = (-0.5 * noise.array().square() - clamped.array() - half_log_2pi -
                                (1.0 - s.action.array().square() + kSquashEps).log())
                                   .matrix();
        s.log_prob = per_dim.colwise().sum();
        return s;
    }

    HeadGradient gaussian_head_backward(const SquashedSample& sample, const Matrix& d_action,
                                        const RowVector& d_log_prob)
    {
        const auto a = sample.action.array();
        const auto one_minus_sq = 1.0 - a.square();
        // d log_prob / d pre-squash through the tanh correction term
        const Eigen::ArrayXXd correction = 2.0 * a * one_minus_sq / (one_minus_sq + kSquashEps);
        const Eigen::ArrayXXd d_logp = d_log_prob.replicate(sample.action.rows(), 1).array();

        const Eigen::ArrayXXd d_pre = d_action.array() * one_minus_sq + d_logp * correction;
        HeadGradient g;
        g.d_mean = d_pre.matrix();
        g.d_log_std = ((d_pre * sample.std.array() * sample.noise.array() - d_logp) *
                       sample.clamp_mask.array())
                          .matrix();
        return g;
    }
} // namespace rlb::nn
