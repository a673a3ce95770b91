#include "rlb/nn/adam.hpp"

#include "rlb/errors.hpp"

#include <cmath>
#include <string>

namespace rlb::nn
{
    Adam::Adam(std::vector<ParamRef> params, AdamOptions options)
        : params_(std::move(params)), options_(options)
    {
        for (const auto& p : params_)
        {
            first_.emplace_back(p.size, 0.0);
            second_.emplace_back(p.size, 0.0);
        }
    }

    void Adam::step()
    {
        for (std::size_t b = 0; b < params_.size(); ++b)
        {
            const ParamRef& p = params_[b];
            for (std::size_t i = 0; i < p.size; ++i)
            {
                if (!std::isfinite(p.grad[i]))
                {
                    throw TrainingDivergence("Adam: non-finite gradient in parameter block " +
                                             std::to_string(b) + " at index " + std::to_string(i));
                }
            }
        }

        ++steps_;
        const double t = static_cast<double>(steps_);
        const double correction1 = 1.0 - std::pow(options_.beta1, t);
        const double correction2 = 1.0 - std::pow(options_.beta2, t);
        for (std::size_t b = 0; b < params_.size(); ++b)
        {
            const ParamRef& p = params_[b];
            auto& m = first_[b];
            auto& v = second_[b];
            for (std::size_t i = 0; i < p.size; ++i)
            {
                const double g = p.grad[i];
                m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
                v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
                const double m_hat = m[i] / correction1;
                const double v_hat = v[i] / correction2;
                p.value[i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
            }
        }
    }
} // namespace rlb::nn
