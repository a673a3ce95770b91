#include "rlb/errors.hpp"
#include "rlb/nn/adam.hpp"
#include "rlb/nn/checkpoint.hpp"
#include "rlb/nn/dense.hpp"
#include "rlb/nn/gaussian.hpp"
#include "rlb/nn/normalizer.hpp"
#include "rlb/sac/model.hpp"
#include "support/suites.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

using namespace rlb;
using namespace rlb::nn;

namespace
{
    // Straightforward column-by-column re-evaluation of a DenseNet.
    Vector reference_forward(const DenseNet& net, Vector x)
    {
        for (const auto& layer : net.layers())
        {
            Vector z(layer.spec.out);
            for (int i = 0; i < layer.spec.out; ++i)
            {
                double acc = layer.bias(i);
                for (int k = 0; k < layer.spec.in; ++k)
                {
                    acc += layer.weight(i, k) * x(k);
                }
                z(i) = acc;
            }
            if (layer.spec.layer_norm)
            {
                double mean = 0.0;
                for (int i = 0; i < z.size(); ++i)
                {
                    mean += z(i);
                }
                mean /= static_cast<double>(z.size());
                double var = 0.0;
                for (int i = 0; i < z.size(); ++i)
                {
                    var += (z(i) - mean) * (z(i) - mean);
                }
                var /= static_cast<double>(z.size());
                for (int i = 0; i < z.size(); ++i)
                {
                    z(i) = layer.gain(i) * (z(i) - mean) / std::sqrt(var + kLayerNormEps) + layer.shift(i);
                }
            }
            for (int i = 0; i < z.size(); ++i)
            {
                switch (layer.spec.activation)
                {
                case Activation::relu:
                    z(i) = std::max(0.0, z(i));
                    break;
                case Activation::tanh:
                    z(i) = std::tanh(z(i));
                    break;
                case Activation::linear:
                    break;
                }
            }
            x = z;
        }
        return x;
    }
} // namespace

TEST_CASE("forward examples")
{
    std::mt19937_64 rng(1);
    const LayerSpec one[] = {{3, 3, Activation::linear, false}};
    DenseNet identity(one, rng);
    identity.layers()[0].weight.setIdentity();
    identity.layers()[0].bias.setZero();
    const Matrix x = sac::standard_normal(3, 4, rng);
    CHECK(identity.forward(x) == x);

    const LayerSpec squash[] = {{3, 2, Activation::tanh, false}};
    DenseNet constant(squash, rng);
    constant.layers()[0].weight.setZero();
    constant.layers()[0].bias << 0.3, -2.0;
    const Matrix y = constant.forward(x);
    CHECK(y(0, 2) == std::tanh(0.3));
    CHECK(y(1, 0) == std::tanh(-2.0));

    auto specs = encoder_specs(5, 8);
    specs.push_back({8, 3, Activation::tanh, false});
    const DenseNet net(specs, rng);
    const Matrix batch = sac::standard_normal(5, 6, rng);
    const Matrix out = net.forward(batch);
    for (int c = 0; c < batch.cols(); ++c)
    {
        const Vector ref = reference_forward(net, batch.col(c));
        for (int i = 0; i < ref.size(); ++i)
        {
            CHECK(std::abs(out(i, c) - ref(i)) <= 1e-12 * std::max(1.0, std::abs(ref(i))));
        }
    }
    CHECK(net.forward(batch) == out); // pure
    CHECK_THROWS_AS(net.forward(Matrix::Zero(4, 1)), ConfigError);
}

TEST_CASE("backward examples")
{
    std::mt19937_64 rng(2);
    const LayerSpec one[] = {{3, 2, Activation::linear, false}};
    DenseNet net(one, rng);
    const Matrix x = sac::standard_normal(3, 1, rng);
    const Matrix up = sac::standard_normal(2, 1, rng);
    DenseNet::Cache cache;
    net.forward(x, cache);
    net.zero_grad();
    const Matrix dx = net.backward(cache, up);
    const auto& layer = net.layers()[0];
    CHECK((layer.d_bias - up.col(0)).norm() < 1e-15);
    CHECK((layer.d_weight - up * x.transpose()).norm() < 1e-15);
    CHECK((dx - layer.weight.transpose() * up).norm() < 1e-15);

    auto specs = encoder_specs(4, 6);
    DenseNet deep(specs, rng);
    DenseNet::Cache c2;
    const Matrix xs = sac::standard_normal(4, 3, rng);
    deep.forward(xs, c2);
    deep.zero_grad();
    deep.backward(c2, Matrix::Zero(6, 3));
    for (const auto& p : deep.parameters())
    {
        for (std::size_t i = 0; i < p.size; ++i)
        {
            CHECK(p.grad[i] == 0.0);
        }
    }
}

TEST_CASE("gradient checks")
{
    const auto r = testing::gradient_suite(31);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("gaussian head")
{
    Matrix mean = Matrix::Zero(2, 1);
    Matrix log_std(2, 1);
    log_std << 0.3, -0.7;
    const auto s = gaussian_head_sample(mean, log_std, Matrix::Zero(2, 1));
    CHECK(s.action.isZero());
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const double want = (-0.3 - half_log_2pi) + (0.7 - half_log_2pi) - 2.0 * std::log(1.0 + kSquashEps);
    CHECK(s.log_prob(0) == doctest::Approx(want).epsilon(1e-14));

    Matrix far(1, 1);
    far << 40.0;
    CHECK(gaussian_head_sample(far, Matrix::Zero(1, 1), Matrix::Zero(1, 1)).action(0) == doctest::Approx(1.0));

    Matrix clamped(1, 1);
    clamped << 5.0;
    const auto c = gaussian_head_sample(Matrix::Zero(1, 1), clamped, Matrix::Ones(1, 1));
    CHECK(c.std(0) == doctest::Approx(std::exp(kLogStdMax)));
    CHECK(c.clamp_mask(0) == 0.0);
}

TEST_CASE("squashed density integrates to one")
{
    // uniform draws over (-1, 1): integral = 2 E[pi(a)]
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double mu = 0.3;
    const double log_sigma = std::log(0.5);
    const int draws = 1000000;
    Matrix mean = Matrix::Constant(1, draws, mu);
    Matrix log_std = Matrix::Constant(1, draws, log_sigma);
    Matrix noise(1, draws);
    for (int k = 0; k < draws; ++k)
    {
        noise(0, k) = (std::atanh(u(rng)) - mu) / 0.5;
    }
    const auto s = gaussian_head_sample(mean, log_std, noise);
    const double integral = 2.0 * s.log_prob.array().exp().mean();
    CHECK(std::abs(integral - 1.0) < 0.02);
}

TEST_CASE("squashed samples stay inside (-1, 1)")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> m(-3.0, 3.0);
    std::uniform_real_distribution<double> ls(kLogStdMin, 1.0);
    Matrix mean(3, 2000);
    Matrix log_std(3, 2000);
    for (int k = 0; k < mean.size(); ++k)
    {
        mean(k) = m(rng);
        log_std(k) = ls(rng);
    }
    const auto s = gaussian_head_sample(mean, log_std, sac::standard_normal(3, 2000, rng));
    CHECK(s.action.cwiseAbs().maxCoeff() < 1.0);
    CHECK(s.log_prob.allFinite());
}

TEST_CASE("adam")
{
    double value = 1.0;
    double grad = 0.0;
    Adam opt({ParamRef{&value, &grad, 1}});
    opt.step();
    CHECK(value == 1.0);

    grad = 1.0;
    Adam first({ParamRef{&value, &grad, 1}});
    first.step();
    CHECK(value - 1.0 == doctest::Approx(-1e-3).epsilon(1e-6));

    for (int k = 0; k < 100; ++k)
    {
        grad = -0.25;
        first.step();
    }
    CHECK(value > 1.0);

    grad = std::numeric_limits<double>::quiet_NaN();
    const double before = value;
    CHECK_THROWS_AS(first.step(), TrainingDivergence);
    CHECK(value == before);
}

TEST_CASE("input normalizer")
{
    InputNormalizer norm(2);
    Vector x(2);
    x << 3.0, -4.0;
    CHECK(norm.normalize(x) == x);
    for (int k = 0; k < 100; ++k)
    {
        norm.update(x);
    }
    CHECK(norm.normalize(x).cwiseAbs().maxCoeff() < 1e-9);

    InputNormalizer spread(1, 10.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(2.0, 3.0);
    for (int k = 0; k < 20000; ++k)
    {
        Vector v(1);
        v << g(rng);
        spread.update(v);
    }
    CHECK(spread.mean()(0) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::sqrt(spread.variance()(0)) == doctest::Approx(3.0).epsilon(0.05));
    Vector outlier(1);
    outlier << 1e6;
    CHECK(spread.normalize(outlier)(0) == 10.0);
}

TEST_CASE("checkpoint round trip")
{
    std::mt19937_64 rng(6);
    auto specs = encoder_specs(4, 5);
    const DenseNet a(specs, rng);
    const DenseNet b(head_specs(5, 6, 2), rng);
    InputNormalizer norm(4);
    for (int k = 0; k < 10; ++k)
    {
        norm.update(sac::standard_normal(4, 1, rng).col(0));
    }

    std::stringstream buf;
    const DenseNet* nets[] = {&a, &b};
    write_checkpoint(buf, nets, &norm);
    const Checkpoint ck = read_checkpoint(buf);
    REQUIRE(ck.nets.size() == 2);
    const Matrix x = sac::standard_normal(4, 3, rng);
    CHECK(ck.nets[0].forward(x) == a.forward(x));
    CHECK(ck.nets[1].forward(a.forward(x)) == b.forward(a.forward(x)));
    REQUIRE(ck.normalizer.has_value());
    CHECK(ck.normalizer->mean() == norm.mean());
    CHECK(ck.normalizer->count() == norm.count());

    std::stringstream bad("XXXXjunk");
    CHECK_THROWS(read_checkpoint(bad));
}
