#include "rlb/nn/checkpoint.hpp"

#include "rlb/errors.hpp"

#include <bit>
#include <istream>
#include <ostream>
#include <string>

namespace rlb::nn
{
    namespace
    {
        template <typename U>
        void write_le(std::ostream& out, U v)
        {
            char bytes[sizeof(U)];
            for (std::size_t i = 0; i < sizeof(U); ++i)
            {
                bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
            }
            out.write(bytes, sizeof(U));
        }

        template <typename U>
        U read_le(std::istream& in)
        {
            unsigned char bytes[sizeof(U)];
            in.read(reinterpret_cast<char*>(bytes), sizeof(U));
            if (!in)
            {
                throw ConfigError("checkpoint: unexpected end of file");
            }
            U v = 0;
            for (std::size_t i = 0; i < sizeof(U); ++i)
            {
                v |= static_cast<U>(bytes[i]) << (8 * i);
            }
            return v;
        }

        void write_vector(std::ostream& out, const Vector& v)
        {
            for (Eigen::Index i = 0; i < v.size(); ++i)
            {
                write_f64(out, v(i));
            }
        }

        Vector read_vector(std::istream& in, Eigen::Index n)
        {
            Vector v(n);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                v(i) = read_f64(in);
            }
            return v;
        }
    } // namespace

    void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
    void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
    void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }
    std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
    std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
    double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

    void write_net(std::ostream& out, const DenseNet& net)
    {
        const auto layers = net.layers();
        write_u32(out, static_cast<std::uint32_t>(layers.size()));
        for (const auto& layer : layers)
        {
            write_u32(out, static_cast<std::uint32_t>(layer.spec.in));
            write_u32(out, static_cast<std::uint32_t>(layer.spec.out));
            out.put(static_cast<char>(layer.spec.activation));
            out.put(layer.spec.layer_norm ? 1 : 0);
        }
        for (const auto& layer : layers)
        {
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            {
                for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                {
                    write_f64(out, layer.weight(r, c));
                }
            }
            write_vector(out, layer.bias);
            if (layer.spec.layer_norm)
            {
                write_vector(out, layer.gain);
                write_vector(out, layer.shift);
            }
        }
    }

    DenseNet read_net(std::istream& in)
    {
        const std::uint32_t count = read_u32(in);
        if (count == 0 || count > 1024)
        {
            throw ConfigError("checkpoint: implausible layer count " + std::to_string(count));
        }
        std::vector<LayerSpec> specs(count);
        for (auto& s : specs)
        {
            s.in = static_cast<int>(read_u32(in));
            s.out = static_cast<int>(read_u32(in));
            const int act = in.get();
            const int norm = in.get();
            if (!in || act < 0 || act > 2 || norm < 0 || norm > 1)
            {
                throw ConfigError("checkpoint: corrupt layer spec");
            }
            s.activation = static_cast<Activation>(act);
            s.layer_norm = norm == 1;
        }
        std::mt19937_64 unused(0);
        DenseNet net(specs, unused);
        for (auto& layer : net.layers())
        {
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            {
                for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                {
                    layer.weight(r, c) = read_f64(in);
                }
            }
            layer.bias = read_vector(in, layer.bias.size());
            if (layer.spec.layer_norm)
            {
                layer.gain = read_vector(in, layer.gain.size());
                layer.shift = read_vector(in, layer.shift.size());
            }
        }
        return net;
    }

    void write_normalizer(std::ostream& out, const InputNormalizer& norm)
    {
        write_u32(out, static_cast<std::uint32_t>(norm.features()));
        write_u64(out, norm.count());
        write_vector(out, norm.mean());
        write_vector(out, norm.m2());
        write_f64(out, norm.clip());
    }

    InputNormalizer read_normalizer(std::istream& in)
    {
        const auto features = static_cast<int>(read_u32(in));
        const std::uint64_t count = read_u64(in);
        Vector mean = read_vector(in, features);
        Vector m2 = read_vector(in, features);
        const double clip = read_f64(in);
        InputNormalizer norm(features, clip);
        norm.restore(std::move(mean), std::move(m2), count);
        return norm;
    }

    void write_checkpoint(std::ostream& out, std::span<const DenseNet* const> nets,
                          const InputNormalizer* normalizer)
    {
        out.write(kCheckpointMagic, 4);
        write_u32(out, kCheckpointVersion);
        write_u32(out, static_cast<std::uint32_t>(nets.size()));
        for (const DenseNet* net : nets)
        {
            write_net(out, *net);
        }
        out.put(normalizer != nullptr ? 1 : 0);
        if (normalizer != nullptr)
        {
            write_normalizer(out, *normalizer);
        }
    }

    Checkpoint read_checkpoint(std::istream& in)
    {
        char magic[4];
        in.read(magic, 4);
        if (!in || std::string(magic, 4) != std::string(kCheckpointMagic, 4))
        {
            throw ConfigError("checkpoint: bad magic");
        }
        const std::uint32_t version = read_u32(in);
        if (version != kCheckpointVersion)
        {
            throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
        }
        Checkpoint ck;
        const std::uint32_t count = read_u32(in);
        for (std::uint32_t i = 0; i < count; ++i)
        {
            ck.nets.push_back(read_net(in));
        }
        const int has_norm = in.get();
        if (has_norm == 1)
        {
            ck.normalizer = read_normalizer(in);
        }
        else if (has_norm != 0)
        {
            throw ConfigError("checkpoint: corrupt normalizer flag");
        }
        return ck;
    }
} // namespace rlb::nn
