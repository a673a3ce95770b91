#pragma once

#include "rlb/nn/dense.hpp"
#include "rlb/nn/normalizer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace rlb::nn
{
    // Layout is documented in docs/checkpoint_format.md. All integers and
    // floats are little-endian regardless of host byte order.
    inline constexpr char kCheckpointMagic[4] = {'R', 'L', 'B', 'N'};
    inline constexpr std::uint32_t kCheckpointVersion = 1;

    void write_u32(std::ostream& out, std::uint32_t v);
    void write_u64(std::ostream& out, std::uint64_t v);
    void write_f64(std::ostream& out, double v);
    std::uint32_t read_u32(std::istream& in);
    std::uint64_t read_u64(std::istream& in);
    double read_f64(std::istream& in);

    /// Layer specs then parameters, weights row-major.
    void write_net(std::ostream& out, const DenseNet& net);
    DenseNet read_net(std::istream& in);

    void write_normalizer(std::ostream& out, const InputNormalizer& norm);
    InputNormalizer read_normalizer(std::istream& in);

    /// A checkpoint file: magic, version, net count, nets, then an optional
    /// normalizer block (flag byte first).
    struct Checkpoint
    {
        std::vector<DenseNet> nets;
        std::optional<InputNormalizer> normalizer;
    };

    void write_checkpoint(std::ostream& out, std::span<const DenseNet* const> nets,
                          const InputNormalizer* normalizer);
    Checkpoint read_checkpoint(std::istream& in);
} // namespace rlb::nn
