#pragma once

#include "rlb/nn/dense.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace rlb::sac
{
    struct Transition
    {
        nn::Vector state;
        nn::Vector action; // squashed, in (-1, 1)^n
        double reward = 0.0;
        nn::Vector next_state;
        bool done = false;
    };

    /// Fixed-capacity ring buffer; the oldest transition is evicted first.
    class ReplayBuffer
    {
    public:
        explicit ReplayBuffer(std::size_t capacity = 3000);

        void push(Transition t);
        std::size_t size() const noexcept { return items_.size(); }
        std::size_t capacity() const noexcept { return capacity_; }
        /// Uniform indices with replacement.
        std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;
        /// Element i in insertion order (0 = oldest retained).
        const Transition& at(std::size_t i) const;
        void clear();

    private:
        std::size_t capacity_;
        std::vector<Transition> items_;
        std::size_t head_ = 0; // slot of the oldest item once full
    };
} // namespace rlb::sac
