#include "rlb/sac/replay_buffer.hpp"

#include "rlb/errors.hpp"

namespace rlb::sac
{
    ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity)
    {
        if (capacity_ == 0)
        {
            throw ConfigError("replay buffer capacity must be positive");
        }
        items_.reserve(capacity_);
    }

    void ReplayBuffer::push(Transition t)
    {
        if (items_.size() < capacity_)
        {
            items_.push_back(std::move(t));
            return;
        }
        items_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }

    std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count,
                                                          std::mt19937_64& rng) const
    {
        if (items_.empty())
        {
            throw InvariantError("ReplayBuffer: sampling from an empty buffer");
        }
        std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
        std::vector<std::size_t> out(count);
        for (auto& i : out)
        {
            i = pick(rng);
        }
        return out;
    }

    const Transition& ReplayBuffer::at(std::size_t i) const
    {
        if (i >= items_.size())
        {
            throw InvariantError("ReplayBuffer: index out of range");
        }
        return items_[(head_ + i) % items_.size()];
    }

    void ReplayBuffer::clear()
    {
        items_.clear();
        head_ = 0;
    }
} // namespace rlb::sac
