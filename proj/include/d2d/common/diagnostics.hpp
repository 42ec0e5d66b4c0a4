#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace d2d {

// Collects non-fatal warnings emitted by pipeline stages. Stages append; the
// run manifest persists the list in order of emission.
class Warnings {
public:
    void add(std::string stage, std::string message)
    {
        std::lock_guard lock(mutex_);
        items_.push_back(stage + ": " + message);
    }

    std::vector<std::string> items() const
    {
        std::lock_guard lock(mutex_);
        return items_;
    }

    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return items_.size();
    }

    bool contains(const std::string& needle) const
    {
        std::lock_guard lock(mutex_);
        for (const auto& w : items_) {
            if (w.find(needle) != std::string::npos) {
                return true;
            }
        }
        return false;
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> items_;
};

} // namespace d2d
