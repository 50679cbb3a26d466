#pragma once

#include <cstddef>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>

namespace facetpath {

// Bounded least-recently-used map; every operation takes the one mutex.
template <class Key, class Value, class Hash = std::hash<Key>>
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

    std::optional<Value> get(const Key& key) {
        std::lock_guard lock(mu_);
        auto it = index_.find(key);
        if (it == index_.end()) {
            ++misses_;
            return std::nullopt;
        }
        ++hits_;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    void put(const Key& key, Value value) {
        std::lock_guard lock(mu_);
        if (capacity_ == 0) return;
        auto it = index_.find(key);
        if (it != index_.end()) {
            it->second->second = std::move(value);
            order_.splice(order_.begin(), order_, it->second);
            return;
        }
        if (index_.size() >= capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
        order_.emplace_front(key, std::move(value));
        index_.emplace(key, order_.begin());
    }

    bool contains(const Key& key) const {
        std::lock_guard lock(mu_);
        return index_.contains(key);
    }

    void clear() {
        std::lock_guard lock(mu_);
        order_.clear();
        index_.clear();
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return index_.size();
    }
    std::size_t capacity() const { return capacity_; }
    std::size_t hits() const {
        std::lock_guard lock(mu_);
        return hits_;
    }
    std::size_t misses() const {
        std::lock_guard lock(mu_);
        return misses_;
    }

private:
    using Entry = std::pair<Key, Value>;
    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::list<Entry> order_;
    std::unordered_map<Key, typename std::list<Entry>::iterator, Hash> index_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace facetpath
