#ifndef SSSDET_COMMON_HPP
#define SSSDET_COMMON_HPP

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sssdet {

// Invalid model/config description (bad cfg file, shape mismatch, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken input data (labels, manifests, images, detection files).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / stream failures, malformed binary files.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

template <typename... Args>
std::string strcat_msg(Args&&... args)
{
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

// Deterministic splitmix64 RNG. Floats/ints derive from raw draws so
// results do not depend on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(0x9E3779B97F4A7C15ULL ^ seed)
    {
        // splitmix64 warmup so nearby seeds diverge
        next();
        next();
    }

    uint64_t next()
    {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

    float uniform(float lo, float hi)
    {
        return lo + static_cast<float>(uniform01() * (static_cast<double>(hi) - lo));
    }

    // [0, n)
    int uniform_int(int n) { return static_cast<int>(uniform01() * n); }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// Global worker-thread count for kernel-internal parallelism.
int thread_count();
void set_thread_count(int n);

// Splits [0, n) into contiguous chunks, one per worker. fn(begin, end) runs
// on each chunk; every index is processed by exactly one thread, so results
// are identical for any thread count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

} // namespace sssdet

#endif
