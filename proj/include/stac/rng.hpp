#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string_view>

#include "stac/error.hpp"

namespace stac {

/// splitmix64 step; used both as a mixing hash and to derive stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Purposes a run draws randomness for. Each gets its own stream so that
/// paired runs (e.g. markovian vs iid with the same seed) consume variates
/// from aligned sources.
enum class StreamPurpose : std::uint64_t {
    Action = 1,
    Transition = 2,
    StationaryDraw = 3,
};

/// Documented splitting rule: absorb (master, run_index, purpose) through
/// successive splitmix64 steps. Any (master, run, purpose) triple maps to a
/// stable 64-bit stream seed independent of evaluation order elsewhere.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t run_index,
                                        std::uint64_t purpose) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0x6a09e667f3bcc909ULL + run_index;
    splitmix64(s);
    s ^= 0xbb67ae8584caa73bULL + purpose;
    return splitmix64(s);
}

inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t run_index,
                                        StreamPurpose purpose) {
    return derive_stream_seed(master, run_index, static_cast<std::uint64_t>(purpose));
}

/// Source of uniform variates in [0, 1). Virtual so tests can script exact
/// variate sequences against the same runner code paths.
class UniformStream {
public:
    virtual ~UniformStream() = default;
    virtual double next() = 0;
};

/// mt19937_64 is bit-exact across conforming standard libraries; the mapping
/// to [0,1) uses the top 53 bits directly instead of
/// std::uniform_real_distribution, whose output is implementation-defined.
class Mt64Stream final : public UniformStream {
public:
    explicit Mt64Stream(std::uint64_t seed) : gen_(seed) {}

    double next() override {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

private:
    std::mt19937_64 gen_;
};

/// Replays a fixed variate script; throws when exhausted.
class ScriptedStream final : public UniformStream {
public:
    explicit ScriptedStream(std::span<const double> values)
        : values_(values.begin(), values.end()) {}

    double next() override {
        require(!values_.empty(), ErrorKind::Parameter, "scripted stream exhausted");
        double v = values_.front();
        values_.pop_front();
        return v;
    }

private:
    std::deque<double> values_;
};

/// Inverse-CDF draw from a finite distribution given one uniform variate.
/// Boundary ties resolve toward the lower index; zero-probability entries
/// are never returned.
template <typename ProbsLike>
int sample_categorical(const ProbsLike& probs, double u) {
    const int n = static_cast<int>(probs.size());
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = probs[i];
        if (p <= 0.0) continue;
        cum += p;
        if (u <= cum) return i;
    }
    for (int i = n - 1; i >= 0; --i)
        if (probs[i] > 0.0) return i;
    fail(ErrorKind::Parameter, "sample_categorical: empty distribution");
}

} // namespace stac
