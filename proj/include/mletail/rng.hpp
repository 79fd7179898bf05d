#pragma once
// Deterministic random streams.  A child stream is derived from
// (master seed, stream index) by splitmix64 mixing, so stream i always sees
// the same draws no matter how work is scheduled across workers.

#include <cstdint>
#include <random>

namespace mletail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t s = master_seed ^ (0x517cc1b727220a95ULL * (stream_index + 1));
    std::uint32_t words[8];
    for (int i = 0; i < 4; ++i) {
      std::uint64_t w = splitmix64(s);
      words[2 * i] = static_cast<std::uint32_t>(w);
      words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
    }
    std::seed_seq seq(words, words + 8);
    eng_.seed(seq);
  }

  // uniform on the open interval (0, 1)
  double uniform() {
    double u;
    do {
      u = unit_(eng_);
    } while (u <= 0.0);
    return u;
  }
  double normal() { return normal_(eng_); }
  double exponential() { return exp_(eng_); }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exp_{1.0};
};

}  // namespace mletail
