#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fer {

// splitmix64. Fixtures and tests must be reproducible bit-for-bit across
// platforms, which the standard <random> distributions do not guarantee.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // inclusive bounds
  int next_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  // [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
  uint64_t state_;
};

std::vector<uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const void* data, size_t size);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fer
