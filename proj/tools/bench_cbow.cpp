#include <cstdio>
#include <cstdlib>

#include "srcsel/benchmark.hpp"

int main(int argc, char** argv) {
  const std::size_t dim = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 100;
  const auto k = static_cast<std::uint32_t>(argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 5);
  const auto window = static_cast<std::uint32_t>(argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 5);
  const std::uint64_t n = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 3000000;
  const auto r = srcsel::measure_cbow_throughput(dim, k, window, n);
  std::printf("dim=%zu k=%u window=%u samples=%llu seconds=%.3f samples/s=%.0f\n", dim, k, window,
              static_cast<unsigned long long>(r.samples), r.seconds, r.samples_per_second);
  return 0;
}
