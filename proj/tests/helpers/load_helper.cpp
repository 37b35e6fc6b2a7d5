// Synthetic workloads for the resource monitor tests.
//   busy <seconds>        spin one core
//   alloc <mb> <seconds>  allocate, touch every page, then hold
//   sleep <seconds>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s busy|alloc|sleep ...\n", argv[0]);
    return 2;
  }
  const std::string mode = argv[1];
  using Clock = std::chrono::steady_clock;
  if (mode == "busy") {
    const auto end = Clock::now() + std::chrono::duration<double>(std::atof(argv[2]));
    volatile unsigned long x = 0;
    while (Clock::now() < end) {
      for (int i = 0; i < 10000; ++i) x = x + static_cast<unsigned long>(i);
    }
    return 0;
  }
  if (mode == "alloc" && argc >= 4) {
    const std::size_t bytes = static_cast<std::size_t>(std::atof(argv[2]) * 1024.0 * 1024.0);
    std::vector<char> block(bytes);
    // vector zero-fills, but write once more so no page stays shared
    for (std::size_t i = 0; i < bytes; i += 4096) block[i] = static_cast<char>(i);
    std::this_thread::sleep_for(std::chrono::duration<double>(std::atof(argv[3])));
    return block[bytes / 2] == 42 ? 1 : 0;
  }
  if (mode == "sleep") {
    std::this_thread::sleep_for(std::chrono::duration<double>(std::atof(argv[2])));
    return 0;
  }
  std::fprintf(stderr, "unknown mode '%s'\n", argv[1]);
  return 2;
}
