// Regenerates the bundled synthetic mini-dataset:
//   faraway_make_fixture <output dir> [seed]
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include "faraway/error.hpp"
#include "faraway/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: faraway_make_fixture <output dir> [seed]\n";
    return 2;
  }
  std::uint64_t seed = 7;
  if (argc == 3) seed = std::strtoull(argv[2], nullptr, 10);
  try {
    const auto ds = faraway::synthetic::write_dataset(faraway::synthetic::mini_scenes(), argv[1], seed);
    std::cout << "wrote " << ds.frames.size() << " frames, " << ds.objects.size()
              << " labelled objects to " << argv[1] << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
