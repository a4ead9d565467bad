#include <cstdio>
#include <filesystem>
#include <string>

#include "support/fixtures.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <output-dir>\n", argv[0]);
    return 2;
  }
  std::filesystem::path dir = argv[1];
  std::string config = testsupport::write_synthetic_dataset(dir);
  std::printf("%s\n", config.c_str());
  return 0;
}
