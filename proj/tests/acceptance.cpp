#include <cstdio>

int main() {
  std::fprintf(stderr, "acceptance harness not implemented yet\n");
  return 1;
}
