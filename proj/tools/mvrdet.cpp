#include <cstdio>

int main() {
  std::printf("mvrdet: CLI under construction\n");
  return 0;
}
