#include <cstdio>

int main() {
  std::puts("fer: placeholder");
  return 0;
}
