#include <iostream>

int main() {
  std::cout << "qmscat cli placeholder\n";
  return 0;
}
