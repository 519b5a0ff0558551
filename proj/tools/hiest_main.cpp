#include <iostream>

int main() {
    std::cout << "hiest: CLI under construction\n";
    return 0;
}
