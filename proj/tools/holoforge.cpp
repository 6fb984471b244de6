#include <cstdio>

int main() {
    std::puts("holoforge: cli under construction");
    return 0;
}
