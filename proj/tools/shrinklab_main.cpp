#include <cstdio>

int main() {
    std::puts("shrinklab: CLI pending");
    return 0;
}
