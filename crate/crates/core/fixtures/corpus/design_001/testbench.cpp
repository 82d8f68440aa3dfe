#include <cstdio>
void vadd(const int a[64], const int b[64], int c[64]);
int main() {
    int a[64], b[64], c[64];
    for (int i = 0; i < 64; i++) { a[i] = i; b[i] = 2 * i; }
    vadd(a, b, c);
    for (int i = 0; i < 64; i++) {
        if (c[i] != 3 * i) { std::printf("mismatch at %d\n", i); return 1; }
    }
    return 0;
}
