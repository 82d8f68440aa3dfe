int maxval(const int a[64]);
int main() {
    int a[64];
    for (int i = 0; i < 64; i++) a[i] = (i * 37) % 64;
    return maxval(a) == 63 ? 0 : 1;
}
