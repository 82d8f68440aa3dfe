int dot(const int a[32], const int b[32]);
int main() {
    int a[32], b[32], expect = 0;
    for (int i = 0; i < 32; i++) { a[i] = i; b[i] = 32 - i; expect += i * (32 - i); }
    return dot(a, b) == expect ? 0 : 1;
}
