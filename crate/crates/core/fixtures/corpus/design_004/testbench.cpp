long mac(const short a[16], const short b[16]);
int main() {
    short a[16], b[16];
    for (int i = 0; i < 16; i++) { a[i] = 1000; b[i] = 1000; }
    return mac(a, b) == 16000000L ? 0 : 1;
}
