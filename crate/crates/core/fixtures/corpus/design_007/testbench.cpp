unsigned popcount(unsigned x);
int main() {
    if (popcount(0u) != 0) return 1;
    if (popcount(0xFFFFFFFFu) != 32) return 1;
    return popcount(0x5u) == 2 ? 0 : 1;
}
