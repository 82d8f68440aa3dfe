// @mock base_cycles=32 base_lut=120 base_ff=60 base_power_mw=10
unsigned popcount(unsigned x) {
    unsigned count = 0;
    for (int i = 0; i < 32; i++) {
        count += (x >> i) & 1u;
    }
    return count;
}
