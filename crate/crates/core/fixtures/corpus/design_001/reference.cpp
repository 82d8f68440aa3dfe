// @mock base_cycles=64 base_lut=400 base_ff=250 base_power_mw=40
void vadd(const int a[64], const int b[64], int c[64]) {
    for (int i = 0; i < 64; i++) {
        c[i] = a[i] + b[i];
    }
}
