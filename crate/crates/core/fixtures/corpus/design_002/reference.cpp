// @mock base_cycles=32 base_lut=300 base_ff=200 base_dsp=1 base_power_mw=35
int dot(const int a[32], const int b[32]) {
    int acc = 0;
    for (int i = 0; i < 32; i++) {
        acc += a[i] * b[i];
    }
    return acc;
}
