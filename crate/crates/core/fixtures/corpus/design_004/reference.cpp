// @mock base_cycles=16 base_lut=280 base_ff=180 base_dsp=1 base_power_mw=30
long mac(const short a[16], const short b[16]) {
    long acc = 0;
    for (int i = 0; i < 16; i++) {
        acc += (long)a[i] * b[i];
    }
    return acc;
}
