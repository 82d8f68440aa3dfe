// @mock base_cycles=64 base_lut=300 base_ff=260 base_dsp=1 base_power_mw=38
void saxpy(int alpha, const int x[64], int y[64]) {
    for (int i = 0; i < 64; i++) {
        y[i] = alpha * x[i] + y[i];
    }
}
