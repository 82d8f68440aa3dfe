// @mock base_cycles=64 base_lut=220 base_ff=140 base_power_mw=20
int maxval(const int a[64]) {
    int best = a[0];
    for (int i = 1; i < 64; i++) {
        if (a[i] > best) best = a[i];
    }
    return best;
}
