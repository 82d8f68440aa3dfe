// @mock base_cycles=16 base_lut=350 base_ff=400 base_dsp=2 base_power_mw=45
int fir(int x) {
    static int shift[8] = {0};
    const int coeff[8] = {1, 2, 3, 4, 5, 6, 7, 8};
    int acc = 0;
    for (int i = 7; i > 0; i--) {
        shift[i] = shift[i - 1];
    }
    shift[0] = x;
    for (int i = 0; i < 8; i++) {
        acc += shift[i] * coeff[i];
    }
    return acc;
}
