// @mock base_cycles=512 base_lut=1800 base_ff=1500 base_dsp=4 base_bram=2 base_power_mw=120
void matmul(const int a[8][8], const int b[8][8], int c[8][8]) {
    for (int i = 0; i < 8; i++) {
        for (int j = 0; j < 8; j++) {
            int acc = 0;
            for (int k = 0; k < 8; k++) {
                acc += a[i][k] * b[k][j];
            }
            c[i][j] = acc;
        }
    }
}
