// @mock base_cycles=128 base_lut=200 base_ff=150 base_power_mw=25
void relu(const int in[128], int out[128]) {
    for (int i = 0; i < 128; i++) {
        out[i] = in[i] > 0 ? in[i] : 0;
    }
}
