void saxpy(int alpha, const int x[64], int y[64]);
int main() {
    int x[64], y[64];
    for (int i = 0; i < 64; i++) { x[i] = i; y[i] = 1; }
    saxpy(3, x, y);
    for (int i = 0; i < 64; i++) {
        if (y[i] != 3 * i + 1) return 1;
    }
    return 0;
}
