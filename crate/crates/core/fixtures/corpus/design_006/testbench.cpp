void matmul(const int a[8][8], const int b[8][8], int c[8][8]);
int main() {
    int a[8][8], b[8][8], c[8][8];
    for (int i = 0; i < 8; i++)
        for (int j = 0; j < 8; j++) { a[i][j] = i + j; b[i][j] = i == j ? 1 : 0; }
    matmul(a, b, c);
    for (int i = 0; i < 8; i++)
        for (int j = 0; j < 8; j++)
            if (c[i][j] != i + j) return 1;
    return 0;
}
