int fir(int x);
int main() {
    int last = 0;
    for (int n = 0; n < 8; n++) last = fir(1);
    return last == 36 ? 0 : 1;
}
