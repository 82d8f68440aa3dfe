// @mock base_cycles=128 base_lut=90 base_ff=70 base_power_mw=12
unsigned char crc8(const unsigned char data[16]) {
    unsigned char crc = 0;
    for (int i = 0; i < 16; i++) {
        crc ^= data[i];
        for (int b = 0; b < 8; b++) {
            crc = (crc & 0x80) ? (unsigned char)((crc << 1) ^ 0x07) : (unsigned char)(crc << 1);
        }
    }
    return crc;
}
