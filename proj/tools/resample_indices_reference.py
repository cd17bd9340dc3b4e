# Reference MT19937-64 and resample-index stream, independent of the C++ library.
# Usage: resample_indices_reference.py N RESAMPLES SEED > indices.txt
import sys
class MT64:
    NN, MM = 312, 156
    MATRIX_A = 0xB5026F5AA96619E9
    UM, LM = 0xFFFFFFFF80000000, 0x7FFFFFFF
    M64 = (1 << 64) - 1
    def __init__(self, seed):
        self.mt = [0] * self.NN
        self.mt[0] = seed & self.M64
        for i in range(1, self.NN):
            self.mt[i] = (6364136223846793005 * (self.mt[i-1] ^ (self.mt[i-1] >> 62)) + i) & self.M64
        self.mti = self.NN
    def next(self):
        if self.mti >= self.NN:
            mt = self.mt
            for i in range(self.NN):
                x = (mt[i] & self.UM) | (mt[(i+1) % self.NN] & self.LM)
                xa = x >> 1
                if x & 1: xa ^= self.MATRIX_A
                mt[i] = mt[(i + self.MM) % self.NN] ^ xa
            self.mti = 0
        x = self.mt[self.mti]; self.mti += 1
        x ^= (x >> 29) & 0x5555555555555555
        x ^= (x << 17) & 0x71D67FFFEDA60000
        x ^= (x << 37) & 0xFFF7EEE000000000
        x ^= x >> 43
        return x & self.M64
g = MT64(5489)
for _ in range(9999): g.next()
assert g.next() == 9981545732273789042
n, B, seed = int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])
g = MT64(seed)
out = sys.stdout
for b in range(B):
    out.write(" ".join(str((g.next() * n) >> 64) for _ in range(n)) + "\n")
