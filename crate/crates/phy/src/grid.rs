use num_complex::Complex64;

/// Complex resource grid indexed by (OFDM symbol, subcarrier, antenna).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    symbols: usize,
    subcarriers: usize,
    antennas: usize,
    data: Vec<Complex64>,
}

impl Grid {
    pub fn zeros(symbols: usize, subcarriers: usize, antennas: usize) -> Self {
        Grid {
            symbols,
            subcarriers,
            antennas,
            data: vec![Complex64::new(0.0, 0.0); symbols * subcarriers * antennas],
        }
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    #[inline]
    pub fn index(&self, m: usize, n: usize, r: usize) -> usize {
        debug_assert!(m < self.symbols && n < self.subcarriers && r < self.antennas);
        (m * self.subcarriers + n) * self.antennas + r
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, r: usize) -> Complex64 {
        self.data[self.index(m, n, r)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, r: usize, v: Complex64) {
        let i = self.index(m, n, r);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.symbols == other.symbols
            && self.subcarriers == other.subcarriers
            && self.antennas == other.antennas
    }
}
