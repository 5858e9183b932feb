use num_complex::Complex64;

use super::Network;

/// Dense bus admittance matrix built from series branch admittances.
#[derive(Clone, Debug)]
pub struct AdmittanceMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).re
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).im
    }

    /// `I = Y V`
    pub fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

/// `Y[i][i] = Σ y_k` over incident branches, `Y[i][j] = −y_k` per branch.
pub fn build_ybus(net: &Network) -> AdmittanceMatrix {
    let n = net.num_buses();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for br in &net.branches {
        let y = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let (f, t) = (br.from, br.to);
        data[f * n + f] += y;
        data[t * n + t] += y;
        data[f * n + t] -= y;
        data[t * n + f] -= y;
    }
    AdmittanceMatrix { n, data }
}
