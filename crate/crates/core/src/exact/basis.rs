use num_complex::Complex64 as C64;

use crate::algebra::OperatorMatrix;
use crate::error::ExactError;
use crate::exact::sparse::SparseOperator;

/// Occupation states `|n1, n2, n3>` with `n1 + n2 + n3 = N`, ordered
/// lexicographically by `(n1, n2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricBasis {
    n: usize,
    states: Vec<[u32; 3]>,
    /// `offsets[n1]` = index of `(n1, 0, N - n1)`.
    offsets: Vec<usize>,
}

impl SymmetricBasis {
    pub fn new(n: usize) -> Result<Self, ExactError> {
        if n == 0 {
            return Err(ExactError::NoAtoms);
        }
        let mut states = Vec::with_capacity((n + 1) * (n + 2) / 2);
        let mut offsets = Vec::with_capacity(n + 1);
        for n1 in 0..=n {
            offsets.push(states.len());
            for n2 in 0..=(n - n1) {
                states.push([n1 as u32, n2 as u32, (n - n1 - n2) as u32]);
            }
        }
        Ok(Self { n, states, offsets })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[[u32; 3]] {
        &self.states
    }

    pub fn state(&self, index: usize) -> [u32; 3] {
        self.states[index]
    }

    pub fn index(&self, occ: [u32; 3]) -> Option<usize> {
        let [n1, n2, n3] = occ.map(|v| v as usize);
        if n1 + n2 + n3 != self.n {
            return None;
        }
        Some(self.offsets[n1] + n2)
    }

    /// Amplitudes of `|c>^{⊗N}`: `sqrt(N!/(n1! n2! n3!)) c1^n1 c2^n2 c3^n3`,
    /// evaluated in log space.
    pub fn product_state(&self, c: &[C64; 3]) -> Vec<C64> {
        let lf = log_factorials(self.n);
        self.states
            .iter()
            .map(|occ| {
                let mut log_mag = 0.5 * lf[self.n];
                let mut phase = 0.0;
                for (k, &nk) in occ.iter().enumerate() {
                    log_mag -= 0.5 * lf[nk as usize];
                    if nk > 0 {
                        let r = c[k].norm();
                        if r == 0.0 {
                            return C64::new(0.0, 0.0);
                        }
                        log_mag += nk as f64 * r.ln();
                        phase += nk as f64 * c[k].arg();
                    }
                }
                C64::from_polar(log_mag.exp(), phase)
            })
            .collect()
    }

    /// `Σ_{αβ} M_αβ a†_α a_β`, the symmetric-sector image of `Σ_i M_i`.
    pub fn collective_operator(&self, m: &OperatorMatrix) -> SparseOperator {
        let mut rows: Vec<Vec<(u32, C64)>> = vec![Vec::new(); self.dim()];
        // Fill column by column, then transpose the triplet list.
        let mut triplets = Vec::with_capacity(self.dim() * 9);
        for (col, occ) in self.states.iter().enumerate() {
            for alpha in 0..3 {
                for beta in 0..3 {
                    let v = m.entry(alpha, beta);
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    if alpha == beta {
                        triplets.push((col, col, v * occ[alpha] as f64));
                        continue;
                    }
                    if occ[beta] == 0 {
                        continue;
                    }
                    let mut target = *occ;
                    target[beta] -= 1;
                    target[alpha] += 1;
                    let amp = ((occ[beta] as f64) * (occ[alpha] as f64 + 1.0)).sqrt();
                    let row = self.index(target).expect("conserves N");
                    triplets.push((row, col, v * amp));
                }
            }
        }
        triplets.sort_by_key(|a| (a.0, a.1));
        for (r, c, v) in triplets {
            let row = &mut rows[r];
            match row.last_mut() {
                Some(last) if last.0 as usize == c => last.1 += v,
                _ => row.push((c as u32, v)),
            }
        }
        SparseOperator::from_rows(self.dim(), rows)
    }
}

pub(crate) fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Full `3^N` product basis; site 0 is the most significant base-3 digit and
/// digit `d` stands for level `d + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FullBasis {
    n: usize,
}

impl FullBasis {
    pub fn new(n: usize, cap: usize) -> Result<Self, ExactError> {
        if n == 0 {
            return Err(ExactError::NoAtoms);
        }
        if n > cap {
            return Err(ExactError::ExceedsCap { n, cap });
        }
        Ok(Self { n })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        3usize.pow(self.n as u32)
    }

    /// Place value of site `i`.
    pub fn stride(&self, site: usize) -> usize {
        3usize.pow((self.n - 1 - site) as u32)
    }

    pub fn digits(&self, mut index: usize) -> Vec<u8> {
        let mut d = vec![0u8; self.n];
        for site in (0..self.n).rev() {
            d[site] = (index % 3) as u8;
            index /= 3;
        }
        d
    }

    pub fn product_state(&self, c: &[C64; 3]) -> Vec<C64> {
        let mut psi = vec![C64::new(1.0, 0.0)];
        for _ in 0..self.n {
            psi = psi
                .iter()
                .flat_map(|&a| c.iter().map(move |&b| a * b))
                .collect();
        }
        psi
    }

    /// `Σ_i M_i` embedded site by site.
    pub fn collective_operator(&self, m: &OperatorMatrix) -> SparseOperator {
        let dim = self.dim();
        let mut rows = Vec::with_capacity(dim);
        for row in 0..dim {
            let digits = self.digits(row);
            let mut entries: Vec<(u32, C64)> = Vec::new();
            for site in 0..self.n {
                let r = digits[site] as usize;
                for c in 0..3 {
                    let v = m.entry(r, c);
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let col = row + c * self.stride(site) - r * self.stride(site);
                    entries.push((col as u32, v));
                }
            }
            rows.push(merge_sorted(entries));
        }
        SparseOperator::from_rows(dim, rows)
    }
}

pub(crate) fn merge_sorted(mut entries: Vec<(u32, C64)>) -> Vec<(u32, C64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, C64)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}
