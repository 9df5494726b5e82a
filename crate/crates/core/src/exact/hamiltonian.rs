use num_complex::Complex64 as C64;

use crate::algebra::{lambda, OperatorMatrix};
use crate::error::ExactError;
use crate::exact::basis::{merge_sorted, FullBasis, SymmetricBasis};
use crate::exact::sparse::SparseOperator;
use crate::lattice::HamiltonianSpec;

/// Single-site drive `Ω D_xy + (Ω₁/2)(Λ¹² + Λ²¹) + (Ω₂/2)(Λ²³ + Λ³²)`.
pub fn drive_operator(omega: f64, omega1: f64, omega2: f64) -> OperatorMatrix {
    (lambda(1, 3) + lambda(3, 1)) * omega
        + (lambda(1, 2) + lambda(2, 1)) * (0.5 * omega1)
        + (lambda(2, 3) + lambda(3, 2)) * (0.5 * omega2)
}

/// All-to-all Hamiltonian in the symmetric sector with uniform `J1 = j1`:
///
/// `H = J1[(T²¹T¹² - N₂) + Jr (T³²T²³ - N₃)] + drives`.
///
/// Exchange preserves every occupation, so the interaction is diagonal with
/// entries `J1 (n₁n₂ + Jr n₂n₃)`.
pub fn collective_hamiltonian(
    basis: &SymmetricBasis,
    j1: f64,
    jr: f64,
    omega: f64,
    legacy: (f64, f64),
) -> Result<SparseOperator, ExactError> {
    if !(jr.is_finite() && j1.is_finite() && omega.is_finite()) {
        return Err(ExactError::NonFinite);
    }
    let diag: Vec<(usize, usize, C64)> = basis
        .states()
        .iter()
        .enumerate()
        .map(|(i, &[n1, n2, n3])| {
            let (n1, n2, n3) = (n1 as f64, n2 as f64, n3 as f64);
            (i, i, C64::new(j1 * (n1 * n2 + jr * n2 * n3), 0.0))
        })
        .collect();
    let interaction = SparseOperator::from_triplets(basis.dim(), diag);
    let drive = drive_operator(omega, legacy.0, legacy.1);
    if drive.frobenius_norm() == 0.0 {
        return Ok(interaction);
    }
    Ok(interaction.add_scaled(&basis.collective_operator(&drive), C64::new(1.0, 0.0)))
}

/// `Σ_{i≠j} [J1_ij Λ²¹_i Λ¹²_j + J2_ij Λ³²_i Λ²³_j] + Σ_i drive_i` on `3^N`.
pub fn full_hamiltonian(spec: &HamiltonianSpec, cap: usize) -> Result<SparseOperator, ExactError> {
    let c = &spec.couplings;
    let n = c.n_sites();
    let basis = FullBasis::new(n, cap)?;
    let drive = drive_operator(spec.drive_omega, spec.omega1, spec.omega2);
    let dim = basis.dim();
    let strides: Vec<usize> = (0..n).map(|s| basis.stride(s)).collect();
    let mut rows = Vec::with_capacity(dim);
    for row in 0..dim {
        let d = basis.digits(row);
        let mut entries: Vec<(u32, C64)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                // <row| Λ²¹_i Λ¹²_j |col>: row has (i: level 2, j: level 1), col swaps them.
                if d[i] == 1 && d[j] == 0 && c.j1[(i, j)] != 0.0 {
                    let col = row - strides[i] + strides[j];
                    entries.push((col as u32, C64::new(c.j1[(i, j)], 0.0)));
                }
                // <row| Λ³²_i Λ²³_j |col>: row has (i: level 3, j: level 2).
                if d[i] == 2 && d[j] == 1 && c.j2[(i, j)] != 0.0 {
                    let col = row - strides[i] + strides[j];
                    entries.push((col as u32, C64::new(c.j2[(i, j)], 0.0)));
                }
            }
            let r = d[i] as usize;
            for cc in 0..3 {
                let v = drive.entry(r, cc);
                if v != C64::new(0.0, 0.0) {
                    let col = row + cc * strides[i] - r * strides[i];
                    entries.push((col as u32, v));
                }
            }
        }
        rows.push(merge_sorted(entries));
    }
    Ok(SparseOperator::from_rows(dim, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::exchange_form;
    use crate::exact::basis::log_factorials;
    use crate::lattice::CouplingMatrices;
    use nalgebra::{DMatrix, SymmetricEigen};

    /// Columns are the normalized symmetrized full-space images of `|n1,n2,n3>`.
    fn symmetric_isometry(sym: &SymmetricBasis, full: &FullBasis) -> DMatrix<C64> {
        let n = sym.n_atoms();
        let lf = log_factorials(n);
        let mut p = DMatrix::zeros(full.dim(), sym.dim());
        for idx in 0..full.dim() {
            let d = full.digits(idx);
            let mut occ = [0u32; 3];
            for &x in &d {
                occ[x as usize] += 1;
            }
            let col = sym.index(occ).unwrap();
            let count = (lf[n] - occ.iter().map(|&k| lf[k as usize]).sum::<f64>()).exp();
            p[(idx, col)] = C64::new(1.0 / count.sqrt(), 0.0);
        }
        p
    }

    fn sorted_eigs(m: DMatrix<C64>) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn single_atom_without_drive_is_zero() {
        let b = SymmetricBasis::new(1).unwrap();
        let h = collective_hamiltonian(&b, 1.0, 0.7, 0.0, (0.0, 0.0)).unwrap();
        assert_eq!(h.nnz(), 0);
        assert!(collective_hamiltonian(&b, 1.0, f64::NAN, 0.0, (0.0, 0.0)).is_err());
    }

    #[test]
    fn symmetric_sector_is_projection_of_full_space() {
        for (n, jr, omega, legacy) in [(2, 1.0, 0.0, (0.0, 0.0)), (3, -1.0, 0.8, (0.0, 0.0)), (4, 0.5, 0.3, (0.2, -0.4))] {
            let sym = SymmetricBasis::new(n).unwrap();
            let full = FullBasis::new(n, 12).unwrap();
            let hs = collective_hamiltonian(&sym, 1.0, jr, omega, legacy).unwrap();
            assert!(hs.is_hermitian(1e-14));
            let mut spec = HamiltonianSpec::new(CouplingMatrices::uniform(n, 1.0, jr), omega);
            spec.omega1 = legacy.0;
            spec.omega2 = legacy.1;
            let hf = full_hamiltonian(&spec, 12).unwrap();
            assert!(hf.is_hermitian(1e-14));
            let p = symmetric_isometry(&sym, &full);
            let projected = p.adjoint() * hf.to_dense() * &p;
            assert!((projected - hs.to_dense()).norm() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn two_sites_match_two_site_form() {
        let spec = HamiltonianSpec::new(CouplingMatrices::uniform(2, 1.0, 1.0), 0.0);
        let hf = full_hamiltonian(&spec, 12).unwrap().to_dense();
        assert!((hf.clone() - exchange_form(1.0, 1.0)).norm() < 1e-14);
        // Symmetric-sector spectrum is contained in the full spectrum.
        let sym = SymmetricBasis::new(2).unwrap();
        let hs = collective_hamiltonian(&sym, 1.0, 1.0, 0.0, (0.0, 0.0)).unwrap().to_dense();
        let full_eigs = sorted_eigs(hf);
        for e in sorted_eigs(hs) {
            assert!(full_eigs.iter().any(|f| (f - e).abs() < 1e-12));
        }
    }

    #[test]
    fn drive_only_spectrum_is_sum_of_site_spectra() {
        let spec = HamiltonianSpec::new(CouplingMatrices::uniform(3, 0.0, 0.0), 1.0);
        let h = full_hamiltonian(&spec, 12).unwrap().to_dense();
        let eigs = sorted_eigs(h);
        let mut expected = Vec::new();
        for a in [-1.0, 0.0, 1.0] {
            for b in [-1.0, 0.0, 1.0] {
                for c in [-1.0, 0.0, 1.0] {
                    expected.push(a + b + c);
                }
            }
        }
        expected.sort_by(|a: &f64, b| a.partial_cmp(b).unwrap());
        for (e, x) in eigs.iter().zip(&expected) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let spec = HamiltonianSpec::new(CouplingMatrices::uniform(5, 1.0, 1.0), 0.0);
        assert_eq!(full_hamiltonian(&spec, 4), Err(ExactError::ExceedsCap { n: 5, cap: 4 }));
    }
}
