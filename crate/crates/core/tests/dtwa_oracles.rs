use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nematic_core::algebra::{manifold_triple, spin_quadrupolar_basis, Generator, ManifoldLabel};
use nematic_core::dtwa::model::{pack, site};
use nematic_core::dtwa::{
    mean_field_trajectory, run_ensemble, DtwaConfig, IntegratorConfig, MeanFieldModel, SiteSampler,
};
use nematic_core::exact::{drive_operator, ExactBasis};
use nematic_core::lattice::{initial_state, site_state, CouplingMatrices, HamiltonianSpec, InitialStateKind};

/// exp(-i H t) for a 3×3 Hermitian H via eigendecomposition.
fn propagate(h: &nalgebra::Matrix3<C64>, psi: &Vector3<C64>, t: f64) -> Vector3<C64> {
    let eig = nalgebra::SymmetricEigen::new(*h);
    let v = eig.eigenvectors;
    let phases = nalgebra::Matrix3::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    v * phases * v.adjoint() * psi
}

#[test]
fn single_site_mean_field_is_exact() {
    let basis = spin_quadrupolar_basis();
    let spec = HamiltonianSpec {
        omega1: 0.6,
        omega2: -0.35,
        ..HamiltonianSpec::new(CouplingMatrices::from_j1(DMatrix::zeros(1, 1), 1.0), 1.3)
    };
    let h = *drive_operator(1.3, 0.6, -0.35).matrix();
    for kind in [InitialStateKind::Bx, InitialStateKind::Sax, InitialStateKind::Dx] {
        let psi = site_state(&kind).unwrap();
        let lambdas: [f64; 8] = std::array::from_fn(|a| basis.generators[a].expectation(&psi));
        let times: Vec<f64> = (0..30).map(|k| 0.2 * k as f64).collect();
        let traj = mean_field_trajectory(&spec, lambdas, &times, &IntegratorConfig::default()).unwrap();
        for (t, point) in times.iter().zip(&traj) {
            let psi_t = propagate(&h, &psi, *t);
            for g in Generator::ALL {
                let exact = basis.get(g).expectation(&psi_t);
                assert!((point[0][g.index()] - exact).abs() < 1e-6, "{kind:?} {} t={t}", g.label());
            }
        }
    }
}

/// `d<Σ_i L_a^i>/dt = -2 Im <Hψ|Oψ>` in the full 3^N space.
fn exact_collective_derivative(spec: &HamiltonianSpec, kind: &InitialStateKind) -> [f64; 8] {
    let n = spec.couplings.n_sites();
    let basis = spin_quadrupolar_basis();
    let full = ExactBasis::full(n, 12).unwrap();
    let psi = full.product_state(&initial_state(kind, n).unwrap()).unwrap();
    let hpsi = full.hamiltonian(spec).unwrap().matvec(&psi.amps);
    std::array::from_fn(|a| {
        let opsi = full.collective_operator(&basis.generators[a]).matvec(&psi.amps);
        -2.0 * hpsi.iter().zip(&opsi).map(|(h, o)| h.conj() * o).sum::<C64>().im
    })
}

fn collective_rhs(model: &MeanFieldModel, points: &[Vec<[f64; 8]>]) -> Vec<[f64; 8]> {
    let y = pack(points);
    let mut dy = y.clone();
    let mut scratch = y.clone();
    model.rhs(&y, &mut dy, &mut scratch);
    (0..points.len())
        .map(|b| {
            let mut sum = [0.0; 8];
            for i in 0..y.nrows() {
                for (s, v) in sum.iter_mut().zip(site(&dy, b, i)) {
                    *s += v;
                }
            }
            sum
        })
        .collect()
}

fn two_site_spec(j12: f64, jr: f64, drive: [f64; 3]) -> HamiltonianSpec {
    let j = DMatrix::from_row_slice(2, 2, &[0.0, j12, j12, 0.0]);
    HamiltonianSpec {
        omega1: drive[1],
        omega2: drive[2],
        ..HamiltonianSpec::new(CouplingMatrices::from_j1(j, jr), drive[0])
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// For product states the bilinear mean-field flow at the mean point
    /// equals the exact Heisenberg derivative.
    #[test]
    fn mean_point_derivative_matches_exact(
        amps in prop::array::uniform3(prop::array::uniform2(-1.0f64..1.0)),
        j12 in -2.0f64..2.0,
        jr in -2.0f64..2.0,
        drive in prop::array::uniform3(-1.0f64..1.0),
    ) {
        prop_assume!(amps.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum::<f64>() > 0.1);
        let spec = two_site_spec(j12, jr, drive);
        let kind = InitialStateKind::Custom(amps);
        let psi = site_state(&kind).unwrap();
        let basis = spin_quadrupolar_basis();
        let lam: [f64; 8] = std::array::from_fn(|a| basis.generators[a].expectation(&psi));
        let model = MeanFieldModel::new(&spec, &basis).unwrap();
        let mf = collective_rhs(&model, &[vec![lam; 2]])[0];
        let ed = exact_collective_derivative(&spec, &kind);
        for a in 0..8 {
            prop_assert!((mf[a] - ed[a]).abs() < 1e-10, "component {a}: {} vs {}", mf[a], ed[a]);
        }
    }
}

#[test]
fn sampled_derivative_averages_to_exact() {
    let spec = two_site_spec(1.0, 0.5, [0.3, 0.0, 0.0]);
    let basis = spin_quadrupolar_basis();
    let model = MeanFieldModel::new(&spec, &basis).unwrap();
    for kind in [InitialStateKind::Bx, InitialStateKind::Sax] {
        let sampler = SiteSampler::new(&site_state(&kind).unwrap(), &basis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 40_000;
        let points: Vec<Vec<[f64; 8]>> = (0..draws)
            .map(|_| vec![sampler.sample(&mut rng), sampler.sample(&mut rng)])
            .collect();
        let rhs = collective_rhs(&model, &points);
        let ed = exact_collective_derivative(&spec, &kind);
        for a in 0..8 {
            let mean = rhs.iter().map(|r| r[a]).sum::<f64>() / draws as f64;
            let var = rhs.iter().map(|r| (r[a] - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
            let se = (var / draws as f64).sqrt();
            assert!((mean - ed[a]).abs() <= 5.0 * se + 1e-12, "{kind:?} {a}: {mean} ± {se} vs {}", ed[a]);
        }
    }
}

/// Empirical means and second moments of 10⁴ draws against the exact
/// values, as χ² statistics with 8 and 36 degrees of freedom.
#[test]
fn sampled_moments_pass_chi_square() {
    let basis = spin_quadrupolar_basis();
    let draws = 10_000usize;
    for (seed, amps) in [
        (1u64, [[0.5, 0.0], [std::f64::consts::FRAC_1_SQRT_2, 0.0], [0.5, 0.0]]),
        (2, [[0.3, -0.2], [0.1, 0.8], [-0.4, 0.25]]),
    ] {
        let psi = site_state(&InitialStateKind::Custom(amps)).unwrap();
        let sampler = SiteSampler::new(&psi, &basis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<[f64; 8]> = (0..draws).map(|_| sampler.sample(&mut rng)).collect();
        let mean_exact: [f64; 8] = std::array::from_fn(|a| basis.generators[a].expectation(&psi));
        let second_exact: [[f64; 8]; 8] = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let (la, lb) = (basis.generators[a].matrix(), basis.generators[b].matrix());
                let anti = la * lb + lb * la;
                0.5 * (psi.adjoint() * anti * psi)[(0, 0)].re
            })
        });
        let stat = |values: Vec<f64>, exact: f64| {
            let m = values.iter().sum::<f64>() / draws as f64;
            let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws - 1) as f64;
            if v < 1e-20 {
                assert!((m - exact).abs() < 1e-9);
                return (0.0, 0);
            }
            ((m - exact).powi(2) / (v / draws as f64), 1)
        };
        let (mut chi_mean, mut dof_mean) = (0.0, 0);
        for a in 0..8 {
            let (c, d) = stat(samples.iter().map(|s| s[a]).collect(), mean_exact[a]);
            chi_mean += c;
            dof_mean += d;
        }
        let (mut chi_second, mut dof_second) = (0.0, 0);
        for a in 0..8 {
            for b in a..8 {
                let (c, d) = stat(samples.iter().map(|s| s[a] * s[b]).collect(), second_exact[a][b]);
                chi_second += c;
                dof_second += d;
            }
        }
        // 0.1% upper quantiles: χ²_8 = 26.1, χ²_36 = 67.98 (fewer dof is stricter)
        assert!(dof_mean <= 8 && chi_mean < 26.1, "means χ² = {chi_mean} ({dof_mean} dof)");
        assert!(dof_second <= 36 && chi_second < 67.98, "second moments χ² = {chi_second} ({dof_second} dof)");
    }
}

#[test]
fn ensembles_are_reproducible_and_seed_dependent() {
    let spec = HamiltonianSpec::new(CouplingMatrices::uniform(6, 1.0, 0.5), 0.0);
    let psi = site_state(&InitialStateKind::Bx).unwrap();
    let triple = manifold_triple(ManifoldLabel::Bright).unwrap();
    let times: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).collect();
    let config = DtwaConfig {
        trajectories: 300,
        seed: 99,
        batch_size: 64,
        ..DtwaConfig::default()
    };
    let a = run_ensemble(&spec, &psi, &triple, &times, &config).unwrap();
    let b = run_ensemble(&spec, &psi, &triple, &times, &config).unwrap();
    assert_eq!(a, b);
    let c = run_ensemble(&spec, &psi, &triple, &times, &DtwaConfig { seed: 100, ..config }).unwrap();
    assert_ne!(a.rows, c.rows);
    assert!(a.diagnostics.max_casimir_drift < 1e-6);
    assert!(a.diagnostics.max_energy_drift < 1e-6);
}
