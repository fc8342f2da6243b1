use num_complex::Complex;
use proptest::prelude::*;

use efqse::analysis::{pearson, weighted_pearson, PearsonVariant, WeightedSeries};
use efqse::fixtures::{bundled, pt2_companion, random_hamiltonian};
use efqse::forging::{forged_energy, Preparation};
use efqse::hamio::{parse_fcidump, spin_factorize, write_fcidump};
use efqse::oracle::fci_ground_state;
use efqse::pt2::{build_dyall, casci_reference, ActiveWindow};
use efqse::purify::{extract_ci_vector, forged_sector_density};
use efqse::rng::derive_seed;
use efqse::simcore::{HopLayout, Statevector};
use efqse::subspace::{qse_on_ci, DEFAULT_CUTOFF};
use efqse::tomography::{forged_tomography_sweep, sample_state_tomography, TomographyOptions};
use efqse::{CIVector, DeterminantSpace, ForgedAnsatz};

fn ansatz(n: usize, bits: Vec<u64>, theta: &[f64], schmidt: Vec<f64>) -> ForgedAnsatz {
    let layout = HopLayout::default_for(n);
    let theta = (0..layout.n_hops()).map(|i| theta[i % theta.len()]).collect();
    ForgedAnsatz::new(n, bits, schmidt, layout, theta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forged_energy_is_variational(
        seed in 0u64..1000,
        theta in prop::collection::vec(-3.2f64..3.2, 1..6),
        l0 in 0.05f64..1.0,
        l1 in -1.0f64..1.0,
    ) {
        let h = random_hamiltonian(3, 1, 1, seed);
        let (e_fci, _) = fci_ground_state(&h, None).unwrap();
        let a = ansatz(3, vec![0b001, 0b010], &theta, vec![l0, l1]);
        let e = forged_energy(&a, &spin_factorize(&h)).unwrap().value;
        prop_assert!(e >= e_fci - 1e-10, "{e} < {e_fci}");
    }

    #[test]
    fn qse_sits_between_fci_and_reference(seed in 0u64..500, theta in prop::collection::vec(-3.2f64..3.2, 1..4)) {
        let h = random_hamiltonian(4, 2, 2, seed);
        let (e_fci, _) = fci_ground_state(&h, None).unwrap();
        let a = ansatz(4, vec![0b0011, 0b0101], &theta, vec![0.9, 0.3]);
        let q = qse_on_ci(&a.ci_vector().unwrap(), &h, DEFAULT_CUTOFF).unwrap();
        prop_assert!(q.energy >= e_fci - 1e-9);
        prop_assert!(q.energy <= q.reference_energy + 1e-9);
    }

    #[test]
    fn pearson_stays_in_range(
        pts in prop::collection::vec((-1.0f64..1.0, 0.0f64..1.0, -1.0f64..1.0), 3..30),
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let e: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.2).collect();
        if let Ok(r) = weighted_pearson(&x, &e, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
        if let Ok(r) = WeightedSeries::new(x, e, y).unwrap().pearson(PearsonVariant::Symmetric) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn pearson_ignores_affine_rescaling(
        pts in prop::collection::vec((-1.0f64..1.0, 0.0f64..0.9, -1.0f64..1.0), 4..30),
        a in 0.1f64..10.0,
        b in -5.0f64..5.0,
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let e: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let y2: Vec<f64> = y.iter().map(|v| v / a - b).collect();
        if let (Ok(r1), Ok(r2)) = (weighted_pearson(&x, &e, &y), weighted_pearson(&x2, &e, &y2)) {
            prop_assert!((r1 - r2).abs() < 1e-9);
        }
    }

    #[test]
    fn pearson_ignores_point_order(
        pts in prop::collection::vec((-1.0f64..1.0, 0.0f64..1.0, -1.0f64..1.0), 3..20),
        rot in 0usize..20,
    ) {
        let mut shuffled = pts.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        shuffled.reverse();
        let split = |p: &[(f64, f64, f64)]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            (p.iter().map(|v| v.0).collect(), p.iter().map(|v| v.1).collect(), p.iter().map(|v| v.2).collect())
        };
        let (x, e, y) = split(&pts);
        let (xs, es, ys) = split(&shuffled);
        if let (Ok(r1), Ok(r2)) = (weighted_pearson(&x, &e, &y), weighted_pearson(&xs, &es, &ys)) {
            prop_assert!((r1 - r2).abs() < 1e-12);
        }
    }

    #[test]
    fn pearson_in_single_precision(pts in prop::collection::vec((-1.0f64..1.0, 0.0f64..0.9, -1.0f64..1.0), 4..20)) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let e: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let narrow = |v: &[f64]| -> Vec<f32> { v.iter().map(|&a| a as f32).collect() };
        if let (Ok(r64), Ok(r32)) = (weighted_pearson(&x, &e, &y), weighted_pearson(&narrow(&x), &narrow(&e), &narrow(&y))) {
            // skip near-degenerate spreads where f32 cancellation dominates
            if pearson(&x, &y).map(|r| r.is_finite()).unwrap_or(false) {
                prop_assert!((r64 - r32 as f64).abs() < 1e-3, "{r64} vs {r32}");
            }
        }
    }

    #[test]
    fn sampled_bloch_vectors_are_valid(seed in 0u64..10_000, shots in 1usize..400, theta in -3.0f64..3.0) {
        let a = ansatz(3, vec![0b001, 0b100], &[theta, 0.4 * theta], vec![0.7, 0.7]);
        let state = a.prepared_state(&Preparation::Superposition { k: 0, l: 1, p: 1 }).unwrap();
        let b = sample_state_tomography(&state, shots, seed, &TomographyOptions::default()).unwrap();
        prop_assert!(b.check_invariants().is_ok());
        let (values, errors) = b.values_and_errors().unwrap();
        prop_assert_eq!(values[0], 1.0);
        prop_assert!(values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        prop_assert!(errors.iter().all(|e| (0.0..=1.0).contains(e)));
    }

    #[test]
    fn purified_vectors_are_normalized(seed in 0u64..1000, shots in 16usize..512) {
        let h = bundled("butadiene_4e4o").unwrap();
        let a = ansatz(4, vec![0b0011, 0b0101], &[0.3, -0.2], vec![0.95, -0.3]);
        let tomo = forged_tomography_sweep(&a, shots, seed, &TomographyOptions::default()).unwrap();
        let rho = forged_sector_density(&tomo).unwrap();
        let space = DeterminantSpace::for_hamiltonian(&h);
        let pure = extract_ci_vector(&rho, space.hf_index()).unwrap();
        let norm: f64 = pure.ci.amplitudes().iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        let hf = pure.ci.amplitudes()[space.hf_index()];
        prop_assert!(pure.fallback || (hf.im.abs() < 1e-12 && hf.re > 0.0));
    }

    #[test]
    fn fcidump_round_trip(seed in 0u64..1000, n in 2usize..5) {
        let h = random_hamiltonian(n, n / 2, n - n / 2, seed);
        let back = parse_fcidump(&write_fcidump(&h)).unwrap();
        prop_assert_eq!(back, h);
    }
}

#[test]
fn simulator_agrees_across_precisions() {
    let layout = HopLayout::default_for(6);
    let theta: Vec<f64> = (0..layout.n_hops()).map(|i| 0.1 + 0.37 * i as f64).collect();
    let theta32: Vec<f32> = theta.iter().map(|&t| t as f32).collect();
    let mut s64 = Statevector::<f64>::basis_state(6, 0b000111);
    s64.apply(&layout.circuit(&theta).unwrap()).unwrap();
    let mut s32 = Statevector::<f32>::basis_state(6, 0b000111);
    s32.apply(&layout.circuit(&theta32).unwrap()).unwrap();
    for (a, b) in s64.amplitudes().iter().zip(s32.amplitudes()) {
        let b = Complex::new(b.re as f64, b.im as f64);
        assert!((a - b).norm() < 1e-5);
    }
    assert!((s32.norm() - 1.0).abs() < 1e-5);
}

#[test]
fn sampled_pt2_agrees_with_exact_reference() {
    for name in ["butadiene_4o_2act", "hexatriene_6o_4act"] {
        let (full, n_core, n_active) = pt2_companion(name).unwrap();
        let window = ActiveWindow { n_core, n_active };
        let active = full.frozen_core(n_core, n_active).unwrap();
        let (_, psi) = casci_reference(&full, window).unwrap();
        let part = build_dyall(&full, window, &psi).unwrap();
        let exact = part.pt2_correction(&psi, None).unwrap();
        assert!(exact.delta_e <= 0.0);

        let n = active.n_orbitals();
        let w = active.n_alpha();
        let (_, fci) = fci_ground_state(&active, None).unwrap();
        let bits: Vec<u64> = efqse::forging::select_bitstrings(&fci, 2).unwrap().into_iter().map(|b| b.0).collect();
        let vqe = efqse::forging::vqe_minimize(
            &ForgedAnsatz::with_defaults(n, bits).unwrap(),
            &spin_factorize(&active),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(vqe.ansatz.n_electrons_per_spin(), w);
        let space = DeterminantSpace::for_hamiltonian(&active);
        let samples: Vec<CIVector> = (0..24u64)
            .map(|s| {
                let tomo = forged_tomography_sweep(&vqe.ansatz, 4096, derive_seed(31, s), &TomographyOptions::default()).unwrap();
                let rho = forged_sector_density(&tomo).unwrap();
                let pure = extract_ci_vector(&rho, space.hf_index()).unwrap().ci;
                qse_on_ci(&pure, &active, DEFAULT_CUTOFF).unwrap().state.unwrap()
            })
            .collect();
        let sampled = part.pt2_with_sampling(&samples).unwrap();
        let tol = (3.0 * sampled.stderr).max(1e-10);
        let vqe_exact = qse_on_ci(&vqe.ansatz.ci_vector().unwrap(), &active, DEFAULT_CUTOFF).unwrap();
        let reference = part.pt2_correction(vqe_exact.state.as_ref().unwrap(), None).unwrap().delta_e;
        assert!(
            (sampled.delta_e - reference).abs() <= tol,
            "{name}: sampled {} +- {} vs noise-free {reference}",
            sampled.delta_e,
            sampled.stderr
        );
        assert_eq!(sampled.excluded, 0);
    }
}
