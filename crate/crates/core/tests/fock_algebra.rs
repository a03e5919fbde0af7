use epbs::fock::{build_hamiltonian, build_operators, lattice_to_matrix, lattice_view, BasisIndex};
use epbs::{BeamsplitterParams, CMatrix, C64};
use proptest::prelude::*;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

proptest! {
    #[test]
    fn angular_momentum_commutators(n in 1usize..=12) {
        let ops = build_operators(n).unwrap();
        let i = C64::new(0.0, 1.0);
        prop_assert!(max_abs(&(commutator(&ops.j_z, &ops.j_plus) - &ops.j_plus)) < 1e-12);
        prop_assert!(max_abs(&(commutator(&ops.j_z, &ops.j_minus) + &ops.j_minus)) < 1e-12);
        prop_assert!(max_abs(&(commutator(&ops.j_plus, &ops.j_minus) - &ops.j_z * C64::new(2.0, 0.0))) < 1e-12);
        prop_assert!(max_abs(&(commutator(&ops.j_x, &ops.j_y) - &ops.j_z * i)) < 1e-12);
    }

    #[test]
    fn casimir_is_spin_times_spin_plus_one(n in 1usize..=12) {
        let ops = build_operators(n).unwrap();
        let j2 = &ops.j_x * &ops.j_x + &ops.j_y * &ops.j_y + &ops.j_z * &ops.j_z;
        let s = n as f64 / 2.0;
        let expected = CMatrix::identity(n + 1, n + 1) * C64::new(s * (s + 1.0), 0.0);
        prop_assert!(max_abs(&(j2 - expected)) < 1e-10);
    }

    #[test]
    fn hamiltonian_is_tridiagonal_and_symmetric(
        n in 1usize..=12, omega0 in -3.0f64..3.0, kappa in 0.1f64..3.0, gamma in 0.0f64..6.0,
    ) {
        let h = build_hamiltonian(&BeamsplitterParams::new(omega0, kappa, gamma, n).unwrap()).unwrap();
        prop_assert!(h.is_tridiagonal());
        prop_assert!(max_abs(&(&h.matrix - h.matrix.transpose())) == 0.0);
        // Trace: (N+1)(ω0 − iΓ/2)N − iΓ Σ (m − N/2) = (N+1)(ω0 − iΓ/2)N.
        let expected = C64::new(omega0, -gamma / 2.0) * (n * (n + 1)) as f64;
        prop_assert!((h.matrix.trace() - expected).norm() < 1e-10 * expected.norm().max(1.0));
    }

    #[test]
    fn lattice_view_round_trips(n in 1usize..=12, gamma in 0.0f64..6.0) {
        let h = build_hamiltonian(&BeamsplitterParams::new(1.0, 1.0, gamma, n).unwrap()).unwrap();
        prop_assert_eq!(lattice_to_matrix(&lattice_view(&h)), h.matrix);
    }
}

#[test]
fn lossless_hamiltonian_is_hermitian() {
    let h = build_hamiltonian(&BeamsplitterParams::new(0.7, 1.3, 0.0, 7).unwrap()).unwrap();
    assert_eq!(h.matrix, h.matrix.adjoint());
}

#[test]
fn loss_grows_with_photons_in_lossy_guide() {
    let h = build_hamiltonian(&BeamsplitterParams::new(1.0, 1.0, 2.0, 4).unwrap()).unwrap();
    for b in BasisIndex::all(4) {
        let onsite = h.matrix[(b.m(), b.m())];
        assert!((onsite.im + 2.0 * b.photons_b() as f64).abs() < 1e-14);
        assert_eq!(b.photons_a() + b.photons_b(), 4);
    }
}
