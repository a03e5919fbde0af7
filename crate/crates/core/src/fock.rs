//! N-photon subspace of the two-mode beamsplitter.
//!
//! The basis state `|m)` is `|N−m⟩_a |m⟩_b`: `m` photons sit in the lossy
//! waveguide `b`. Within this subspace the Hamiltonian is
//!
//! ```text
//! H_N = (ω0 − iΓ/2)·N + 2κ·Jx − iΓ·Jz
//! ```
//!
//! with `Jz = (b†b − a†a)/2`, `Jx = (a†b + ab†)/2` acting as a spin `N/2`.

use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result, C64};

/// Physical inputs. Rates are in cm⁻¹, distances in cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamsplitterParams {
    /// Common propagation constant ω0.
    pub omega0: f64,
    /// Waveguide coupling κ > 0.
    pub kappa: f64,
    /// Dissipation Γ ≥ 0 of waveguide `b`.
    pub gamma: f64,
    /// Photon number N ≥ 1.
    pub n_photons: usize,
}

impl BeamsplitterParams {
    pub fn new(omega0: f64, kappa: f64, gamma: f64, n_photons: usize) -> Result<Self> {
        let p = Self {
            omega0,
            kappa,
            gamma,
            n_photons,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_photons < 1 {
            return Err(Error::InvalidPhotonCount(self.n_photons as i64));
        }
        if !self.omega0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega0",
                value: self.omega0,
                reason: "must be finite",
            });
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: self.kappa,
                reason: "must be positive",
            });
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                reason: "must be non-negative",
            });
        }
        Ok(())
    }

    /// Same device with a different loss.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    /// Critical loss Γc = 2κ.
    pub fn gamma_critical(&self) -> f64 {
        2.0 * self.kappa
    }

    /// Spin S = N/2.
    pub fn spin(&self) -> f64 {
        self.n_photons as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.n_photons + 1
    }

    /// `ω0 − iΓ/2`, the coefficient of the number operator.
    pub fn number_coefficient(&self) -> C64 {
        C64::new(self.omega0, -self.gamma / 2.0)
    }

    /// `4κ² − Γ²`, the square of the eigenvalue spacing.
    pub fn spacing_squared(&self) -> f64 {
        4.0 * self.kappa * self.kappa - self.gamma * self.gamma
    }
}

/// Index `m` of `|N−m⟩_a |m⟩_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex {
    m: usize,
    n_photons: usize,
}

impl BasisIndex {
    pub fn new(m: usize, n_photons: usize) -> Result<Self> {
        if n_photons < 1 {
            return Err(Error::InvalidPhotonCount(n_photons as i64));
        }
        if m > n_photons {
            return Err(Error::DimensionMismatch {
                expected: n_photons + 1,
                actual: m + 1,
            });
        }
        Ok(Self { m, n_photons })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn photons_a(&self) -> usize {
        self.n_photons - self.m
    }

    pub fn photons_b(&self) -> usize {
        self.m
    }

    /// Jz eigenvalue `(2m − N)/2`.
    pub fn jz(&self) -> f64 {
        self.m as f64 - self.n_photons as f64 / 2.0
    }

    /// All indices of the N-photon subspace, in order.
    pub fn all(n_photons: usize) -> impl Iterator<Item = BasisIndex> {
        (0..=n_photons).map(move |m| BasisIndex { m, n_photons })
    }
}

/// Dimension of the N-photon subspace.
pub fn subspace_dimension(n_photons: usize) -> usize {
    n_photons + 1
}

/// Number of distinguishable detector outcomes `|p⟩_a|q⟩_b` with `p + q ≤ N`.
pub fn outcome_classes(n_photons: usize) -> usize {
    (n_photons + 1) * (n_photons + 2) / 2
}

/// Angular-momentum matrices of the spin-N/2 representation.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub dim: usize,
    pub j_x: CMatrix,
    pub j_y: CMatrix,
    pub j_z: CMatrix,
    pub j_plus: CMatrix,
    pub j_minus: CMatrix,
    /// N̂ acts as the scalar N on the subspace.
    pub number_op_scalar: f64,
}

impl OperatorSet {
    pub fn n_photons(&self) -> usize {
        self.dim - 1
    }

    /// Ladder coefficient `⟨m+1|J+|m⟩ = √((m+1)(N−m))`.
    pub fn ladder_coefficient(n_photons: usize, m: usize) -> f64 {
        debug_assert!(m < n_photons);
        (((m + 1) * (n_photons - m)) as f64).sqrt()
    }
}

/// Build `Jx, Jy, Jz, J±` in the `m = 0 … N` ordering.
pub fn build_operators(n_photons: usize) -> Result<OperatorSet> {
    if n_photons < 1 {
        return Err(Error::InvalidPhotonCount(n_photons as i64));
    }
    let dim = n_photons + 1;
    let s = n_photons as f64 / 2.0;

    let j_z = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(i as f64 - s, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    // J+ = b†a moves a photon into b: m → m+1.
    let j_plus = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j + 1 {
            C64::new(OperatorSet::ladder_coefficient(n_photons, j), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let j_minus = j_plus.adjoint();
    let j_x = (&j_plus + &j_minus).scale(0.5);
    let j_y = (&j_plus - &j_minus) * C64::new(0.0, -0.5);

    Ok(OperatorSet {
        dim,
        j_x,
        j_y,
        j_z,
        j_plus,
        j_minus,
        number_op_scalar: n_photons as f64,
    })
}

/// The subspace Hamiltonian together with the parameters that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub matrix: CMatrix,
    pub params: BeamsplitterParams,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// True when every entry beyond the first off-diagonals is exactly zero.
    pub fn is_tridiagonal(&self) -> bool {
        is_tridiagonal(&self.matrix)
    }
}

pub(crate) fn is_tridiagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i.abs_diff(j) <= 1 || m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Assemble `(ω0 − iΓ/2)·N·1 + 2κ·Jx − iΓ·Jz`.
pub fn build_hamiltonian(params: &BeamsplitterParams) -> Result<HamiltonianMatrix> {
    params.validate()?;
    let n = params.n_photons;
    let s = params.spin();
    let shift = params.number_coefficient() * n as f64;
    let matrix = CMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == j {
            shift + C64::new(0.0, -params.gamma * (i as f64 - s))
        } else if i.abs_diff(j) == 1 {
            let m = i.min(j);
            C64::new(params.kappa * OperatorSet::ladder_coefficient(n, m), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(HamiltonianMatrix {
        matrix,
        params: *params,
    })
}

/// One site of the equivalent tight-binding chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSite {
    pub site: usize,
    pub onsite: C64,
    /// Hopping to `site + 1`; `None` on the last site.
    pub hop_to_next: Option<f64>,
}

/// Read the Hamiltonian as an (N+1)-site chain with complex on-site terms.
pub fn lattice_view(h: &HamiltonianMatrix) -> Vec<LatticeSite> {
    let n = h.dim();
    (0..n)
        .map(|i| LatticeSite {
            site: i,
            onsite: h.matrix[(i, i)],
            hop_to_next: (i + 1 < n).then(|| h.matrix[(i, i + 1)].re),
        })
        .collect()
}

/// Rebuild the (symmetric tridiagonal) matrix from a chain description.
pub fn lattice_to_matrix(sites: &[LatticeSite]) -> CMatrix {
    let n = sites.len();
    let mut m = CMatrix::zeros(n, n);
    for s in sites {
        m[(s.site, s.site)] = s.onsite;
        if let Some(t) = s.hop_to_next {
            m[(s.site, s.site + 1)] = C64::new(t, 0.0);
            m[(s.site + 1, s.site)] = C64::new(t, 0.0);
        }
    }
    m
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn spin_half_matrices() {
        let ops = build_operators(1).unwrap();
        assert_eq!(ops.j_x, CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0.5, 0.), c(0.5, 0.), c(0., 0.)]));
        assert_eq!(ops.j_z[(0, 0)], c(-0.5, 0.0));
        assert_eq!(ops.j_z[(1, 1)], c(0.5, 0.0));
    }

    #[test]
    fn spin_one_matrices() {
        let ops = build_operators(2).unwrap();
        let h = std::f64::consts::SQRT_2 / 2.0;
        assert!((ops.j_x[(0, 1)].re - h).abs() < 1e-15);
        assert!((ops.j_x[(1, 2)].re - h).abs() < 1e-15);
        let diag: Vec<f64> = (0..3).map(|i| ops.j_z[(i, i)].re).collect();
        assert_eq!(diag, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_zero_photons() {
        assert_eq!(build_operators(0), Err(Error::InvalidPhotonCount(0)));
        assert!(BeamsplitterParams::new(1.0, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            BeamsplitterParams::new(1.0, -1.0, 0.0, 2),
            Err(Error::InvalidParameter { name: "kappa", .. })
        ));
        assert!(matches!(
            BeamsplitterParams::new(1.0, 1.0, -0.1, 2),
            Err(Error::InvalidParameter { name: "gamma", .. })
        ));
    }

    #[test]
    fn hamiltonian_n1_lossless() {
        let p = BeamsplitterParams::new(1.0, 1.0, 0.0, 1).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let want = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(max_abs(&(h.matrix - want)) < 1e-15);
    }

    #[test]
    fn hamiltonian_n1_at_gamma_two() {
        let p = BeamsplitterParams::new(1.0, 1.0, 2.0, 1).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(1., 0.), c(1., -2.)]);
        assert!(max_abs(&(h.matrix - want)) < 1e-15);
    }

    #[test]
    fn hamiltonian_matches_operator_form() {
        for n in 1..=8 {
            let p = BeamsplitterParams::new(0.7, 1.3, 0.9, n).unwrap();
            let ops = build_operators(n).unwrap();
            let h = build_hamiltonian(&p).unwrap();
            let id = CMatrix::identity(n + 1, n + 1);
            let want = id * (p.number_coefficient() * n as f64)
                + &ops.j_x * c(2.0 * p.kappa, 0.0)
                + &ops.j_z * c(0.0, -p.gamma);
            assert!(max_abs(&(&h.matrix - want)) < 1e-14);
            assert!(h.is_tridiagonal());
            for m in 0..n {
                let want = p.kappa * (((m + 1) * (n - m)) as f64).sqrt();
                assert!((h.matrix[(m, m + 1)].re - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lattice_view_lossless_n2() {
        let p = BeamsplitterParams::new(1.0, 1.0, 0.0, 2).unwrap();
        let sites = lattice_view(&build_hamiltonian(&p).unwrap());
        let hops: Vec<f64> = sites.iter().filter_map(|s| s.hop_to_next).collect();
        assert_eq!(hops.len(), 2);
        for t in hops {
            assert!((t - 2f64.sqrt()).abs() < 1e-15);
        }
        for s in &sites {
            assert_eq!(s.onsite, c(2.0, 0.0));
        }
    }

    #[test]
    fn lattice_loss_ramp_is_linear() {
        let p = BeamsplitterParams::new(1.0, 1.0, 2.0, 4).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let sites = lattice_view(&h);
        let im: Vec<f64> = sites.iter().map(|s| s.onsite.im).collect();
        for w in im.windows(2) {
            assert!((w[1] - w[0] + p.gamma).abs() < 1e-14);
        }
        assert_eq!(lattice_to_matrix(&sites), h.matrix);
    }

    #[test]
    fn basis_bookkeeping() {
        assert_eq!(subspace_dimension(4), 5);
        assert_eq!(outcome_classes(4), 15);
        let b = BasisIndex::new(1, 3).unwrap();
        assert_eq!((b.photons_a(), b.photons_b()), (2, 1));
        assert_eq!(b.jz(), -0.5);
        assert!(BasisIndex::new(4, 3).is_err());
        assert_eq!(BasisIndex::all(3).count(), 4);
    }
}
