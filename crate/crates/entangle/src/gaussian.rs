//! Two-mode Gaussian states in the ordering (Q1, Q2, P1, P2) with anticommutator
//! normalization: the ground state at Ω0 = 1 is the identity.

use nalgebra::Matrix4;

use crate::error::{Error, Result};

pub const Q1: usize = 0;
pub const Q2: usize = 1;
pub const P1: usize = 2;
pub const P2: usize = 3;

/// Eigenvalues within this distance of 1 contribute nothing to the negativity.
const UNIT_SNAP: f64 = 1e-12;
const PAIR_TOL: f64 = 1e-9;

/// Symmetric 4×4 matrix of ⟨{y_l, y_m}⟩ for y = (Q1, Q2, P1, P2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(pub Matrix4<f64>);

impl CovarianceMatrix {
    pub fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        CovarianceMatrix(Matrix4::from_fn(|i, j| rows[i][j]))
    }

    pub fn diag(d: [f64; 4]) -> Self {
        CovarianceMatrix(Matrix4::from_diagonal(&d.into()))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn symmetrized(&self) -> Self {
        CovarianceMatrix((self.0 + self.0.transpose()) * 0.5)
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut r = [[0.0; 4]; 4];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[(i, j)];
            }
        }
        r
    }
}

/// Oscillator parameters shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega0: f64,
    pub r: f64,
    pub kappa: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            omega0: 1.0,
            r: 0.1,
            kappa: 1.0,
        }
    }
}

impl SystemParams {
    pub fn new(omega0: f64, r: f64, kappa: f64) -> Result<Self> {
        let p = SystemParams { omega0, r, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::Validation("omega0 > 0".into()));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::Validation("r >= 0".into()));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::Validation("kappa >= 1".into()));
        }
        Ok(())
    }
}

/// Symplectic form for the ordering (Q1, Q2, P1, P2).
pub fn symplectic_form() -> Matrix4<f64> {
    let mut s = Matrix4::zeros();
    s[(Q1, P1)] = 1.0;
    s[(Q2, P2)] = 1.0;
    s[(P1, Q1)] = -1.0;
    s[(P2, Q2)] = -1.0;
    s
}

/// Cov(0) = diag(1/(κΩ0), 1/(κΩ0), κΩ0, κΩ0).
pub fn squeezed_initial(p: &SystemParams) -> CovarianceMatrix {
    let q = 1.0 / (p.kappa * p.omega0);
    let m = p.kappa * p.omega0;
    CovarianceMatrix::diag([q, q, m, m])
}

/// Conjugation by diag(1, 1, 1, -1).
pub fn partial_time_reversal(cov: &CovarianceMatrix) -> CovarianceMatrix {
    let mut m = cov.0;
    for k in 0..4 {
        if k != P2 {
            m[(k, P2)] = -m[(k, P2)];
            m[(P2, k)] = -m[(P2, k)];
        }
    }
    CovarianceMatrix(m)
}

/// Ascending symplectic eigenvalues from the invariants of σ·Cov.
pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<(f64, f64)> {
    let a = symplectic_form() * cov.0;
    let a2 = a * a;
    let sum = -0.5 * a2.trace();
    let det = cov.0.determinant();
    let scale = sum.abs().max(cov.0.abs().max() * cov.0.abs().max()).max(f64::MIN_POSITIVE);
    let odd1 = a.trace().abs() / scale.sqrt();
    let odd3 = (a2 * a).trace().abs() / scale.powf(1.5);
    if !(odd1 <= PAIR_TOL && odd3 <= PAIR_TOL) || !sum.is_finite() || !det.is_finite() {
        return Err(Error::Numerical(format!(
            "eigenvalues of σ·Cov lack ±iλ pairing (odd traces {odd1:.2e}, {odd3:.2e})"
        )));
    }
    if let Some(pair) = spectrum_from_sqrt(cov) {
        return Ok(pair);
    }
    let mut disc = sum * sum - 4.0 * det;
    if disc < 0.0 {
        if disc < -PAIR_TOL * sum * sum {
            return Err(Error::Numerical(format!("negative discriminant {disc:.3e}")));
        }
        disc = 0.0;
    }
    let big = 0.5 * (sum + disc.sqrt());
    if big <= 0.0 {
        return Err(Error::Numerical("non-positive symplectic spectrum".into()));
    }
    let small = det / big;
    if small < -PAIR_TOL * big {
        return Err(Error::Numerical(format!("indefinite covariance (det {det:.3e})")));
    }
    Ok((small.max(0.0).sqrt(), big.sqrt()))
}

/// Symplectic spectrum from the symmetric matrix -(R σ R)², R = Cov^{1/2}, whose
/// eigenvalues are λ1², λ1², λ2², λ2². Stays accurate for degenerate spectra.
fn spectrum_from_sqrt(cov: &CovarianceMatrix) -> Option<(f64, f64)> {
    let eig = cov.0.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = eig.eigenvectors * d * eig.eigenvectors.transpose();
    let k = root * symplectic_form() * root;
    let m = k.transpose() * k;
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    Some((
        (0.5 * (ev[0] + ev[1])).max(0.0).sqrt(),
        (0.5 * (ev[2] + ev[3])).max(0.0).sqrt(),
    ))
}

/// E_N = -Σ log2 min(1, λ) over the partially time-reversed symplectic spectrum.
pub fn log_negativity(cov: &CovarianceMatrix) -> Result<f64> {
    let (l1, l2) = symplectic_eigenvalues(&partial_time_reversal(cov))?;
    Ok(neg_term(l1) + neg_term(l2))
}

fn neg_term(l: f64) -> f64 {
    if l >= 1.0 - UNIT_SNAP {
        0.0
    } else if l <= 0.0 {
        f64::INFINITY
    } else {
        -l.log2()
    }
}

/// Smallest symplectic eigenvalue of the state itself (≥ 1 for physical states).
pub fn min_symplectic_eigenvalue(cov: &CovarianceMatrix) -> Result<f64> {
    Ok(symplectic_eigenvalues(cov)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, SymmetricEigen};
    use proptest::prelude::*;

    /// Two-mode squeezed vacuum at Ω0 = 1 with squeezing ρ.
    fn tmsv(rho: f64) -> CovarianceMatrix {
        let (c, s) = ((2.0 * rho).cosh(), (2.0 * rho).sinh());
        CovarianceMatrix::from_rows([
            [c, s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, c, -s],
            [0.0, 0.0, -s, c],
        ])
    }

    /// Brute force: the eigenvalues of i σ Cov are ±λ, obtained from the
    /// Hermitian matrix Cov^{1/2} (iσ) Cov^{1/2}.
    fn brute_symplectic(cov: &CovarianceMatrix) -> (f64, f64) {
        let e = SymmetricEigen::new(cov.0);
        let sqrt = e.eigenvectors
            * Matrix4::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()))
            * e.eigenvectors.transpose();
        // K = C^{1/2} σ C^{1/2} is antisymmetric; its eigenvalues are ±iλ, so -K² has λ² twice.
        let k = sqrt * symplectic_form() * sqrt;
        let m = -(k * k);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
        ev.sort_by(f64::total_cmp);
        (ev[0], ev[3])
    }

    #[test]
    fn squeezed_state_examples() {
        let g = squeezed_initial(&SystemParams::new(1.0, 0.0, 1.0).unwrap());
        assert_eq!(g, CovarianceMatrix::diag([1.0; 4]));
        let s = squeezed_initial(&SystemParams::new(1.0, 0.0, 10.0).unwrap());
        assert_eq!(s, CovarianceMatrix::diag([0.1, 0.1, 10.0, 10.0]));
        for k in [1.0, 2.5, 10.0, 77.0] {
            let (a, b) = symplectic_eigenvalues(&squeezed_initial(&SystemParams::new(1.3, 0.0, k).unwrap())).unwrap();
            assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn time_reversal_examples() {
        let d = CovarianceMatrix::diag([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(partial_time_reversal(&d), d);
        let mut m = Matrix4::identity();
        m[(P1, P2)] = 0.3;
        m[(P2, P1)] = 0.3;
        let t = partial_time_reversal(&CovarianceMatrix(m));
        assert_eq!(t.get(P1, P2), -0.3);
        assert_eq!(partial_time_reversal(&t), CovarianceMatrix(m));
    }

    #[test]
    fn thermal_scaling() {
        for n in [1.0, 2.0, 5.5] {
            let w = 1.7;
            let (a, b) = symplectic_eigenvalues(&CovarianceMatrix::diag([n / w, n / w, n * w, n * w])).unwrap();
            assert!((a - n).abs() < 1e-12 && (b - n).abs() < 1e-12);
        }
    }

    #[test]
    fn two_mode_squeezed_against_brute_force() {
        for rho in [0.1, 0.5, 1.2] {
            let pt = partial_time_reversal(&tmsv(rho));
            let (a, b) = symplectic_eigenvalues(&pt).unwrap();
            let (ba, bb) = brute_symplectic(&pt);
            assert!((a - ba).abs() < 1e-9 && (b - bb).abs() < 1e-9);
            assert!((a - (-2.0 * rho).exp()).abs() < 1e-10);
            assert!((b - (2.0 * rho).exp()).abs() < 1e-9);
            assert!((a * b - 1.0).abs() < 1e-9);
            let en = log_negativity(&tmsv(rho)).unwrap();
            assert!((en - 2.0 * rho / std::f64::consts::LN_2).abs() < 1e-9);
        }
    }

    #[test]
    fn negativity_examples() {
        assert_eq!(log_negativity(&CovarianceMatrix::diag([1.0; 4])).unwrap(), 0.0);
        // PT eigenvalues (0.5, 3): block-diagonal in the modes after reversal
        let pt = CovarianceMatrix::diag([0.5, 3.0, 0.5, 3.0]);
        let cov = partial_time_reversal(&pt);
        assert!((log_negativity(&cov).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_violation_is_reported() {
        let mut m = Matrix4::identity();
        m[(Q1, P1)] = 0.7;
        assert!(matches!(symplectic_eigenvalues(&CovarianceMatrix(m)), Err(Error::Numerical(_))));
    }

    #[test]
    fn validation_messages() {
        assert_eq!(SystemParams::new(1.0, 0.1, 0.5), Err(Error::Validation("kappa >= 1".into())));
        assert!(SystemParams::new(1.0, -0.1, 1.0).is_err());
    }

    fn local_symplectic(a: f64, b: f64, c: f64) -> Matrix2<f64> {
        // rotation · squeeze · shear, determinant 1
        let rot = Matrix2::new(a.cos(), a.sin(), -a.sin(), a.cos());
        let sq = Matrix2::new(b.exp(), 0.0, 0.0, (-b).exp());
        let sh = Matrix2::new(1.0, 0.0, c, 1.0);
        rot * sq * sh
    }

    fn embed(s1: Matrix2<f64>, s2: Matrix2<f64>) -> Matrix4<f64> {
        let mut s = Matrix4::zeros();
        let idx = [(Q1, P1), (Q2, P2)];
        for (m, (q, p)) in [s1, s2].iter().zip(idx) {
            s[(q, q)] = m[(0, 0)];
            s[(q, p)] = m[(0, 1)];
            s[(p, q)] = m[(1, 0)];
            s[(p, p)] = m[(1, 1)];
        }
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn local_symplectic_invariance(
            rho in 0.0f64..1.5, n in 1.0f64..2.0,
            a1 in -3.0f64..3.0, b1 in -0.8f64..0.8, c1 in -1.0f64..1.0,
            a2 in -3.0f64..3.0, b2 in -0.8f64..0.8, c2 in -1.0f64..1.0,
        ) {
            let base = CovarianceMatrix(tmsv(rho).0 * n);
            let s = embed(local_symplectic(a1, b1, c1), local_symplectic(a2, b2, c2));
            prop_assert!((s.transpose() * symplectic_form() * s - symplectic_form()).abs().max() < 1e-12);
            let moved = CovarianceMatrix(s * base.0 * s.transpose()).symmetrized();
            let e0 = log_negativity(&base).unwrap();
            let e1 = log_negativity(&moved).unwrap();
            prop_assert!((e0 - e1).abs() < 1e-9, "{} vs {}", e0, e1);
        }

        #[test]
        fn separable_noise_reduces_negativity(rho in 0.0f64..1.5, c in 0.0f64..2.0) {
            let base = tmsv(rho);
            let noisy = CovarianceMatrix(base.0 + Matrix4::identity() * c);
            prop_assert!(log_negativity(&noisy).unwrap() <= log_negativity(&base).unwrap() + 1e-12);
        }

        #[test]
        fn pure_state_product_is_one(rho in 0.0f64..1.5, a in -3.0f64..3.0, b in -0.8f64..0.8) {
            let s = embed(local_symplectic(a, b, 0.2), local_symplectic(-a, 0.3, b));
            let cov = CovarianceMatrix(s * tmsv(rho).0 * s.transpose()).symmetrized();
            let (l1, l2) = symplectic_eigenvalues(&partial_time_reversal(&cov)).unwrap();
            prop_assert!((l1 * l2 - 1.0).abs() < 1e-9);
        }
    }
}
