//! Complex dense linear algebra for unitary propagation: Hermitian operators,
//! unitaries, the spectral matrix exponential, Pauli tensor products, and the
//! Frobenius gate infidelity.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const UNITARITY_TOL: f64 = 1e-10;

/// Threshold below which two eigenvalues are treated as degenerate in the
/// divided difference of the spectral derivative.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// An N×N complex matrix equal to its own conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    /// Validates hermiticity to `HERMITICITY_TOL` per element.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian operator must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in i..n {
                let dev = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if dev > HERMITICITY_TOL {
                    return Err(Error::NotHermitian {
                        deviation: dev,
                        row: i,
                        col: j,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// Eigendecomposition H = V diag(λ) V† with real eigenvalues.
    pub fn decompose(&self) -> SpectralDecomp {
        let eig = SymmetricEigen::new(self.entries.clone());
        SpectralDecomp {
            eigenvalues: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }
}

/// Spectral factorization of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    pub eigenvalues: DVector<f64>,
    pub vectors: CMatrix,
}

impl SpectralDecomp {
    /// exp(-i λ dt) per eigenvalue.
    pub fn phases(&self, dt: f64) -> DVector<C64> {
        self.eigenvalues
            .map(|l| (C64::new(0.0, -l * dt)).exp())
    }

    /// Reassembles V diag(phases) V†.
    pub fn assemble(&self, diag: &DVector<C64>) -> CMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let p = diag[j];
            for i in 0..n {
                scaled[(i, j)] *= p;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Divided-difference matrix Γ of f(λ) = exp(-i λ dt), with the
    /// degenerate limit -i dt exp(-i λ dt) when |λ_p - λ_q| < DEGENERACY_TOL.
    pub fn divided_differences(&self, dt: f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let phases = self.phases(dt);
        let mut gamma = CMatrix::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                let dl = self.eigenvalues[p] - self.eigenvalues[q];
                gamma[(p, q)] = if dl.abs() < DEGENERACY_TOL {
                    C64::new(0.0, -dt) * phases[p]
                } else {
                    (phases[p] - phases[q]) / C64::new(dl, 0.0)
                };
            }
        }
        gamma
    }
}

/// An N×N complex matrix with U†U = I to `UNITARITY_TOL` in Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "unitary must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let dev = unitarity_deviation(&entries);
        if dev > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

/// ‖U†U - I‖_F.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let prod = m.adjoint() * m;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            acc += (prod[(i, j)] - expect).norm_sqr();
        }
    }
    acc.sqrt()
}

/// exp(-i H dt) via the real-eigenvalue spectral decomposition of H.
pub fn expm_hermitian(h: &HermitianOperator, dt: f64) -> Result<UnitaryMatrix> {
    if dt < 0.0 {
        return Err(Error::NegativeDuration(dt));
    }
    let decomp = h.decompose();
    let phases = decomp.phases(dt);
    UnitaryMatrix::new(decomp.assemble(&phases))
}

/// Gate infidelity N⁻² ‖U - U_f‖_F² = (2N - 2 Re tr(U_f† U)) / N².
pub fn infidelity(u: &UnitaryMatrix, target: &UnitaryMatrix) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "infidelity of a {}-dim gate against a {}-dim target",
            u.dim(),
            target.dim()
        )));
    }
    Ok(infidelity_from_overlap(
        u.dim(),
        overlap_trace(target.entries(), u.entries()),
    ))
}

/// Re tr(A† B).
pub fn overlap_trace(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            // (A† B)_{jj} summed: conj(A_{ij}) B_{ij}
            acc += (a[(i, j)].conj() * b[(i, j)]).re;
        }
    }
    acc
}

pub fn infidelity_from_overlap(dim: usize, re_tr: f64) -> f64 {
    let n = dim as f64;
    (2.0 * n - 2.0 * re_tr) / (n * n)
}

/// The 2×2 Pauli matrix (or identity) for a label.
pub fn pauli(label: char) -> Result<CMatrix> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = match label {
        'I' => CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        'X' => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        'Y' => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        other => return Err(Error::UnknownLabel(other)),
    };
    Ok(m)
}

/// Kronecker product of single-qubit Pauli/identity factors, in order
/// (first label is the most significant tensor factor).
pub fn tensor_operator(labels: &str) -> Result<HermitianOperator> {
    if labels.is_empty() {
        return Err(Error::InvalidConfig(
            "tensor operator needs at least one factor".into(),
        ));
    }
    let mut chars = labels.chars();
    let mut acc = pauli(chars.next().unwrap())?;
    for c in chars {
        acc = acc.kronecker(&pauli(c)?);
    }
    HermitianOperator::new(acc)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    /// Independent oracle: exp(-i H dt) by a 30-term Taylor series with
    /// scaling and squaring.
    pub(crate) fn taylor_expm(h: &CMatrix, dt: f64) -> CMatrix {
        let n = h.nrows();
        let a = h.map(|x| x * C64::new(0.0, -dt));
        let norm: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let mut squarings = 0u32;
        let mut scale = 1.0;
        while norm * scale > 0.5 {
            scale *= 0.5;
            squarings += 1;
        }
        let scaled = a.map(|x| x * C64::new(scale, 0.0));
        let mut sum = CMatrix::identity(n, n);
        let mut term = CMatrix::identity(n, n);
        for k in 1..=30u32 {
            term = (&term * &scaled).map(|x| x / C64::new(k as f64, 0.0));
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    pub(crate) fn frob_dist(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianOperator {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn expm_zero_generator_is_identity() {
        for n in [2, 4, 8] {
            let u = expm_hermitian(&HermitianOperator::zero(n), 1.0).unwrap();
            assert!(frob_dist(u.entries(), &CMatrix::identity(n, n)) < 1e-14);
        }
    }

    #[test]
    fn expm_pauli_x_half_pi() {
        // exp(-i σ_x π/2) = -i σ_x
        let h = HermitianOperator::new(pauli('X').unwrap()).unwrap();
        let u = expm_hermitian(&h, FRAC_PI_2).unwrap();
        let expected = pauli('X').unwrap().map(|x| x * C64::new(0.0, -1.0));
        assert!(frob_dist(u.entries(), &expected) < 1e-12);
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let h = random_hermitian(4, &mut rng);
            let u = expm_hermitian(&h, 0.03).unwrap();
            let oracle = taylor_expm(h.entries(), 0.03);
            assert!(frob_dist(u.entries(), &oracle) < 1e-10);
        }
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn expm_rejects_negative_duration() {
        let h = HermitianOperator::zero(2);
        assert!(matches!(
            expm_hermitian(&h, -0.1),
            Err(Error::NegativeDuration(_))
        ));
    }

    #[test]
    fn expm_output_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = random_hermitian(8, &mut rng);
            let u = expm_hermitian(&h, 0.7).unwrap();
            assert!(unitarity_deviation(u.entries()) < 1e-10);
        }
    }

    #[test]
    fn infidelity_trivial_cases() {
        let id = UnitaryMatrix::identity(4);
        assert_eq!(infidelity(&id, &id).unwrap(), 0.0);

        // U = -U_f, N = 4 → 1.0
        let neg = UnitaryMatrix::new(id.entries().map(|x| -x)).unwrap();
        assert!((infidelity(&neg, &id).unwrap() - 1.0).abs() < 1e-14);

        // I vs CNOT → 4/16
        let cnot = crate::model::cnot_gate();
        assert!((infidelity(&id, &cnot).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn infidelity_rejects_dim_mismatch() {
        let a = UnitaryMatrix::identity(2);
        let b = UnitaryMatrix::identity(4);
        assert!(infidelity(&a, &b).is_err());
    }

    #[test]
    fn infidelity_left_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u = expm_hermitian(&random_hermitian(4, &mut rng), 0.4).unwrap();
            let uf = expm_hermitian(&random_hermitian(4, &mut rng), 0.4).unwrap();
            let v = expm_hermitian(&random_hermitian(4, &mut rng), 0.4).unwrap();
            let lhs = infidelity(
                &UnitaryMatrix::new(v.entries() * u.entries()).unwrap(),
                &UnitaryMatrix::new(v.entries() * uf.entries()).unwrap(),
            )
            .unwrap();
            let rhs = infidelity(&u, &uf).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
            assert!(rhs >= 0.0 && rhs <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn tensor_operator_cases() {
        let z = tensor_operator("Z").unwrap();
        assert_eq!(z.entries()[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z.entries()[(1, 1)], C64::new(-1.0, 0.0));

        let zz = tensor_operator("ZZ").unwrap();
        let diag: Vec<f64> = (0..4).map(|i| zz.entries()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);

        assert!(tensor_operator("Q").is_err());
        assert!(tensor_operator("").is_err());
    }

    #[test]
    fn tensor_operator_matches_loop_kron_oracle() {
        // X ⊗ I ⊗ I via a direct double-loop Kronecker product
        let xii = tensor_operator("XII").unwrap();
        let x = pauli('X').unwrap();
        let i4 = CMatrix::identity(4, 4);
        let mut oracle = CMatrix::zeros(8, 8);
        for r in 0..2 {
            for c in 0..2 {
                for rr in 0..4 {
                    for cc in 0..4 {
                        oracle[(r * 4 + rr, c * 4 + cc)] = x[(r, c)] * i4[(rr, cc)];
                    }
                }
            }
        }
        assert_eq!(xii.entries(), &oracle);
    }
}
