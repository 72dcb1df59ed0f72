//! Known-truth precision matrices for simulation experiments.
//!
//! Three base models are available. Models 1 and 3 draw a random sparse
//! pattern `Ω*` and shift it to be positive definite through
//! `Ω = (Ω* + δI)/(1 + δ)` with `δ = |λ_min(Ω*)| + 0.05`. Model 2 applies the
//! same shift to a block-diagonal covariance and inverts it. Alternatives add
//! a symmetric perturbation `Γ` with `m_t` nonzero entries of magnitude `r`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Group};
use crate::error::{Error, Result};

/// Additive margin used by every eigenvalue shift.
pub const SHIFT_MARGIN: f64 = 0.05;

/// Block size of the hub structure in Model 3.
pub const HUB_BLOCK: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelId {
    Model1,
    Model2,
    Model3,
    Custom,
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "model1" => Ok(ModelId::Model1),
            "2" | "model2" => Ok(ModelId::Model2),
            "3" | "model3" => Ok(ModelId::Model3),
            other => Err(Error::invalid(format!("unknown model '{other}' (expected 1, 2 or 3)"))),
        }
    }
}

/// A symmetric positive definite precision matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionModel {
    omega: DMatrix<f64>,
    model_id: ModelId,
}

impl PrecisionModel {
    pub fn new(omega: DMatrix<f64>, model_id: ModelId) -> Result<Self> {
        check_symmetric(&omega)?;
        if omega.clone().cholesky().is_none() {
            return Err(Error::invalid("precision matrix is not positive definite"));
        }
        Ok(Self { omega, model_id })
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn model_id(&self) -> ModelId {
        self.model_id
    }

    pub fn d(&self) -> usize {
        self.omega.nrows()
    }
}

/// Null model `Ω1` and perturbed model `Ω2 = Ω1 + Γ`.
#[derive(Debug, Clone)]
pub struct AlternativePair {
    pub omega1: DMatrix<f64>,
    pub omega2: DMatrix<f64>,
    /// Realized `Ω2 − Ω1`; each nonzero equals `r` up to one rounding.
    pub gamma: DMatrix<f64>,
    pub delta: f64,
    pub m_t: usize,
    pub r: f64,
    /// Upper-triangle positions `(i, j)`, `i < j`, carrying the perturbation.
    pub locations: Vec<(usize, usize)>,
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::invalid(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = a.amax().max(1.0);
    let d = a.nrows();
    for j in 0..d {
        for i in (j + 1)..d {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(a)?;
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Internal("symmetric eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.min())
}

/// `(A + δI)/(1 + δ)` with `δ = |λ_min(A)| + 0.05`.
fn shift_and_normalize(mut a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let delta = min_eigenvalue(&a)?.abs() + SHIFT_MARGIN;
    for i in 0..a.nrows() {
        a[(i, i)] += delta;
    }
    a /= 1.0 + delta;
    Ok(a)
}

/// Ω* with unit diagonal and `0.5` at every upper-triangle pair where `pattern` fires.
fn pattern_star(d: usize, mut edge: impl FnMut(usize, usize) -> bool) -> DMatrix<f64> {
    let mut star = DMatrix::identity(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            if edge(i, j) {
                star[(i, j)] = 0.5;
                star[(j, i)] = 0.5;
            }
        }
    }
    star
}

fn model2_covariance(d: usize) -> DMatrix<f64> {
    let mut sigma = DMatrix::identity(d, d);
    for k in 0..d / 2 {
        sigma[(2 * k, 2 * k + 1)] = 0.5;
        sigma[(2 * k + 1, 2 * k)] = 0.5;
    }
    sigma
}

/// Build the base precision matrix `Ω` of one of the simulation models.
///
/// Bernoulli draws are consumed in row-major upper-triangle order.
pub fn build_base_precision<R: Rng + ?Sized>(
    model_id: ModelId,
    d: usize,
    rng: &mut R,
) -> Result<PrecisionModel> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {d}")));
    }
    let omega = match model_id {
        ModelId::Model1 => shift_and_normalize(pattern_star(d, |_, _| rng.random_bool(0.5)))?,
        ModelId::Model2 => {
            let shifted = shift_and_normalize(model2_covariance(d))?;
            shifted
                .cholesky()
                .ok_or_else(|| Error::Internal("model 2 covariance not positive definite".into()))?
                .inverse()
        }
        ModelId::Model3 => {
            if d < HUB_BLOCK || !d.is_multiple_of(HUB_BLOCK) {
                return Err(Error::invalid(format!(
                    "model 3 needs a dimension divisible by {HUB_BLOCK}, got {d}"
                )));
            }
            let mut star = pattern_star(d, |_, _| rng.random_bool(0.3));
            for hub in (0..d).step_by(HUB_BLOCK) {
                for j in (hub + 1)..(hub + HUB_BLOCK) {
                    star[(hub, j)] = 0.5;
                    star[(j, hub)] = 0.5;
                }
            }
            shift_and_normalize(star)?
        }
        ModelId::Custom => {
            return Err(Error::invalid("custom models are built with PrecisionModel::new"));
        }
    };
    let omega = symmetrize(omega);
    PrecisionModel::new(omega, model_id).map_err(|e| Error::Internal(format!("model construction: {e}")))
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    let t = a.transpose();
    (a + t) * 0.5
}

/// Perturb `base` by a random symmetric `Γ` and shift both matrices.
///
/// `m_t/2` distinct upper-triangle slots are drawn uniformly without
/// replacement and set to `r`, then mirrored. With
/// `δ = |λ_min(Ω + Γ)| + 0.05` the pair is `Ω1 = Ω + δI`, `Ω2 = Ω + Γ + δI`.
pub fn build_alternative_pair<R: Rng + ?Sized>(
    base: &PrecisionModel,
    m_t: usize,
    r: f64,
    rng: &mut R,
) -> Result<AlternativePair> {
    let d = base.d();
    let slots = d * (d - 1) / 2;
    if m_t < 2 || !m_t.is_multiple_of(2) || m_t / 2 > slots {
        return Err(Error::invalid(format!(
            "m_t must be even with 2 <= m_t <= {}, got {m_t}",
            2 * slots
        )));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("signal magnitude must be finite and >= 0, got {r}")));
    }
    let mut locations: Vec<(usize, usize)> = index::sample(rng, slots, m_t / 2)
        .into_iter()
        .map(|s| upper_slot(d, s))
        .collect();
    locations.sort_unstable();

    let omega = base.omega();
    let mut perturbed = omega.clone();
    for &(i, j) in &locations {
        perturbed[(i, j)] += r;
        perturbed[(j, i)] += r;
    }
    let delta = min_eigenvalue(&perturbed)?.abs() + SHIFT_MARGIN;
    let mut omega1 = omega.clone();
    let mut omega2 = perturbed;
    for i in 0..d {
        omega1[(i, i)] += delta;
        omega2[(i, i)] += delta;
    }
    let gamma = &omega2 - &omega1;
    for (name, m) in [("omega1", &omega1), ("omega2", &omega2)] {
        if m.clone().cholesky().is_none() {
            return Err(Error::Internal(format!("{name} is not positive definite after shift")));
        }
    }
    Ok(AlternativePair { omega1, omega2, gamma, delta, m_t, r, locations })
}

/// Map a row-major upper-triangle index to its `(i, j)` position, `i < j`.
fn upper_slot(d: usize, mut s: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row_len = d - 1 - i;
        if s < row_len {
            return (i, i + 1 + s);
        }
        s -= row_len;
        i += 1;
    }
}

/// `Ω⁻¹` via Cholesky, symmetrized.
pub fn precision_to_covariance(omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(omega)?;
    let chol = omega
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("precision matrix is not positive definite"))?;
    Ok(symmetrize(chol.inverse()))
}

/// `n` i.i.d. rows of `N(0, Σ)`, generated as `L z` with `Σ = L Lᵀ`.
///
/// Standard normals are drawn row by row, `d` per row.
pub fn sample_gaussian<R: Rng + ?Sized>(
    n: usize,
    sigma: &DMatrix<f64>,
    rng: &mut R,
    group: Group,
) -> Result<DataMatrix> {
    if n < 2 {
        return Err(Error::invalid(format!("sample size must be at least 2, got {n}")));
    }
    check_symmetric(sigma)?;
    let d = sigma.nrows();
    let l = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("covariance matrix is not positive definite"))?
        .unpack();
    let mut z = DMatrix::<f64>::zeros(d, n);
    for k in 0..n {
        for i in 0..d {
            z[(i, k)] = rng.sample(StandardNormal);
        }
    }
    // columns of L z are observations
    let x = (l * z).transpose();
    DataMatrix::new(x, group)
}
