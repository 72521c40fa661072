//! Reward-form representations: transform evaluation, positive projections,
//! Markovian structural validation, and the exact symbolic denominator via
//! the subset determinant expansion.

use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact::{ExactError, QMatrix};
use crate::ratfun::{format_rational, parse_rational, Polynomial, RatFunError};

/// Guard for the `2^m` subset expansion in [`symbolic_denominator`].
pub const SUBSET_EXPANSION_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum KulkarniError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("resolvent matrix is singular at the evaluation point")]
    SingularResolvent,
    #[error("projection direction must be non-negative and nonzero")]
    InvalidDirection,
    #[error("state count {m} exceeds the subset expansion guard {SUBSET_EXPANSION_LIMIT}")]
    TooManyStates { m: usize },
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    RatFun(#[from] RatFunError),
}

/// Reward representation `(alpha, T, K, t, p0)` of a candidate law on
/// `R_+^n`: transform `p0 + alpha (-T + diag(K s))^{-1} t`.
///
/// The struct itself only fixes dimensions. Whether the data satisfies the
/// Markovian sign constraints is a property checked by [`validate_mphstar`];
/// matrix-exponential use only needs `T` Hurwitz-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct KulkarniRep {
    pub m: usize,
    pub n: usize,
    /// Initial row vector alpha (length m).
    pub initial: RowDVector<f64>,
    /// Transition matrix T (m x m).
    pub generator: DMatrix<f64>,
    /// Reward matrix K (m x n).
    pub reward: DMatrix<f64>,
    /// Exit column t (length m).
    pub exit: DVector<f64>,
    /// Atom at the origin, p0.
    pub atom: f64,
}

impl KulkarniRep {
    pub fn new(
        initial: RowDVector<f64>,
        generator: DMatrix<f64>,
        reward: DMatrix<f64>,
        exit: DVector<f64>,
        atom: f64,
    ) -> Result<Self, KulkarniError> {
        let m = generator.nrows();
        if generator.ncols() != m {
            return Err(KulkarniError::Dimension(format!(
                "T is {}x{}",
                generator.nrows(),
                generator.ncols()
            )));
        }
        if initial.ncols() != m || exit.nrows() != m || reward.nrows() != m {
            return Err(KulkarniError::Dimension(
                "alpha, t, and K must have m rows/columns".into(),
            ));
        }
        Ok(KulkarniRep {
            m,
            n: reward.ncols(),
            initial,
            generator,
            reward,
            exit,
            atom,
        })
    }

    /// A single-state Markovian representation of Exp(rate) with unit reward
    /// on the given coordinate.
    pub fn exponential(rate: f64, n: usize, coordinate: usize) -> Self {
        let mut reward = DMatrix::zeros(1, n);
        reward[(0, coordinate)] = 1.0;
        KulkarniRep {
            m: 1,
            n,
            initial: RowDVector::from_element(1, 1.0),
            generator: DMatrix::from_element(1, 1, -rate),
            reward,
            exit: DVector::from_element(1, rate),
            atom: 0.0,
        }
    }
}

/// Evaluates `p0 + alpha (-T + diag(K s))^{-1} t`.
pub fn transform_eval(rep: &KulkarniRep, s: &[f64]) -> Result<f64, KulkarniError> {
    if s.len() != rep.n {
        return Err(KulkarniError::Dimension(format!(
            "point has {} coordinates, rep has n = {}",
            s.len(),
            rep.n
        )));
    }
    let mut m = -rep.generator.clone();
    for i in 0..rep.m {
        let ks: f64 = (0..rep.n).map(|j| rep.reward[(i, j)] * s[j]).sum();
        m[(i, i)] += ks;
    }
    let x = m
        .lu()
        .solve(&rep.exit)
        .ok_or(KulkarniError::SingularResolvent)?;
    Ok(rep.atom + (&rep.initial * x)[(0, 0)])
}

/// Univariate law obtained by projecting a reward representation onto a
/// non-negative direction.
///
/// States whose projected reward rate is zero are kept, so the transform is
/// evaluated through the weighted resolvent
/// `p0 + alpha (u diag(w) - T)^{-1} t` with `w = K a >= 0`; when all weights
/// are one this is the classical univariate resolvent form.
#[derive(Debug, Clone, Serialize)]
pub struct UnivariateMe {
    #[serde(serialize_with = "ser_row")]
    pub initial: RowDVector<f64>,
    #[serde(rename = "T", serialize_with = "ser_mat")]
    pub generator: DMatrix<f64>,
    #[serde(serialize_with = "ser_col")]
    pub weights: DVector<f64>,
    #[serde(rename = "t", serialize_with = "ser_col")]
    pub exit: DVector<f64>,
    #[serde(rename = "p0")]
    pub atom: f64,
}

impl UnivariateMe {
    /// Transform value at `u >= 0`.
    pub fn eval(&self, u: f64) -> Result<f64, KulkarniError> {
        let m = self.generator.nrows();
        let mut mat = -self.generator.clone();
        for i in 0..m {
            mat[(i, i)] += u * self.weights[i];
        }
        let x = mat
            .lu()
            .solve(&self.exit)
            .ok_or(KulkarniError::SingularResolvent)?;
        Ok(self.atom + (&self.initial * x)[(0, 0)])
    }
}

/// Projects onto `<a, X>` for `a >= 0`, `a != 0`: the transform at `u`
/// equals `transform_eval(rep, u * a)`.
pub fn project(rep: &KulkarniRep, direction: &[f64]) -> Result<UnivariateMe, KulkarniError> {
    if direction.len() != rep.n {
        return Err(KulkarniError::Dimension(format!(
            "direction has {} coordinates, rep has n = {}",
            direction.len(),
            rep.n
        )));
    }
    if direction.iter().any(|&a| a < 0.0) || direction.iter().all(|&a| a == 0.0) {
        return Err(KulkarniError::InvalidDirection);
    }
    let weights = DVector::from_fn(rep.m, |i, _| {
        (0..rep.n).map(|j| rep.reward[(i, j)] * direction[j]).sum()
    });
    Ok(UnivariateMe {
        initial: rep.initial.clone(),
        generator: rep.generator.clone(),
        weights,
        exit: rep.exit.clone(),
        atom: rep.atom,
    })
}

/// One named condition of the Markovian validation report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Equality tolerance used by [`validate_mphstar`].
pub const VALIDATION_TOL: f64 = 1e-10;

/// Checks the Markovian structural conditions one by one and reports each.
///
/// Transience is certified by the spectrum of `-T` lying in the open right
/// half-plane together with positive leading principal minors; for a
/// Z-matrix these are each equivalent to the nonsingular M-matrix property.
pub fn validate_mphstar(rep: &KulkarniRep) -> ValidationReport {
    let tol = VALIDATION_TOL;
    let m = rep.m;
    let mut checks = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        checks.push(Check {
            name,
            passed,
            detail,
        });
    };

    let bad_diag: Vec<usize> = (0..m).filter(|&i| rep.generator[(i, i)] >= 0.0).collect();
    push(
        "diagonal_negative",
        bad_diag.is_empty(),
        if bad_diag.is_empty() {
            "T_ii < 0 for all states".into()
        } else {
            format!("non-negative diagonal at states {bad_diag:?}")
        },
    );

    let mut min_offdiag = f64::INFINITY;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                min_offdiag = min_offdiag.min(rep.generator[(i, j)]);
            }
        }
    }
    if m <= 1 {
        min_offdiag = 0.0;
    }
    push(
        "offdiagonal_nonnegative",
        min_offdiag >= -tol,
        format!("min off-diagonal entry {min_offdiag:.3e}"),
    );

    let row_sums = &rep.generator * DVector::from_element(m, 1.0);
    let max_row_sum = row_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    push(
        "row_sums_nonpositive",
        max_row_sum <= tol,
        format!("max row sum {max_row_sum:.3e}"),
    );

    let spectrum = hurwitz_check(&rep.generator);
    push(
        "transient_spectrum",
        spectrum.hurwitz,
        format!("max real part {:.3e}", spectrum.max_real_part),
    );

    let mut min_minor = f64::INFINITY;
    let neg_t = -rep.generator.clone();
    for k in 1..=m {
        let sub = neg_t.view((0, 0), (k, k)).into_owned();
        min_minor = min_minor.min(sub.determinant());
    }
    push(
        "leading_minors_positive",
        min_minor > 0.0,
        format!("min leading principal minor of -T: {min_minor:.3e}"),
    );

    let min_alpha = rep.initial.iter().cloned().fold(f64::INFINITY, f64::min);
    push(
        "initial_nonnegative",
        min_alpha >= -tol,
        format!("min alpha entry {min_alpha:.3e}"),
    );

    let alpha_sum: f64 = rep.initial.iter().sum();
    push(
        "initial_subprobability",
        alpha_sum <= 1.0 + tol,
        format!("alpha 1 = {alpha_sum}"),
    );

    let min_reward = rep.reward.iter().cloned().fold(f64::INFINITY, f64::min);
    push(
        "reward_nonnegative",
        rep.n == 0 || min_reward >= -tol,
        format!("min reward entry {min_reward:.3e}"),
    );

    let exit_gap = (&rep.exit + &rep.generator * DVector::from_element(m, 1.0))
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    push(
        "exit_is_negative_row_sum",
        exit_gap <= tol,
        format!("max |t + T1| = {exit_gap:.3e}"),
    );

    let atom_gap = (rep.atom - (1.0 - alpha_sum)).abs();
    push(
        "atom_matches_defect",
        atom_gap <= tol,
        format!("|p0 - (1 - alpha 1)| = {atom_gap:.3e}"),
    );

    ValidationReport { checks }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub hurwitz: bool,
    pub max_real_part: f64,
    #[serde(skip)]
    pub eigenvalues: Vec<Complex<f64>>,
}

/// Numeric Hurwitz stability: true iff the maximal eigenvalue real part is
/// below `-1e-10`.
pub fn hurwitz_check(t: &DMatrix<f64>) -> SpectrumReport {
    let eigenvalues: Vec<Complex<f64>> = t.clone().complex_eigenvalues().iter().cloned().collect();
    let max_real_part = eigenvalues
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    SpectrumReport {
        hurwitz: max_real_part < -1e-10,
        max_real_part,
        eigenvalues,
    }
}

/// Exact rational rendering of the transition and reward matrices, used for
/// symbolic work on a representation.
#[derive(Debug, Clone)]
pub struct ExactRepCoeffs {
    pub generator: QMatrix,
    pub reward: QMatrix,
}

impl ExactRepCoeffs {
    pub fn new(generator: QMatrix, reward: QMatrix) -> Result<Self, KulkarniError> {
        if !generator.is_square() {
            return Err(KulkarniError::Dimension("T must be square".into()));
        }
        if reward.nrows() != generator.nrows() {
            return Err(KulkarniError::Dimension(
                "K must have as many rows as T".into(),
            ));
        }
        Ok(ExactRepCoeffs { generator, reward })
    }

    /// Exact lift of the floating-point matrices of a representation.
    pub fn from_rep(rep: &KulkarniRep) -> Result<Self, KulkarniError> {
        Ok(ExactRepCoeffs {
            generator: QMatrix::from_f64(&rep.generator)?,
            reward: QMatrix::from_f64(&rep.reward)?,
        })
    }

    pub fn m(&self) -> usize {
        self.generator.nrows()
    }

    pub fn n(&self) -> usize {
        self.reward.ncols()
    }

    /// Reward linear form of state `i`: `kappa_i(s) = sum_j K_ij s_j`.
    pub fn reward_form(&self, i: usize) -> Result<Polynomial, KulkarniError> {
        let n = self.n();
        Ok(Polynomial::from_terms(
            n,
            (0..n).map(|j| {
                let mut e = vec![0u32; n];
                e[j] = 1;
                (e, self.reward[(i, j)].clone())
            }),
        )?)
    }

    /// Indices of states with a nonzero reward row.
    pub fn reward_support(&self) -> Vec<usize> {
        (0..self.m())
            .filter(|&i| (0..self.n()).any(|j| !self.reward[(i, j)].is_zero()))
            .collect()
    }
}

/// Exact determinant polynomial `F(s) = det(-T + diag(K s))` by the subset
/// expansion: summing over subsets `J` of states, each term is the principal
/// minor of `-T` on the complement times the product of the reward forms in
/// `J`. Terms with a zero-reward state vanish, so only subsets of the reward
/// support contribute; the empty product is 1.
pub fn symbolic_denominator(coeffs: &ExactRepCoeffs) -> Result<Polynomial, KulkarniError> {
    let m = coeffs.m();
    if m > SUBSET_EXPANSION_LIMIT {
        return Err(KulkarniError::TooManyStates { m });
    }
    let n = coeffs.n();
    let neg_t = coeffs.generator.scale(&-BigRational::one());
    let support = coeffs.reward_support();
    let forms: Vec<Polynomial> = support
        .iter()
        .map(|&i| coeffs.reward_form(i))
        .collect::<Result<_, _>>()?;

    let mut total = Polynomial::zero(n);
    let k = support.len();
    for mask in 0u32..(1u32 << k) {
        let complement: Vec<usize> = (0..m)
            .filter(|i| match support.iter().position(|s| s == i) {
                Some(pos) => mask & (1 << pos) == 0,
                None => true,
            })
            .collect();
        let minor = neg_t.principal_submatrix(&complement)?.det()?;
        if minor.is_zero() {
            continue;
        }
        let mut term = Polynomial::constant(n, minor);
        for (pos, form) in forms.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                term = term.mul(form)?;
            }
        }
        total = total.add(&term)?;
    }
    Ok(total)
}

/// Exact principal minor of a rational matrix; the empty subset yields 1.
pub fn principal_minor(matrix: &QMatrix, subset: &[usize]) -> Result<BigRational, KulkarniError> {
    Ok(matrix.principal_submatrix(subset)?.det()?)
}

fn ser_row<S: Serializer>(v: &RowDVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    v.iter().copied().collect::<Vec<f64>>().serialize(s)
}

fn ser_col<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    v.iter().copied().collect::<Vec<f64>>().serialize(s)
}

fn ser_mat<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    m.row_iter()
        .map(|r| r.iter().copied().collect::<Vec<f64>>())
        .collect::<Vec<Vec<f64>>>()
        .serialize(s)
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NumberOrString {
    Number(f64),
    Text(String),
}

impl NumberOrString {
    fn as_f64(&self) -> Result<f64, RatFunError> {
        match self {
            NumberOrString::Number(v) => Ok(*v),
            NumberOrString::Text(s) => {
                Ok(crate::ratfun::rational_to_f64(&parse_rational(s)?))
            }
        }
    }

    fn as_rational(&self) -> Result<BigRational, RatFunError> {
        match self {
            NumberOrString::Number(v) => BigRational::from_float(*v)
                .ok_or(RatFunError::BadRational(format!("{v}"))),
            NumberOrString::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RepRepr {
    m: usize,
    n: usize,
    alpha: Vec<NumberOrString>,
    #[serde(rename = "T")]
    t_mat: Vec<Vec<NumberOrString>>,
    #[serde(rename = "K")]
    k_mat: Vec<Vec<NumberOrString>>,
    t: Vec<NumberOrString>,
    p0: NumberOrString,
    #[serde(default, skip_serializing_if = "is_false")]
    exact: bool,
}

fn is_false(b: &bool) -> bool {
    !b
}

impl Serialize for KulkarniRep {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Plain<'a> {
            m: usize,
            n: usize,
            #[serde(serialize_with = "ser_row")]
            alpha: &'a RowDVector<f64>,
            #[serde(rename = "T", serialize_with = "ser_mat")]
            t_mat: &'a DMatrix<f64>,
            #[serde(rename = "K", serialize_with = "ser_mat")]
            k_mat: &'a DMatrix<f64>,
            #[serde(serialize_with = "ser_col")]
            t: &'a DVector<f64>,
            p0: f64,
        }
        Plain {
            m: self.m,
            n: self.n,
            alpha: &self.initial,
            t_mat: &self.generator,
            k_mat: &self.reward,
            t: &self.exit,
            p0: self.atom,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KulkarniRep {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RepRepr::deserialize(deserializer)?;
        let (rep, _) = rep_from_repr(&repr).map_err(D::Error::custom)?;
        Ok(rep)
    }
}

fn rep_from_repr(repr: &RepRepr) -> Result<(KulkarniRep, Option<ExactRepCoeffs>), String> {
    let m = repr.m;
    let n = repr.n;
    if repr.alpha.len() != m
        || repr.t.len() != m
        || repr.t_mat.len() != m
        || repr.t_mat.iter().any(|r| r.len() != m)
        || repr.k_mat.len() != m
        || repr.k_mat.iter().any(|r| r.len() != n)
    {
        return Err("matrix shapes do not match m and n".into());
    }
    let conv = |v: &NumberOrString| v.as_f64().map_err(|e| e.to_string());
    let initial = RowDVector::from_iterator(
        m,
        repr.alpha
            .iter()
            .map(conv)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter(),
    );
    let generator = DMatrix::from_row_iterator(
        m,
        m,
        repr.t_mat
            .iter()
            .flatten()
            .map(conv)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter(),
    );
    let reward = DMatrix::from_row_iterator(
        m,
        n,
        repr.k_mat
            .iter()
            .flatten()
            .map(conv)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter(),
    );
    let exit = DVector::from_iterator(
        m,
        repr.t
            .iter()
            .map(conv)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter(),
    );
    let atom = conv(&repr.p0)?;
    let rep = KulkarniRep::new(initial, generator, reward, exit, atom).map_err(|e| e.to_string())?;

    let exact = if repr.exact {
        let lift_mat = |rows: &Vec<Vec<NumberOrString>>| -> Result<QMatrix, String> {
            QMatrix::from_rows(
                rows.iter()
                    .map(|r| {
                        r.iter()
                            .map(|v| v.as_rational().map_err(|e| e.to_string()))
                            .collect()
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            )
            .map_err(|e| e.to_string())
        };
        Some(
            ExactRepCoeffs::new(lift_mat(&repr.t_mat)?, lift_mat(&repr.k_mat)?)
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    Ok((rep, exact))
}

/// Parses a representation document, returning the floating-point view and,
/// when the document is marked `"exact": true` with string-rational entries,
/// the exact rendering of `T` and `K` as well.
pub fn rep_from_json(text: &str) -> Result<(KulkarniRep, Option<ExactRepCoeffs>), KulkarniError> {
    let repr: RepRepr =
        serde_json::from_str(text).map_err(|e| KulkarniError::Dimension(e.to_string()))?;
    rep_from_repr(&repr).map_err(KulkarniError::Dimension)
}

/// Serializes a representation with exact string-rational entries.
pub fn rep_to_exact_json(rep: &KulkarniRep, coeffs: &ExactRepCoeffs) -> serde_json::Value {
    let rat_mat = |m: &QMatrix| -> Vec<Vec<String>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| format_rational(&m[(i, j)])).collect())
            .collect()
    };
    serde_json::json!({
        "m": rep.m,
        "n": rep.n,
        "alpha": rep.initial.iter().copied().collect::<Vec<f64>>(),
        "T": rat_mat(&coeffs.generator),
        "K": rat_mat(&coeffs.reward),
        "t": rep.exit.iter().copied().collect::<Vec<f64>>(),
        "p0": rep.atom,
        "exact": true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_series_two_state() -> KulkarniRep {
        // States in series, each rewarding its own coordinate: two
        // independent Exp(1) components.
        KulkarniRep::new(
            RowDVector::from_row_slice(&[1.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]),
            DMatrix::identity(2, 2),
            DVector::from_column_slice(&[0.0, 1.0]),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn transform_at_origin_is_one() {
        let rep = exp_series_two_state();
        assert!((transform_eval(&rep, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transform_of_unit_exponential() {
        let rep = KulkarniRep::exponential(1.0, 1, 0);
        assert!((transform_eval(&rep, &[1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transform_of_series_chain() {
        let rep = exp_series_two_state();
        assert!((transform_eval(&rep, &[1.0, 1.0]).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn projection_on_axis_matches_transform() {
        let rep = exp_series_two_state();
        let proj = project(&rep, &[1.0, 0.0]).unwrap();
        for u in [0.0, 0.3, 1.0, 2.5] {
            let direct = transform_eval(&rep, &[u, 0.0]).unwrap();
            assert!((proj.eval(u).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_diagonal_is_erlang() {
        let rep = exp_series_two_state();
        let proj = project(&rep, &[1.0, 1.0]).unwrap();
        assert!((proj.eval(1.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((proj.eval(0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_rejects_bad_directions() {
        let rep = exp_series_two_state();
        assert!(matches!(
            project(&rep, &[0.0, 0.0]),
            Err(KulkarniError::InvalidDirection)
        ));
        assert!(matches!(
            project(&rep, &[1.0, -0.1]),
            Err(KulkarniError::InvalidDirection)
        ));
    }

    #[test]
    fn validation_passes_on_unit_exponential() {
        let rep = KulkarniRep::exponential(1.0, 1, 0);
        let report = validate_mphstar(&rep);
        assert!(report.all_passed(), "failures: {:?}", report.failed());
    }

    #[test]
    fn validation_flags_positive_diagonal() {
        let mut rep = exp_series_two_state();
        rep.generator[(0, 0)] = 0.5;
        let report = validate_mphstar(&rep);
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "diagonal_negative" && !c.passed));
    }

    #[test]
    fn validation_flags_negative_reward() {
        let mut rep = exp_series_two_state();
        rep.reward[(0, 1)] = -0.5;
        let report = validate_mphstar(&rep);
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "reward_nonnegative" && !c.passed));
    }

    #[test]
    fn symbolic_denominator_of_independent_pair() {
        // T = diag(-1, -1), K = I: F = (1 + s1)(1 + s2).
        let coeffs = ExactRepCoeffs::new(
            QMatrix::from_int_rows(&[&[-1, 0], &[0, -1]]),
            QMatrix::from_int_rows(&[&[1, 0], &[0, 1]]),
        )
        .unwrap();
        let f = symbolic_denominator(&coeffs).unwrap();
        let expected = Polynomial::from_int_terms(
            2,
            &[(&[0, 0], 1), (&[1, 0], 1), (&[0, 1], 1), (&[1, 1], 1)],
        )
        .unwrap();
        assert_eq!(f, expected);
    }

    #[test]
    fn symbolic_denominator_scalar_case() {
        // m = 1, T = (-5/2), K = (3): F = 5/2 + 3 s1.
        let coeffs = ExactRepCoeffs::new(
            QMatrix::from_rows(vec![vec![BigRational::new((-5).into(), 2.into())]]).unwrap(),
            QMatrix::from_int_rows(&[&[3]]),
        )
        .unwrap();
        let f = symbolic_denominator(&coeffs).unwrap();
        let expected = Polynomial::from_terms(
            1,
            [
                (vec![0], BigRational::new(5.into(), 2.into())),
                (vec![1], BigRational::from_integer(3.into())),
            ],
        )
        .unwrap();
        assert_eq!(f, expected);
    }

    #[test]
    fn symbolic_denominator_zero_reward() {
        // K = 0: F is the constant det(-T).
        let coeffs = ExactRepCoeffs::new(
            QMatrix::from_int_rows(&[&[-2, 1], &[0, -3]]),
            QMatrix::from_int_rows(&[&[0], &[0]]),
        )
        .unwrap();
        let f = symbolic_denominator(&coeffs).unwrap();
        assert_eq!(f, Polynomial::constant(1, BigRational::from_integer(6.into())));
    }

    #[test]
    fn symbolic_denominator_guard() {
        let m = SUBSET_EXPANSION_LIMIT + 1;
        let coeffs = ExactRepCoeffs::new(
            QMatrix::identity(m).scale(&-BigRational::one()),
            QMatrix::zeros(m, 1),
        )
        .unwrap();
        assert!(matches!(
            symbolic_denominator(&coeffs),
            Err(KulkarniError::TooManyStates { .. })
        ));
    }

    #[test]
    fn principal_minor_conventions() {
        let a = QMatrix::from_int_rows(&[&[3, 9], &[9, 1]]);
        assert_eq!(
            principal_minor(&a, &[]).unwrap(),
            BigRational::one()
        );
        assert_eq!(
            principal_minor(&a, &[0]).unwrap(),
            BigRational::from_integer(3.into())
        );
        let d = QMatrix::from_int_rows(&[&[1, 0], &[0, 2]]);
        assert_eq!(
            principal_minor(&d, &[0, 1]).unwrap(),
            BigRational::from_integer(2.into())
        );
    }

    #[test]
    fn hurwitz_examples() {
        assert!(hurwitz_check(&DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0])).hurwitz);
        // Purely imaginary spectrum is not Hurwitz.
        assert!(!hurwitz_check(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).hurwitz);
    }

    #[test]
    fn rep_json_round_trip() {
        let rep = exp_series_two_state();
        let text = serde_json::to_string(&rep).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["m"], 2);
        assert_eq!(v["T"][0][1], 1.0);
        let back: KulkarniRep = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn rep_json_exact_variant() {
        let text = r#"{
            "m": 2, "n": 2,
            "alpha": ["1", "0"],
            "T": [["-1", "1"], ["0", "-1"]],
            "K": [["1", "0"], ["0", "1"]],
            "t": ["0", "1"],
            "p0": "0",
            "exact": true
        }"#;
        let (rep, exact) = rep_from_json(text).unwrap();
        assert_eq!(rep, exp_series_two_state());
        let coeffs = exact.expect("exact coefficients requested");
        let f = symbolic_denominator(&coeffs).unwrap();
        assert_eq!(f.coefficient(&[1, 1]), BigRational::one());
    }
}
