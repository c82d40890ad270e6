//! First-order Markov (AR(1)) signal model, its closed-form Karhunen-Loève
//! eigen-system, and the DCT-II bases the eigenvectors converge to as the
//! correlation coefficient approaches one.

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;

use crate::linalg::{cosine, fix_sign, norm, symmetric_eigen_desc};
use crate::{Error, Result, Scalar};

/// Stationary first-order Markov model with correlation `r^|i-j|` between
/// samples `i` and `j` of a length-`len` signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovModel<T> {
    r: T,
    len: usize,
}

impl<T: Scalar> MarkovModel<T> {
    /// Accepts `0 <= r < 1` and `len >= 2`. `r = 1` is rejected with
    /// [`Error::SingularCorrelation`].
    pub fn new(r: T, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidModel(format!("signal length {len} < 2")));
        }
        if r == T::one() {
            return Err(Error::SingularCorrelation);
        }
        if !(r >= T::zero() && r < T::one()) {
            return Err(Error::InvalidModel(format!(
                "correlation {} outside [0, 1)",
                r.as_f64()
            )));
        }
        Ok(Self { r, len })
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Toeplitz correlation matrix with entry `(i, j) = r^|i-j|`.
    pub fn correlation_matrix(&self) -> DMatrix<T> {
        let powers: Vec<T> = (0..self.len).map(|d| self.r.powi(d as i32)).collect();
        DMatrix::from_fn(self.len, self.len, |i, j| powers[i.abs_diff(j)])
    }

    fn require_open_interval(&self) -> Result<()> {
        if self.r <= T::zero() {
            return Err(Error::InvalidModel(
                "closed-form eigen-system needs 0 < r < 1".into(),
            ));
        }
        Ok(())
    }
}

/// The two candidate numerators for the closed-form eigenvalue
/// `lambda(omega) = c / (1 - 2 r cos(omega) + r^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenvalueForm {
    /// `c = 1 - r`
    OneMinusR,
    /// `c = 1 - r^2`
    OneMinusRSquared,
}

impl EigenvalueForm {
    pub const ALL: [EigenvalueForm; 2] = [EigenvalueForm::OneMinusR, EigenvalueForm::OneMinusRSquared];

    pub fn eval<T: Scalar>(self, r: T, omega: T) -> T {
        let numerator = match self {
            EigenvalueForm::OneMinusR => T::one() - r,
            EigenvalueForm::OneMinusRSquared => T::one() - r * r,
        };
        numerator / (T::one() - (r + r) * omega.cos() + r * r)
    }

    pub fn label(self) -> &'static str {
        match self {
            EigenvalueForm::OneMinusR => "1 - r",
            EigenvalueForm::OneMinusRSquared => "1 - r^2",
        }
    }
}

/// Pole-free form of `tan(N w) = -(1 - r^2) sin w / ((1 + r^2) cos w - 2 r)`
/// obtained by cross-multiplying with `cos(N w)`.
pub fn frequency_residual<T: Scalar>(r: T, len: usize, omega: T) -> T {
    let n_omega = T::from_count(len) * omega;
    let one = T::one();
    n_omega.sin() * ((one + r * r) * omega.cos() - (r + r)) + n_omega.cos() * (one - r * r) * omega.sin()
}

/// Solves for the `N` frequencies of the closed-form eigen-system, ascending
/// in `(0, pi)`.
///
/// The residual is sampled on a uniform grid of at least `50 N` interior
/// points and every sign change is bisected down to `1e-12` (or a few ulps
/// for `f32`). The trivial zeros at `0` and `pi` are excluded using the
/// analytic signs of the residual next to them: `+` just above zero and
/// `(-1)^N` just below `pi`.
pub fn solve_omega_roots<T: Scalar>(model: &MarkovModel<T>) -> Result<Vec<T>> {
    model.require_open_interval()?;
    let r = model.r;
    let len = model.len;
    let pi = T::pi();
    let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(8.0));
    let f = |w: T| frequency_residual(r, len, w);
    let end_sign = if len.is_multiple_of(2) { 1.0 } else { -1.0 };

    let mut last_brackets = Vec::new();
    for refine in 0..4 {
        let steps = 50 * len * (1 << refine);
        let step = pi / T::from_count(steps);

        // (omega, sign) samples including the virtual endpoints.
        let mut samples: Vec<(T, f64)> = Vec::with_capacity(steps + 1);
        samples.push((T::zero(), 1.0));
        for i in 1..steps {
            let mut w = step * T::from_count(i);
            let mut v = f(w);
            if v == T::zero() {
                w += step * T::lit(1e-3);
                v = f(w);
            }
            samples.push((w, if v > T::zero() { 1.0 } else { -1.0 }));
        }
        samples.push((pi, end_sign));

        let brackets: Vec<(T, T, f64)> = samples
            .windows(2)
            .filter(|pair| pair[0].1 != pair[1].1)
            .map(|pair| (pair[0].0, pair[1].0, pair[0].1))
            .collect();

        if brackets.len() == len {
            return Ok(brackets
                .into_iter()
                .map(|(lo, hi, lo_sign)| bisect(&f, lo, hi, lo_sign, tol))
                .collect());
        }
        last_brackets = brackets
            .iter()
            .map(|&(lo, hi, _)| format!("[{:.6}, {:.6}]", lo.as_f64(), hi.as_f64()))
            .collect();
    }
    Err(Error::RootCount {
        expected: len,
        found: last_brackets.len(),
        brackets: last_brackets.join(" "),
    })
}

fn bisect<T: Scalar>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T, lo_sign: f64, tol: T) -> T {
    let half = T::lit(0.5);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * half;
        let v = f(mid);
        if v == T::zero() {
            return mid;
        }
        let positive = v > T::zero();
        if positive == (lo_sign > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * half
}

/// Closed-form eigen-system of the Markov correlation matrix.
#[derive(Debug, Clone)]
pub struct KltEigenSystem<T> {
    /// Frequencies, strictly increasing.
    pub omegas: Vec<T>,
    /// Closed-form eigenvalues `lambda(omega_n)` under [`Self::form`].
    pub eigenvalues: Vec<T>,
    /// Unit eigenvectors; `eigenvectors[n][m]` is element `m` of vector `n`.
    pub eigenvectors: Vec<Vec<T>>,
    /// Eigenvalue numerator that reproduced the dense eigensolver.
    pub form: EigenvalueForm,
    /// Norms of the raw sine-formula vectors before renormalization.
    pub formula_norms: Vec<T>,
}

impl<T: Scalar> KltEigenSystem<T> {
    /// Builds the closed-form system, choosing the eigenvalue numerator that
    /// agrees with a dense eigensolver on the correlation matrix.
    pub fn solve(model: &MarkovModel<T>) -> Result<Self> {
        let omegas = solve_omega_roots(model)?;
        let numeric = numeric_eigenvalues(model);
        let form = validated_form(model.r, &omegas, &numeric).unwrap_or(EigenvalueForm::OneMinusRSquared);
        let eigenvalues: Vec<T> = omegas.iter().map(|&w| form.eval(model.r, w)).collect();

        let len = model.len;
        let centre = T::from_count(len - 1) * T::lit(0.5);
        let half_pi = T::frac_pi_2();
        let mut eigenvectors = Vec::with_capacity(len);
        let mut formula_norms = Vec::with_capacity(len);
        for (n, (&w, &lambda)) in omegas.iter().zip(&eigenvalues).enumerate() {
            let scale = (T::lit(2.0) / (T::from_count(len) + lambda)).sqrt();
            let phase = T::from_count(n + 1) * half_pi;
            let mut v: Vec<T> = (0..len)
                .map(|m| scale * (w * (T::from_count(m) - centre) + phase).sin())
                .collect();
            let raw_norm = norm(&v);
            v.iter_mut().for_each(|x| *x /= raw_norm);
            fix_sign(&mut v);
            eigenvectors.push(v);
            formula_norms.push(raw_norm);
        }
        Ok(Self {
            omegas,
            eigenvalues,
            eigenvectors,
            form,
            formula_norms,
        })
    }
}

/// Element `m` of the `n`-th closed-form eigenvector, unit norm, with the
/// first element of largest magnitude positive.
pub fn klt_eigenvector<T: Scalar>(model: &MarkovModel<T>, n: usize) -> Result<Vec<T>> {
    if n >= model.len {
        return Err(Error::IndexOutOfRange {
            index: n,
            size: model.len,
        });
    }
    let mut system = KltEigenSystem::solve(model)?;
    Ok(system.eigenvectors.swap_remove(n))
}

/// Orthonormal 1D DCT-II basis vector `n` of length `len`.
pub fn dct_limit_basis<T: Scalar>(len: usize, n: usize) -> Result<Vec<T>> {
    if n >= len {
        return Err(Error::IndexOutOfRange { index: n, size: len });
    }
    let count = T::from_count(len);
    if n == 0 {
        return Ok(vec![(T::one() / count).sqrt(); len]);
    }
    let scale = (T::lit(2.0) / count).sqrt();
    let freq = T::from_count(n) * T::pi() / (count + count);
    Ok((0..len)
        .map(|m| scale * (freq * T::from_count(2 * m + 1)).cos())
        .collect())
}

/// Dense-solver eigenvalues of the correlation matrix, descending.
pub fn numeric_eigenvalues<T: Scalar>(model: &MarkovModel<T>) -> Vec<T> {
    symmetric_eigen_desc(model.correlation_matrix()).0
}

/// Largest relative error between `form` evaluated at the (ascending) roots
/// and the (descending) numeric eigenvalues.
pub fn form_max_relative_error<T: Scalar>(form: EigenvalueForm, r: T, omegas: &[T], numeric: &[T]) -> T {
    omegas
        .iter()
        .zip(numeric)
        .map(|(&w, &lambda)| ((form.eval(r, w) - lambda) / lambda).abs())
        .fold(T::zero(), |a, b| a.max(b))
}

fn validated_form<T: Scalar>(r: T, omegas: &[T], numeric: &[T]) -> Option<EigenvalueForm> {
    EigenvalueForm::ALL
        .into_iter()
        .find(|&form| form_max_relative_error(form, r, omegas, numeric) < T::lit(1e-5).max(T::lit(1e2) * T::default_epsilon()))
}

/// One line of the KLT-vs-DCT comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct KltDctRow<T> {
    pub n: usize,
    pub omega: T,
    pub lambda_one_minus_r: T,
    pub lambda_one_minus_r2: T,
    pub lambda_numeric: T,
    /// `|cos|` between numeric eigenvector `n` (by descending eigenvalue)
    /// and DCT basis `n`.
    pub cos_similarity: T,
    /// Index of the DCT basis most aligned with numeric eigenvector `n`.
    pub best_dct_index: usize,
}

/// Numerical comparison of the Markov KLT with DCT-II bases.
#[derive(Debug, Clone)]
pub struct KltDctReport<T> {
    pub r: T,
    pub len: usize,
    pub rows: Vec<KltDctRow<T>>,
    /// Numerator form matching the dense eigensolver, if any.
    pub matched_form: Option<EigenvalueForm>,
    pub error_one_minus_r: T,
    pub error_one_minus_r2: T,
    pub min_cos: T,
    pub mean_cos: T,
    /// Largest eigenvalue pairs with the lowest frequency, and so on down.
    pub order_matches_frequency: bool,
    /// Largest numeric eigenvalue, to compare with the signal length.
    pub lambda0_numeric: T,
    /// Worst `|R phi - lambda phi|` over the closed-form eigenvectors.
    pub closed_form_residual: T,
}

/// Compares the eigenvalue-sorted eigenvectors of the correlation matrix
/// with frequency-sorted DCT bases (sign invariant), and cross-checks the
/// closed-form eigenvalue and eigenvector formulas against the dense solver.
pub fn compare_klt_dct<T: Scalar>(model: &MarkovModel<T>) -> Result<KltDctReport<T>> {
    model.require_open_interval()?;
    let len = model.len;
    let r = model.r;
    let matrix = model.correlation_matrix();
    let (numeric, vectors) = symmetric_eigen_desc(matrix.clone());
    let system = KltEigenSystem::solve(model)?;

    let dct: Vec<Vec<T>> = (0..len).map(|n| dct_limit_basis(len, n)).collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(len);
    let mut order_ok = true;
    for n in 0..len {
        let sims: Vec<T> = dct.iter().map(|d| cosine(&vectors[n], d).abs()).collect();
        let best = sims
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0;
        order_ok &= best == n;
        let w = system.omegas[n];
        rows.push(KltDctRow {
            n,
            omega: w,
            lambda_one_minus_r: EigenvalueForm::OneMinusR.eval(r, w),
            lambda_one_minus_r2: EigenvalueForm::OneMinusRSquared.eval(r, w),
            lambda_numeric: numeric[n],
            cos_similarity: sims[n],
            best_dct_index: best,
        });
    }

    let closed_form_residual = system
        .eigenvectors
        .iter()
        .zip(&system.eigenvalues)
        .map(|(v, &lambda)| {
            let phi = nalgebra::DVector::from_column_slice(v);
            (&matrix * &phi - phi * lambda).norm()
        })
        .fold(T::zero(), |a, b| a.max(b));

    let min_cos = rows.iter().fold(T::one(), |m, row| m.min(row.cos_similarity));
    let mean_cos = rows.iter().fold(T::zero(), |s, row| s + row.cos_similarity) / T::from_count(len);

    Ok(KltDctReport {
        r,
        len,
        matched_form: validated_form(r, &system.omegas, &numeric),
        error_one_minus_r: form_max_relative_error(EigenvalueForm::OneMinusR, r, &system.omegas, &numeric),
        error_one_minus_r2: form_max_relative_error(EigenvalueForm::OneMinusRSquared, r, &system.omegas, &numeric),
        rows,
        min_cos,
        mean_cos,
        order_matches_frequency: order_ok,
        lambda0_numeric: numeric[0],
        closed_form_residual,
    })
}

impl<T: Scalar> KltDctReport<T> {
    /// Closed-form eigenvalue under the validated numerator (falls back to
    /// `1 - r^2` when neither form matched).
    pub fn lambda_formula(&self, row: &KltDctRow<T>) -> T {
        match self.matched_form {
            Some(EigenvalueForm::OneMinusR) => row.lambda_one_minus_r,
            _ => row.lambda_one_minus_r2,
        }
    }

    /// Writes `n,omega,lambda_formula,lambda_numeric,cos_similarity` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,omega,lambda_formula,lambda_numeric,cos_similarity")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{:.15e},{:.15e},{:.15e},{:.15e}",
                row.n,
                row.omega.as_f64(),
                self.lambda_formula(row).as_f64(),
                row.lambda_numeric.as_f64(),
                row.cos_similarity.as_f64()
            )?;
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for KltDctReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Markov KLT vs DCT-II  (r = {}, N = {})", self.r.as_f64(), self.len)?;
        writeln!(
            f,
            "eigenvalue numerator check: max rel. error  1 - r: {:.3e}   1 - r^2: {:.3e}",
            self.error_one_minus_r.as_f64(),
            self.error_one_minus_r2.as_f64()
        )?;
        match self.matched_form {
            Some(form) => writeln!(f, "dense eigensolver validates numerator: {}", form.label())?,
            None => writeln!(f, "dense eigensolver validates neither numerator")?,
        }
        writeln!(
            f,
            "largest eigenvalue: {:.6} (signal length N = {})",
            self.lambda0_numeric.as_f64(),
            self.len
        )?;
        writeln!(
            f,
            "closed-form eigenvector residual max |R phi - lambda phi|: {:.3e}",
            self.closed_form_residual.as_f64()
        )?;
        writeln!(f, "{:>4} {:>12} {:>14} {:>14} {:>10}", "n", "omega", "lambda_formula", "lambda_numeric", "|cos|")?;
        for row in &self.rows {
            writeln!(
                f,
                "{:>4} {:>12.8} {:>14.8} {:>14.8} {:>10.6}",
                row.n,
                row.omega.as_f64(),
                self.lambda_formula(row).as_f64(),
                row.lambda_numeric.as_f64(),
                row.cos_similarity.as_f64()
            )?;
        }
        writeln!(
            f,
            "eigenvalue rank order equals DCT frequency order: {}",
            if self.order_matches_frequency { "yes" } else { "no" }
        )?;
        write!(
            f,
            "min |cos| = {:.6}   mean |cos| = {:.6}",
            self.min_cos.as_f64(),
            self.mean_cos.as_f64()
        )
    }
}
