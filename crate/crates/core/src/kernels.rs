//! Reproducing-kernel tests for `L^2_w`-admissibility.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::DiagonalSystem;

pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

type KernelFn = Arc<dyn Fn(Complex64, Complex64) -> Complex64 + Send + Sync>;

/// A reproducing kernel `(z, zeta) -> k_z(zeta)`.
#[derive(Clone)]
pub enum KernelSpec {
    /// `1 / (2 pi (zeta + conj z))`.
    Hardy,
    /// `c_alpha / (zeta + conj z)^{2 + alpha}` with `c_alpha = 2^alpha (alpha + 1) / pi`.
    Bergman { alpha: f64 },
    Custom { name: String, kernel: KernelFn },
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "hardy" {
            return Ok(KernelSpec::Hardy);
        }
        if let Some(rest) = s.strip_prefix("bergman:") {
            let alpha: f64 = rest
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad Bergman exponent in '{s}'")))?;
            return KernelSpec::bergman(alpha);
        }
        Err(Error::InvalidInput(format!("unknown kernel '{s}'; expected 'hardy' or 'bergman:<alpha>'")))
    }
}

impl KernelSpec {
    pub fn bergman(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("Bergman exponent must exceed -1, got {alpha}")));
        }
        Ok(KernelSpec::Bergman { alpha })
    }

    pub fn custom<F>(name: &str, kernel: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Send + Sync + 'static,
    {
        KernelSpec::Custom {
            name: name.to_string(),
            kernel: Arc::new(kernel),
        }
    }

    pub fn name(&self) -> String {
        match self {
            KernelSpec::Hardy => "hardy".into(),
            KernelSpec::Bergman { alpha } => format!("bergman:{alpha}"),
            KernelSpec::Custom { name, .. } => name.clone(),
        }
    }

    /// `k_z(zeta)`.
    pub fn eval(&self, z: Complex64, zeta: Complex64) -> Complex64 {
        let s = zeta + z.conj();
        match self {
            KernelSpec::Hardy => 1.0 / (2.0 * PI * s),
            KernelSpec::Bergman { alpha } => 2f64.powf(*alpha) * (alpha + 1.0) / PI * s.powf(-(2.0 + alpha)),
            KernelSpec::Custom { kernel, .. } => kernel(z, zeta),
        }
    }

    /// `max |k_z(zeta) - conj(k_zeta(z))|` over all pairs of `points`.
    pub fn hermitian_defect(&self, points: &[Complex64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &z in points {
            for &w in points {
                worst = worst.max((self.eval(z, w) - self.eval(w, z).conj()).norm());
            }
        }
        worst
    }
}

fn require_hilbert(sys: &DiagonalSystem) -> Result<()> {
    if sys.state_exponent() != 2.0 {
        return Err(Error::Precondition(format!(
            "kernel tests need q = 2, got q = {}",
            sys.state_exponent()
        )));
    }
    Ok(())
}

fn truncation(sys: &DiagonalSystem, n: Option<usize>) -> Result<usize> {
    match n {
        Some(n) if n > sys.len() => Err(Error::InvalidInput(format!(
            "truncation {n} exceeds the {} available modes",
            sys.len()
        ))),
        Some(n) => Ok(n),
        None => Ok(sys.len()),
    }
}

/// `Re k_{-lambda_l}(-lambda_k)` for `k, l < n`, row-major.
pub fn kernel_matrix(sys: &DiagonalSystem, kernel: &KernelSpec, n: usize) -> Vec<Vec<f64>> {
    let z: Vec<Complex64> = sys.eigenvalues()[..n].iter().map(|l| -l).collect();
    (0..n)
        .into_par_iter()
        .map(|k| (0..n).map(|l| kernel.eval(z[l], z[k]).re).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleSum {
    pub total: f64,
    /// `(n, sum over k, l <= n)` at dyadic `n` and at the truncation.
    pub partial_sums: Vec<(usize, f64)>,
    /// Slope of `log2` partial sum against `log2 n` over the top half.
    pub slope: Option<f64>,
}

/// `sum_{k,l <= N} |b_k b_l Re k_{-lambda_k}(-lambda_l)|^2` with dyadic partial sums.
pub fn double_sum_condition(sys: &DiagonalSystem, kernel: &KernelSpec, n: Option<usize>) -> Result<DoubleSum> {
    require_hilbert(sys)?;
    let n = truncation(sys, n)?;
    let b: Vec<f64> = sys.coefficients()[..n].iter().map(|b| b.norm()).collect();
    let z: Vec<Complex64> = sys.eigenvalues()[..n].iter().map(|l| -l).collect();
    let term = |k: usize, l: usize| {
        let v = b[k] * b[l] * kernel.eval(z[k], z[l]).re;
        v * v
    };
    // Contribution of index m to the square [0, m] x [0, m].
    let increments: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|m| (0..m).map(|k| term(k, m) + term(m, k)).sum::<f64>() + term(m, m))
        .collect();
    let mut partial_sums = Vec::new();
    let mut total = 0.0;
    for (i, inc) in increments.iter().enumerate() {
        total += inc;
        let count = i + 1;
        if count.is_power_of_two() || count == n {
            partial_sums.push((count, total));
        }
    }
    let points: Vec<(f64, f64)> = partial_sums
        .iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|&(c, s)| ((c as f64).log2(), s.log2()))
        .collect();
    let slope = fit_slope(&points[points.len() / 2..]);
    Ok(DoubleSum {
        total,
        partial_sums,
        slope,
    })
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub size: usize,
    pub first: usize,
    pub last: usize,
    pub double_sum: f64,
    pub mass: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub rows: Vec<SubsetRow>,
    pub sup_ratio: f64,
}

/// Dyadic blocks `[2^j - 1, 2^{j+1} - 1)` followed by the prefixes `[0, 2^{j+1} - 1)`.
pub fn default_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut blocks = Vec::new();
    let mut prefixes = Vec::new();
    let mut start = 0;
    let mut width = 1;
    while start < n {
        let end = (start + width).min(n);
        blocks.push((start..end).collect());
        prefixes.push((0..end).collect());
        start = end;
        width *= 2;
    }
    blocks.extend(prefixes);
    blocks
}

/// `sup_Gamma sum_{k,l in Gamma} |b_k b_l Re k|^2 / sum_{n in Gamma} |b_n|^2`.
pub fn necessary_subset_check(
    sys: &DiagonalSystem,
    kernel: &KernelSpec,
    subsets: Option<&[Vec<usize>]>,
) -> Result<SubsetCheck> {
    require_hilbert(sys)?;
    let default;
    let subsets = match subsets {
        Some(s) => s,
        None => {
            default = default_subsets(sys.len());
            &default
        }
    };
    let b: Vec<f64> = sys.coefficients().iter().map(|b| b.norm()).collect();
    let z: Vec<Complex64> = sys.eigenvalues().iter().map(|l| -l).collect();
    let rows = subsets
        .par_iter()
        .map(|gamma| {
            if gamma.is_empty() {
                return Err(Error::InvalidInput("index subsets must be nonempty".into()));
            }
            if let Some(&i) = gamma.iter().find(|&&i| i >= b.len()) {
                return Err(Error::InvalidInput(format!("index {i} is out of range")));
            }
            let mass: f64 = gamma.iter().map(|&i| b[i] * b[i]).sum();
            if mass == 0.0 {
                return Err(Error::Precondition("subset has only zero coefficients".into()));
            }
            let mut double_sum = 0.0;
            for &k in gamma {
                for &l in gamma {
                    let v = b[k] * b[l] * kernel.eval(z[k], z[l]).re;
                    double_sum += v * v;
                }
            }
            Ok(SubsetRow {
                size: gamma.len(),
                first: *gamma.iter().min().expect("nonempty"),
                last: *gamma.iter().max().expect("nonempty"),
                double_sum,
                mass,
                ratio: double_sum / mass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(SubsetCheck { rows, sup_ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraCheck {
    pub holds: bool,
    /// `sum |b_k|^2` over the truncation.
    pub l2_partial: f64,
    pub warning: Option<String>,
}

/// Sufficient condition under the asserted algebra property and
/// `sup_z ||k_z|| <= kernel_norm_bound <= 1`: `(b_k)` must be square summable.
pub fn banach_algebra_sufficient(sys: &DiagonalSystem, kernel_norm_bound: f64) -> AlgebraCheck {
    let l2_partial: f64 = sys.coefficients().iter().map(|b| b.norm_sqr()).sum();
    if !(kernel_norm_bound <= 1.0) {
        return AlgebraCheck {
            holds: false,
            l2_partial,
            warning: Some(format!("kernel norm bound {kernel_norm_bound} exceeds 1; the condition does not apply")),
        };
    }
    if let Some(tail) = sys.tail() {
        let b = tail.b_rule;
        let summable = b.ratio < 1.0 || (b.ratio == 1.0 && 2.0 * b.exponent > 1.0);
        if !summable {
            return AlgebraCheck {
                holds: false,
                l2_partial,
                warning: Some("the declared tail of (b_k) is not square summable".into()),
            };
        }
    }
    AlgebraCheck {
        holds: l2_partial.is_finite(),
        l2_partial,
        warning: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub norm: f64,
    pub iterations: usize,
    pub size: usize,
}

/// Largest-magnitude eigenvalue of a symmetric matrix by power iteration,
/// stopped once the residual `||Mv - rho v||` is below `tol |rho|`.
pub fn symmetric_power_iteration(m: &[Vec<f64>], tol: f64, max_iterations: usize) -> Result<(f64, usize)> {
    let n = m.len();
    if n == 0 {
        return Ok((0.0, 0));
    }
    let apply = |v: &[f64]| -> Vec<f64> { m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let (mut lower, mut upper) = (0.0, f64::INFINITY);
    for iteration in 1..=max_iterations {
        let mv = apply(&v);
        let rho: f64 = mv.iter().zip(&v).map(|(a, b)| a * b).sum();
        let size = norm(&mv);
        if size == 0.0 {
            return Ok((0.0, iteration));
        }
        let residual = mv.iter().zip(&v).map(|(a, b)| (a - rho * b).powi(2)).sum::<f64>().sqrt();
        lower = rho.abs();
        upper = size;
        if residual <= tol * rho.abs() {
            return Ok((rho.abs(), iteration));
        }
        v = mv.iter().map(|x| x / size).collect();
    }
    Err(Error::PowerIteration {
        iterations: max_iterations,
        lower,
        upper,
    })
}

/// Norm of `A_{kl} = |b_l|^2 Re k_{-lambda_l}(-lambda_k)` on the sequence space
/// with inner product `sum |b_k|^2 u_k conj(v_k)`.
///
/// The operator is similar to the symmetric `D^{1/2} K D^{1/2}`, `D = diag |b_k|^2`,
/// which is what the power iteration runs on.
pub fn prop_operator_norm(sys: &DiagonalSystem, kernel: &KernelSpec, n: Option<usize>) -> Result<OperatorNorm> {
    require_hilbert(sys)?;
    let n = truncation(sys, n)?;
    let k = kernel_matrix(sys, kernel, n);
    let d: Vec<f64> = sys.coefficients()[..n].iter().map(|b| b.norm()).collect();
    let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d[i] * k[i][j] * d[j]).collect()).collect();
    let (norm, iterations) = symmetric_power_iteration(&m, POWER_TOL, POWER_MAX_ITERATIONS)?;
    Ok(OperatorNorm { norm, iterations, size: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin_system;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn twin() -> DiagonalSystem {
        DiagonalSystem::new(vec![Complex64::new(-1.0, 0.0); 2], vec![Complex64::new(1.0, 0.0); 2], 2.0, None).unwrap()
    }

    #[test]
    fn parsing_and_symmetry() {
        assert_eq!("hardy".parse::<KernelSpec>().unwrap().name(), "hardy");
        assert_eq!("bergman:1.5".parse::<KernelSpec>().unwrap().name(), "bergman:1.5");
        assert!("bergman:-2".parse::<KernelSpec>().is_err());
        assert!("szego".parse::<KernelSpec>().is_err());
        let pts = [Complex64::new(1.0, 2.0), Complex64::new(0.3, -1.0), Complex64::new(5.0, 0.0)];
        assert!(KernelSpec::Hardy.hermitian_defect(&pts) < 1e-10);
        assert!(KernelSpec::bergman(0.5).unwrap().hermitian_defect(&pts) < 1e-10);
    }

    #[test]
    fn twin_atoms() {
        let s = double_sum_condition(&twin(), &KernelSpec::Hardy, None).unwrap();
        assert!((s.total - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        let c = necessary_subset_check(&twin(), &KernelSpec::Hardy, Some(&[vec![0, 1]])).unwrap();
        assert!((c.sup_ratio - 1.0 / (8.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn singleton_subset() {
        let heat = builtin_system("heat-neumann", 5).unwrap();
        let c = necessary_subset_check(&heat, &KernelSpec::Hardy, Some(&[vec![2]])).unwrap();
        let re_k = 1.0 / (2.0 * PI * 2.0 * 9.0 * PI * PI);
        assert!((c.sup_ratio - re_k * re_k).abs() < 1e-18);
    }

    #[test]
    fn zero_coefficients() {
        let zero = DiagonalSystem::new(vec![Complex64::new(-1.0, 0.0); 3], vec![Complex64::new(0.0, 0.0); 3], 2.0, None).unwrap();
        assert_eq!(double_sum_condition(&zero, &KernelSpec::Hardy, None).unwrap().total, 0.0);
        assert_eq!(prop_operator_norm(&zero, &KernelSpec::Hardy, None).unwrap().norm, 0.0);
        assert!(necessary_subset_check(&zero, &KernelSpec::Hardy, None).is_err());
    }

    #[test]
    fn heat_double_sum_against_oracle() {
        let heat = builtin_system("heat-neumann", 200).unwrap();
        let s = double_sum_condition(&heat, &KernelSpec::Hardy, None).unwrap();
        let mut oracle = 0.0;
        for n in 1..=200 {
            for m in 1..=200 {
                let v = 1.0 / (2.0 * PI * ((n * n + m * m) as f64) * PI * PI);
                oracle += v * v;
            }
        }
        assert!((s.total - oracle).abs() < 1e-10 * oracle);
        assert!(s.slope.unwrap().abs() < 0.05);
        let c = necessary_subset_check(&builtin_system("heat-neumann", 1024).unwrap(), &KernelSpec::Hardy, None).unwrap();
        assert!(c.sup_ratio.is_finite() && c.sup_ratio > 0.0);
    }

    #[test]
    fn single_atom_norm() {
        let sys = DiagonalSystem::new(vec![Complex64::new(-1.0, 0.0)], vec![Complex64::new(3f64.sqrt(), 0.0)], 2.0, None).unwrap();
        let norm = prop_operator_norm(&sys, &KernelSpec::Hardy, None).unwrap();
        assert!((norm.norm - 3.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn heat_norm_against_dense_eigensolver() {
        let heat = builtin_system("heat-neumann", 32).unwrap();
        let mut previous = 0.0;
        for n in [8, 16, 32] {
            let norm = prop_operator_norm(&heat, &KernelSpec::Hardy, Some(n)).unwrap().norm;
            assert!(norm >= previous);
            previous = norm;
        }
        let m = DMatrix::from_fn(32, 32, |i, j| 1.0 / (2.0 * PI * ((i + 1).pow(2) + (j + 1).pow(2)) as f64 * PI * PI));
        let oracle = SymmetricEigen::new(m).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((previous - oracle).abs() < 1e-6 * oracle);
    }

    #[test]
    fn operator_is_self_adjoint_in_weighted_inner_product() {
        let sys = DiagonalSystem::new(
            vec![Complex64::new(-1.0, 0.5), Complex64::new(-2.0, -1.0), Complex64::new(-4.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.5), Complex64::new(2.0, 0.0)],
            2.0,
            None,
        )
        .unwrap();
        let k = kernel_matrix(&sys, &KernelSpec::Hardy, 3);
        let w: Vec<f64> = sys.coefficients().iter().map(|b| b.norm_sqr()).collect();
        let apply = |u: &[f64]| -> Vec<f64> { (0..3).map(|i| (0..3).map(|l| w[l] * k[i][l] * u[l]).sum()).collect() };
        let inner = |u: &[f64], v: &[f64]| -> f64 { (0..3).map(|i| w[i] * u[i] * v[i]).sum() };
        let (u, v) = ([0.3, -1.2, 0.7], [1.1, 0.4, -0.9]);
        let lhs = inner(&apply(&u), &v);
        let rhs = inner(&u, &apply(&v));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn algebra_condition() {
        let harmonic = DiagonalSystem::new(
            (1..=50).map(|k| Complex64::new(-(k as f64), 0.0)).collect(),
            (1..=50).map(|k| Complex64::new(1.0 / k as f64, 0.0)).collect(),
            2.0,
            None,
        )
        .unwrap();
        assert!(banach_algebra_sufficient(&harmonic, 1.0).holds);
        let heat = builtin_system("heat-neumann", 10).unwrap();
        let c = banach_algebra_sufficient(&heat, 1.0);
        assert!(!c.holds && c.warning.is_some());
        let para = builtin_system("parabolic-2n", 10).unwrap();
        assert!(!banach_algebra_sufficient(&para, 1.0).holds);
        assert!(!banach_algebra_sufficient(&harmonic, 1.5).holds);
    }

    #[test]
    fn algebra_chain_bound() {
        // With |Re k| <= sup over the atoms, the double sum is at most (sum |b|^2 sup)^2.
        let sys = builtin_system("heat-neumann", 50).unwrap();
        let s = double_sum_condition(&sys, &KernelSpec::Hardy, None).unwrap();
        let sup = 1.0 / (2.0 * PI * 2.0 * PI * PI);
        let l2 = banach_algebra_sufficient(&sys, 1.0).l2_partial;
        assert!(s.total <= (l2 * sup).powi(2));
    }

    #[test]
    fn custom_kernel() {
        let k = KernelSpec::custom("shifted", |z, zeta| 1.0 / (1.0 + zeta + z.conj()));
        let s = double_sum_condition(&twin(), &k, None).unwrap();
        assert!((s.total - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_failure_reports_interval() {
        // Equal and opposite dominant eigenvalues never settle.
        let m = vec![vec![1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 0.5]];
        match symmetric_power_iteration(&m, 1e-12, 50) {
            Err(Error::PowerIteration { lower, upper, .. }) => assert!(lower <= upper),
            other => panic!("expected failure, got {other:?}"),
        }
        let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!((symmetric_power_iteration(&swap, 1e-12, 50).unwrap().0 - 1.0).abs() < 1e-14);
    }
}
