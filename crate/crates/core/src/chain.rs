//! Reversible Markov chains on finite state spaces: the lazy random walk of
//! a graph, the one-step-to-stationarity chain `(1-γ)I + γΠ`, their spectra
//! in the π-weighted inner product, kernel powers and mixing time.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Deserialize;

use crate::error::{Result, WalkError};
use crate::graph::Graph;
use crate::linalg::{symmetric_eigen, Matrix};

/// Row sums, stationarity and detailed balance are checked to this tolerance.
pub const CHAIN_TOLERANCE: f64 = 1e-12;

/// Total-variation threshold defining the mixing time.
pub const MIXING_THRESHOLD: f64 = 0.25;

pub const DEFAULT_MIXING_HORIZON: u64 = 10_000_000;

/// A reversible chain with its stationary distribution.
#[derive(Debug, Clone)]
pub struct Chain {
    kernel: Matrix,
    pi: Vec<f64>,
    pi_exact: Option<Vec<Ratio<u64>>>,
    label: String,
    nonnegative_spectrum: bool,
    /// Nonzero entries of each kernel row, in increasing column order.
    transitions: Vec<Vec<(usize, f64)>>,
}

impl Chain {
    /// Validates a kernel/stationary-distribution pair. The chain is flagged
    /// as *not* expected to have nonnegative spectrum; use
    /// [`Chain::assume_nonnegative_spectrum`] when that is known.
    pub fn from_kernel(kernel: Matrix, pi: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let n = kernel.rows();
        if !kernel.is_square() || pi.len() != n || n == 0 {
            return Err(WalkError::InvalidDistribution(format!(
                "kernel is {}x{} but pi has {} entries",
                kernel.rows(),
                kernel.cols(),
                pi.len()
            )));
        }
        validate_distribution(&pi)?;
        for x in 0..n {
            let row = kernel.row(x);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(0.0..=1.0 + CHAIN_TOLERANCE).contains(&p))
                || (sum - 1.0).abs() > CHAIN_TOLERANCE
            {
                return Err(WalkError::NotStochastic { row: x, sum });
            }
        }
        let evolved = kernel.left_mul(&pi);
        let drift = evolved.iter().zip(&pi).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if drift > CHAIN_TOLERANCE {
            return Err(WalkError::NotStationary(drift));
        }
        for x in 0..n {
            for y in (x + 1)..n {
                if (pi[x] * kernel[(x, y)] - pi[y] * kernel[(y, x)]).abs() > CHAIN_TOLERANCE {
                    return Err(WalkError::NotReversible(x, y));
                }
            }
        }
        let transitions = (0..n)
            .map(|x| {
                kernel.row(x).iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(y, &p)| (y, p)).collect()
            })
            .collect();
        Ok(Self { kernel, pi, pi_exact: None, label: label.into(), nonnegative_spectrum: false, transitions })
    }

    pub fn assume_nonnegative_spectrum(mut self) -> Self {
        self.nonnegative_spectrum = true;
        self
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn kernel(&self) -> &Matrix {
        &self.kernel
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Exact stationary distribution, when known (lazy walks on graphs).
    pub fn pi_exact(&self) -> Option<&[Ratio<u64>]> {
        self.pi_exact.as_deref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Whether the constructor guarantees a nonnegative spectrum.
    pub fn has_nonnegative_spectrum(&self) -> bool {
        self.nonnegative_spectrum
    }

    pub fn transitions(&self, x: usize) -> &[(usize, f64)] {
        &self.transitions[x]
    }

    pub fn check_state(&self, x: usize) -> Result<()> {
        if x < self.n() {
            Ok(())
        } else {
            Err(WalkError::StateOutOfRange { state: x, n: self.n() })
        }
    }

    /// One step of the distribution: `mu P`.
    pub fn step(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.step_into(mu, &mut out);
        out
    }

    pub(crate) fn step_into(&self, mu: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(y, p) in &self.transitions[x] {
                out[y] += m * p;
            }
        }
    }

    /// `S(x,y) = sqrt(pi(x)/pi(y)) P(x,y)`, symmetric for reversible chains.
    pub fn symmetrized(&self) -> Matrix {
        let n = self.n();
        let root: Vec<f64> = self.pi.iter().map(|p| p.sqrt()).collect();
        let mut s = Matrix::zeros(n, n);
        for x in 0..n {
            for &(y, p) in &self.transitions[x] {
                s[(x, y)] = root[x] / root[y] * p;
            }
        }
        s
    }

    /// JSON with floats at 17 significant digits and the kernel flattened row-major.
    pub fn to_json_string(&self) -> String {
        let floats = |xs: &[f64]| xs.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        write!(
            s,
            "{{\"n\":{},\"kernel\":[{}],\"pi\":[{}],\"label\":{}}}",
            self.n(),
            floats(self.kernel.as_slice()),
            floats(&self.pi),
            serde_json::to_string(&self.label).expect("string")
        )
        .expect("write to string");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            kernel: Vec<f64>,
            pi: Vec<f64>,
            label: String,
        }
        let raw: Raw = serde_json::from_str(text)?;
        if raw.kernel.len() != raw.n * raw.n {
            return Err(WalkError::InvalidDistribution(format!(
                "kernel has {} entries, expected {}",
                raw.kernel.len(),
                raw.n * raw.n
            )));
        }
        Self::from_kernel(Matrix::from_row_major(raw.n, raw.n, raw.kernel), raw.pi, raw.label)
    }
}

fn validate_distribution(pi: &[f64]) -> Result<()> {
    if pi.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(WalkError::InvalidDistribution("entries must be positive and finite".into()));
    }
    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > CHAIN_TOLERANCE {
        return Err(WalkError::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Lazy random walk: hold with probability 1/2, else move to a uniform neighbour.
/// `pi(x) = d_x / 2|E|`, kept exactly alongside the float copy.
pub fn lazy_walk_chain(g: &Graph) -> Chain {
    let n = g.n();
    let mut kernel = Matrix::zeros(n, n);
    for x in 0..n {
        kernel[(x, x)] = 0.5;
        let share = 0.5 / g.degree(x) as f64;
        for &y in g.neighbors(x) {
            kernel[(x, y)] = share;
        }
    }
    let two_m = 2 * g.edge_count() as u64;
    let exact: Vec<Ratio<u64>> = g.degrees().iter().map(|&d| Ratio::new(d as u64, two_m)).collect();
    let pi = exact.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
    let mut chain = Chain::from_kernel(kernel, pi, "lazy_walk").expect("lazy walk is a valid reversible chain");
    chain.pi_exact = Some(exact);
    chain.assume_nonnegative_spectrum()
}

/// Non-lazy simple random walk. Only used as a negative control: on
/// bipartite graphs its spectrum reaches -1.
pub fn simple_walk_chain(g: &Graph) -> Chain {
    let n = g.n();
    let mut kernel = Matrix::zeros(n, n);
    for x in 0..n {
        let share = 1.0 / g.degree(x) as f64;
        for &y in g.neighbors(x) {
            kernel[(x, y)] = share;
        }
    }
    let two_m = 2.0 * g.edge_count() as f64;
    let pi = g.degrees().iter().map(|&d| d as f64 / two_m).collect();
    Chain::from_kernel(kernel, pi, "simple_walk").expect("simple walk is a valid reversible chain")
}

/// `(1-γ) I + γ Π` with `Π(x, y) = pi(y)`: hold, or jump straight to a
/// stationary sample. Spectrum is `{1, 1-γ (n-1 times)}`.
pub fn star_chain(pi: &[f64], gamma: f64) -> Result<Chain> {
    validate_distribution(pi)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(WalkError::InvalidDistribution(format!("gamma = {gamma} must lie in (0, 1]")));
    }
    let n = pi.len();
    let mut kernel = Matrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            kernel[(x, y)] = gamma * pi[y] + if x == y { 1.0 - gamma } else { 0.0 };
        }
    }
    Ok(Chain::from_kernel(kernel, pi.to_vec(), format!("star_chain(gamma={gamma})"))?.assume_nonnegative_spectrum())
}

/// Eigenvalues (descending) and π-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenfunction of `eigenvalues[i]`.
    pub eigenfunctions: Matrix,
    pub weights: Vec<f64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn relaxation_time(&self) -> Result<f64> {
        relaxation_time(self)
    }

    /// `Psi_i(x)`.
    pub fn psi(&self, i: usize, x: usize) -> f64 {
        self.eigenfunctions[(x, i)]
    }

    /// `P^t(x,x)` from the spectral decomposition.
    pub fn return_probability(&self, x: usize, t: u64) -> f64 {
        let px = self.weights[x];
        (0..self.n()).map(|i| pow_u64(self.eigenvalues[i], t) * self.psi(i, x).powi(2) * px).sum()
    }

    /// `sum_{i>=2} pi(x) Psi_i(x)^2 / (1 - lambda_i)`, i.e. `sum_s (P^s(x,x) - pi(x))`.
    pub fn excess_return_sum(&self, x: usize) -> f64 {
        let px = self.weights[x];
        (1..self.n()).map(|i| px * self.psi(i, x).powi(2) / (1.0 - self.eigenvalues[i])).sum()
    }

    /// Green's function `g_t(x,x)` in closed form.
    pub fn green_closed_form(&self, x: usize, t: u64) -> f64 {
        let px = self.weights[x];
        let tail: f64 = (1..self.n())
            .map(|i| {
                let l = self.eigenvalues[i];
                px * self.psi(i, x).powi(2) * (1.0 - pow_u64(l, t + 1)) / (1.0 - l)
            })
            .sum();
        (t + 1) as f64 * px + tail
    }

    /// `P(x,y)` rebuilt as `sum_i lambda_i Psi_i(x) Psi_i(y) pi(y)`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.n();
        let mut out = Matrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                out[(x, y)] = (0..n)
                    .map(|i| self.eigenvalues[i] * self.psi(i, x) * self.psi(i, y) * self.weights[y])
                    .sum();
            }
        }
        out
    }
}

pub(crate) fn pow_u64(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}

pub fn spectrum(c: &Chain) -> Result<Spectrum> {
    let s = c.symmetrized();
    let eig = symmetric_eigen(&s)?;
    let n = c.n();
    let mut psi = Matrix::zeros(n, n);
    for i in 0..n {
        let mut col: Vec<f64> = (0..n).map(|x| eig.vectors[(x, i)] / c.pi()[x].sqrt()).collect();
        // Sign convention: first entry of non-negligible size is positive.
        let pivot = col.iter().copied().find(|v| v.abs() > 1e-8).unwrap_or(1.0);
        if pivot < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        for (x, v) in col.into_iter().enumerate() {
            psi[(x, i)] = v;
        }
    }
    Ok(Spectrum { eigenvalues: eig.values, eigenfunctions: psi, weights: c.pi().to_vec() })
}

pub fn relaxation_time(s: &Spectrum) -> Result<f64> {
    let l2 = s.lambda2();
    if l2 >= 1.0 - 1e-12 {
        return Err(WalkError::Degenerate(l2));
    }
    Ok(1.0 / (1.0 - l2))
}

/// Row `x` of `P^t`.
pub fn kernel_power_row(c: &Chain, x: usize, t: u64) -> Vec<f64> {
    let mut mu = vec![0.0; c.n()];
    mu[x] = 1.0;
    let mut next = vec![0.0; c.n()];
    for _ in 0..t {
        c.step_into(&mu, &mut next);
        std::mem::swap(&mut mu, &mut next);
    }
    mu
}

/// `P^t(x,x)` for `t = 0..=horizon`.
pub fn return_probabilities(c: &Chain, x: usize, horizon: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(horizon as usize + 1);
    let mut mu = vec![0.0; c.n()];
    mu[x] = 1.0;
    let mut next = vec![0.0; c.n()];
    out.push(1.0);
    for _ in 0..horizon {
        c.step_into(&mu, &mut next);
        std::mem::swap(&mut mu, &mut next);
        out.push(mu[x]);
    }
    out
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `max_x TV(M(x,.), pi)` over the rows of `m`.
fn worst_distance(m: &Matrix, pi: &[f64]) -> f64 {
    (0..m.rows()).map(|x| total_variation(m.row(x), pi)).fold(0.0, f64::max)
}

pub fn mixing_time(c: &Chain) -> Result<u64> {
    mixing_time_within(c, DEFAULT_MIXING_HORIZON)
}

/// Smallest `t` with `max_x TV(P^t(x,.), pi) <= 1/4`.
///
/// The worst-case distance is non-increasing in `t`, so the answer is found
/// by binary lifting over the powers `P^(2^k)` instead of stepping one at a time.
pub fn mixing_time_within(c: &Chain, horizon: u64) -> Result<u64> {
    let pi = c.pi();
    let mut powers = vec![c.kernel().clone()];
    loop {
        let top = powers.last().expect("nonempty");
        let span = 1u64 << (powers.len() - 1);
        if worst_distance(top, pi) <= MIXING_THRESHOLD {
            break;
        }
        if span >= horizon {
            return Err(WalkError::BudgetExceeded(horizon));
        }
        let sq = top.matmul(top);
        powers.push(sq);
    }
    // Largest t with distance still above the threshold, built bit by bit.
    let mut current = Matrix::identity(c.n());
    let mut t = 0u64;
    for k in (0..powers.len()).rev() {
        let candidate = current.matmul(&powers[k]);
        if worst_distance(&candidate, pi) > MIXING_THRESHOLD {
            current = candidate;
            t += 1 << k;
        }
    }
    let answer = t + 1;
    if answer > horizon {
        return Err(WalkError::BudgetExceeded(horizon));
    }
    Ok(answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn k2() -> Graph {
        Graph::new(2, &[(0, 1)]).unwrap()
    }

    fn p3() -> Graph {
        Graph::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn lazy_walk_k2() {
        let c = lazy_walk_chain(&k2());
        assert_eq!(c.kernel().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(c.pi(), &[0.5, 0.5]);
    }

    #[test]
    fn lazy_walk_p3() {
        let c = lazy_walk_chain(&p3());
        assert_eq!(c.pi(), &[0.25, 0.5, 0.25]);
        assert_eq!(c.kernel().row(1), &[0.25, 0.5, 0.25]);
        let exact = c.pi_exact().unwrap();
        assert_eq!(exact, &[Ratio::new(1, 4), Ratio::new(1, 2), Ratio::new(1, 4)]);
    }

    #[test]
    fn lazy_walk_star() {
        let g = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = lazy_walk_chain(&g);
        assert_eq!(c.pi_exact().unwrap()[0], Ratio::new(1, 2));
        assert_eq!(c.pi_exact().unwrap()[1], Ratio::new(1, 6));
    }

    #[test]
    fn star_chain_entries() {
        let c = star_chain(&[0.25; 4], 0.5).unwrap();
        assert_abs_diff_eq!(c.kernel()[(0, 0)], 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(c.kernel()[(0, 1)], 0.125, epsilon = 1e-15);
        let pi = [0.1, 0.2, 0.3, 0.4];
        let c = star_chain(&pi, 1.0).unwrap();
        for x in 0..4 {
            assert_eq!(c.kernel().row(x), &pi);
        }
        assert!(matches!(star_chain(&[0.5, 0.4], 0.5), Err(WalkError::InvalidDistribution(_))));
        assert!(matches!(star_chain(&[0.5, 0.5], 0.0), Err(WalkError::InvalidDistribution(_))));
    }

    #[test]
    fn star_chain_two_states_spectrum() {
        let s = spectrum(&star_chain(&[0.5, 0.5], 0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn spectra_of_small_walks() {
        let s = spectrum(&lazy_walk_chain(&k2())).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1], 0.0, epsilon = 1e-12);
        let s = spectrum(&lazy_walk_chain(&p3())).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([1.0, 0.5, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let s = spectrum(&star_chain(&[0.25; 4], 0.5).unwrap()).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([1.0, 0.5, 0.5, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn first_eigenfunction_is_constant() {
        let s = spectrum(&lazy_walk_chain(&p3())).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(s.psi(0, x), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn relaxation_times() {
        let rt = |c: &Chain| relaxation_time(&spectrum(c).unwrap()).unwrap();
        assert_abs_diff_eq!(rt(&lazy_walk_chain(&k2())), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rt(&lazy_walk_chain(&p3())), 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rt(&star_chain(&[0.25; 4], 0.25).unwrap()), 4.0, epsilon = 1e-10);
    }

    #[test]
    fn identity_kernel_is_degenerate() {
        let c = Chain::from_kernel(Matrix::identity(2), vec![0.5, 0.5], "id").unwrap();
        let s = spectrum(&c).unwrap();
        assert!(matches!(relaxation_time(&s), Err(WalkError::Degenerate(_))));
    }

    #[test]
    fn kernel_powers() {
        let c = lazy_walk_chain(&k2());
        assert_eq!(kernel_power_row(&c, 1, 0), vec![0.0, 1.0]);
        assert_eq!(kernel_power_row(&c, 0, 1), vec![0.5, 0.5]);
        assert_eq!(kernel_power_row(&c, 0, 3), vec![0.5, 0.5]);
    }

    #[test]
    fn mixing_times() {
        assert_eq!(mixing_time(&lazy_walk_chain(&k2())).unwrap(), 1);
        assert_eq!(mixing_time(&star_chain(&[0.2, 0.3, 0.5], 1.0).unwrap()).unwrap(), 1);
        // P3: worst-case TV is exactly 1/4 at t = 1 (rational matrix powers).
        assert_eq!(mixing_time(&lazy_walk_chain(&p3())).unwrap(), 1);
    }

    #[test]
    fn mixing_budget_is_enforced() {
        let c = lazy_walk_chain(&crate::generators::generate(&crate::FamilySpec::new(crate::Family::Path { n: 12 })).unwrap());
        assert!(matches!(mixing_time_within(&c, 4), Err(WalkError::BudgetExceeded(4))));
    }

    #[test]
    fn from_kernel_validation() {
        let bad_row = Matrix::from_rows(&[vec![0.5, 0.4], vec![0.5, 0.5]]);
        assert!(matches!(Chain::from_kernel(bad_row, vec![0.5, 0.5], "x"), Err(WalkError::NotStochastic { row: 0, .. })));
        let k = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(matches!(Chain::from_kernel(k, vec![0.4, 0.6], "x"), Err(WalkError::NotStationary(_))));
        // Doubly stochastic but not symmetric: uniform pi is stationary, balance fails.
        let k = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        assert!(matches!(Chain::from_kernel(k, vec![1.0 / 3.0; 3], "x"), Err(WalkError::NotReversible(0, 1))));
    }

    #[test]
    fn chain_json_round_trip() {
        let c = lazy_walk_chain(&p3());
        let text = c.to_json_string();
        assert!(text.contains("\"pi\":[2.5000000000000000e-1,5.0000000000000000e-1,2.5000000000000000e-1]"));
        let back = Chain::from_json_str(&text).unwrap();
        assert_eq!(back.kernel(), c.kernel());
        assert_eq!(back.pi(), c.pi());
        assert_eq!(back.label(), "lazy_walk");
    }
}
