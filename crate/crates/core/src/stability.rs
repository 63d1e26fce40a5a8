//! Linear stability of uniform multi-platoon rings.
//!
//! Two independent routes are provided: closed-form neutral-stability
//! thresholds for identical platoons, and a numerical eigenvalue oracle on
//! the Jacobian of the full linearized ring about the uniform flow.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{ControlParams, ModelKind};
use crate::ovfunc::OvParams;
use crate::scenario::{Connectivity, PlatoonSpec, Scenario};

/// Eigenvalues with modulus below this are treated as the translation mode.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Critical sensitivity `a*`: the ring is linearly stable for `a > a*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Finite(f64),
    /// No sensitivity stabilizes the ring.
    UnstableForAllA,
}

impl Threshold {
    pub fn value(self) -> Option<f64> {
        match self {
            Threshold::Finite(a) => Some(a),
            Threshold::UnstableForAllA => None,
        }
    }

    pub fn is_stable(self, a: f64) -> bool {
        matches!(self, Threshold::Finite(t) if a > t)
    }
}

/// Threshold for identical unconnected platoons of size `n >= 2`:
/// `a* = 2 n V'(h) / ((n - 1)^2 + 1)`.
pub fn crit_noconn(n: usize, h: f64, ov: &OvParams) -> Result<f64> {
    if n < 2 {
        return Err(invalid(
            "N",
            "the unconnected criterion needs platoons of at least two",
        ));
    }
    let nf = n as f64;
    Ok(2.0 * nf * ov.velocity_derivative(h) / ((nf - 1.0).powi(2) + 1.0))
}

fn twoway_denominator(n: usize, h: f64, p: f64, t_d: f64, ov: &OvParams) -> f64 {
    (1.0 + 2.0 * p) * (n as f64 - 2.0 * t_d * ov.velocity_derivative(h))
}

/// Threshold for identical connected platoons:
/// `a* = 2 V'(h) / ((1 + 2p)(n - 2 t_d V'(h)))`, or
/// [`Threshold::UnstableForAllA`] when the denominator is not positive.
pub fn crit_twoway(n: usize, h: f64, p: f64, t_d: f64, ov: &OvParams) -> Result<Threshold> {
    if n < 1 {
        return Err(invalid("N", "must be at least 1"));
    }
    if !(p >= 0.0) || !(t_d >= 0.0) {
        return Err(invalid("p/t_d", "must be non-negative"));
    }
    let denom = twoway_denominator(n, h, p, t_d, ov);
    if denom <= 0.0 {
        Ok(Threshold::UnstableForAllA)
    } else {
        Ok(Threshold::Finite(2.0 * ov.velocity_derivative(h) / denom))
    }
}

/// Threshold for the given inter-platoon connectivity. Front connection is
/// the two-way law with `p = 0`.
pub fn threshold(
    connectivity: Connectivity,
    n: usize,
    h: f64,
    p: f64,
    t_d: f64,
    ov: &OvParams,
) -> Result<Threshold> {
    match connectivity {
        Connectivity::None => crit_noconn(n, h, ov).map(Threshold::Finite),
        Connectivity::Front => crit_twoway(n, h, 0.0, t_d, ov),
        Connectivity::TwoWay => crit_twoway(n, h, p, t_d, ov),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralPoint {
    pub h: f64,
    pub threshold: Threshold,
}

/// Samples the neutral line at `n_samples` evenly spaced headways in
/// `h_range`, which must lie inside `[h_s, h_f]`.
pub fn neutral_line(
    connectivity: Connectivity,
    n: usize,
    p: f64,
    t_d: f64,
    h_range: (f64, f64),
    n_samples: usize,
    ov: &OvParams,
) -> Result<Vec<NeutralPoint>> {
    let (lo, hi) = h_range;
    if n_samples == 0 || !(lo <= hi) || (n_samples > 1 && lo == hi) {
        return Err(invalid(
            "h_range",
            format!("empty range [{lo}, {hi}] with {n_samples} samples"),
        ));
    }
    if lo < ov.h_s || hi > ov.h_f {
        return Err(invalid(
            "h_range",
            format!(
                "[{lo}, {hi}] leaves the sloped part [{}, {}] of V",
                ov.h_s, ov.h_f
            ),
        ));
    }
    (0..n_samples)
        .map(|i| {
            let h = if n_samples == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n_samples - 1) as f64
            };
            Ok(NeutralPoint {
                h,
                threshold: threshold(connectivity, n, h, p, t_d, ov)?,
            })
        })
        .collect()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Headway interval on which the connected criterion has no finite
/// threshold, found by root-finding `n - 2 t_d V'(h) = 0` on either side of
/// the peak of `V'`. `None` when the denominator stays positive.
pub fn unstable_band(n: usize, p: f64, t_d: f64, ov: &OvParams) -> Option<(f64, f64)> {
    let peak = ov.inflection_headway();
    let g = |h: f64| twoway_denominator(n, h, p, t_d, ov);
    if g(peak) > 0.0 {
        return None;
    }
    Some((bisect(ov.h_s, peak, g), bisect(peak, ov.h_f, g)))
}

/// Root of the closure equation `((N-1) r + 1)^m (r + 1)^m = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoot {
    pub r: Complex64,
    /// Branch `k` in `1..=m`, angle `2 pi k / m`.
    pub k: usize,
    /// `+1` or `-1`: sign in front of the square root.
    pub sign: i8,
}

/// Closed-form roots `r = (-N +- sqrt(N^2 - 4(N-1)(1 - e^{2 pi i k/m}))) / (2(N-1))`.
pub fn char_roots(n: usize, m: usize) -> Result<Vec<CharacteristicRoot>> {
    if n < 2 {
        return Err(invalid("N", "the closure roots need N >= 2"));
    }
    if m < 1 {
        return Err(invalid("m", "must be at least 1"));
    }
    let nf = n as f64;
    let mut roots = Vec::with_capacity(2 * m);
    for k in 1..=m {
        let theta = 2.0 * PI * k as f64 / m as f64;
        let e = Complex64::from_polar(1.0, theta);
        let disc = (Complex64::from(nf * nf) - 4.0 * (nf - 1.0) * (1.0 - e)).sqrt();
        for sign in [1i8, -1] {
            let r = (-nf + f64::from(sign) * disc) / (2.0 * (nf - 1.0));
            roots.push(CharacteristicRoot { r, k, sign });
        }
    }
    Ok(roots)
}

/// `|((N-1) r + 1)^m (r + 1)^m - 1|`.
pub fn closure_residual(n: usize, m: usize, r: Complex64) -> f64 {
    let lhs = ((n as f64 - 1.0) * r + 1.0).powu(m as u32) * (r + 1.0).powu(m as u32);
    (lhs - 1.0).norm()
}

/// A ring arrangement to linearize about its uniform equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQuery {
    pub platoons: Vec<PlatoonSpec>,
    /// Equilibrium headway (m).
    pub h: f64,
    pub control: ControlParams,
    pub ov: OvParams,
}

impl LinearQuery {
    /// `m` identical platoons of size `n`.
    pub fn uniform(
        connectivity: Connectivity,
        n: usize,
        m: usize,
        h: f64,
        control: ControlParams,
    ) -> Self {
        Self {
            platoons: vec![PlatoonSpec::new(n, connectivity); m],
            h,
            control,
            ov: OvParams::default(),
        }
    }

    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            platoons: scenario.platoons.clone(),
            h: scenario.ring.equilibrium_headway(),
            control: scenario.control,
            ov: scenario.ov,
        }
    }

    pub fn n_vehicles(&self) -> usize {
        self.platoons.iter().map(|p| p.size).sum()
    }
}

/// Jacobian of the linearized ring, state ordered as
/// `[y_0 .. y_{n-1}, y'_0 .. y'_{n-1}]` with `y` the position deviation.
///
/// Delayed gaps enter through `gap(t - t_d) ~ gap(t) - t_d gap'(t)`.
pub fn linearized_jacobian(query: &LinearQuery) -> Result<DMatrix<f64>> {
    query.control.validate()?;
    query.ov.validate()?;
    let n = query.n_vehicles();
    if n < 2 {
        return Err(invalid("platoons", "need at least two vehicles"));
    }
    let m = query.platoons.len();
    let a = query.control.a;
    let t_d = query.control.t_d;
    let slope = query.ov.velocity_derivative(query.h);

    let mut heads = Vec::with_capacity(m);
    let mut start = 0;
    for spec in &query.platoons {
        if spec.size == 0 {
            return Err(invalid("platoons", "empty platoon"));
        }
        start += spec.size;
        heads.push(start - 1);
    }

    let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut start = 0;
    for (i, spec) in query.platoons.iter().enumerate() {
        let head = heads[i];
        for j in 1..=spec.size {
            let g = start + j - 1;
            let row = n + g;
            jac[(g, n + g)] = 1.0;
            jac[(row, row)] -= a;
            if j < spec.size {
                let c = a * slope / (spec.size - j) as f64;
                jac[(row, head)] += c;
                jac[(row, g)] -= c;
            } else if spec.kind.is_connected() {
                let p = spec.kind.effective_p(query.control.p);
                let front = heads[(i + 1) % m];
                let rear = heads[(i + m - 1) % m];
                let cf = a * (1.0 + p) * slope / query.platoons[(i + 1) % m].size as f64;
                let cr = a * p * slope / spec.size as f64;
                // front gap: y_front - y_g
                jac[(row, front)] += cf;
                jac[(row, g)] -= cf;
                jac[(row, n + front)] -= cf * t_d;
                jac[(row, n + g)] += cf * t_d;
                // rear gap: y_g - y_rear, with a minus sign
                jac[(row, g)] -= cr;
                jac[(row, rear)] += cr;
                jac[(row, n + g)] += cr * t_d;
                jac[(row, n + rear)] -= cr * t_d;
            } else {
                debug_assert!(matches!(
                    spec.kind,
                    ModelKind::HdvOvm | ModelKind::LeaderNoConnection
                ));
                let ahead = (g + 1) % n;
                let c = a * slope;
                jac[(row, ahead)] += c;
                jac[(row, g)] -= c;
            }
        }
        start += spec.size;
    }
    Ok(jac)
}

fn block_eigenvalues(block: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let dim = block.nrows();
    if dim == 1 {
        return Ok(vec![Complex64::new(block[(0, 0)], 0.0)]);
    }
    if let Some(schur) = nalgebra::Schur::try_new(block.clone(), f64::EPSILON, 500 * dim) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    // The QR iteration can cycle on the highly symmetric ring matrices. A
    // diagonal similarity keeps the spectrum and breaks the symmetry.
    for attempt in 1..=3 {
        let scale: Vec<f64> = (0..dim)
            .map(|i| 1.0 + 0.25 * ((i * attempt) as f64 * 0.618_033_988_75).fract())
            .collect();
        let scaled = DMatrix::from_fn(dim, dim, |r, c| scale[r] * block[(r, c)] / scale[c]);
        if let Some(schur) = nalgebra::Schur::try_new(scaled, f64::EPSILON, 500 * dim) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::EigenSolver { dim })
}

/// Eigenvalues of a dense matrix in one Schur decomposition.
pub fn dense_spectrum(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    block_eigenvalues(matrix.clone())
}

/// Eigenvalues of a square matrix, computed block by block after permuting
/// it to block-triangular form via the strongly connected components of its
/// sparsity graph. Exact up to the per-block Schur accuracy.
pub fn spectrum(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let dim = matrix.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(dim, dim * 4);
    let nodes: Vec<_> = (0..dim).map(|_| graph.add_node(())).collect();
    for r in 0..dim {
        for c in 0..dim {
            if r != c && matrix[(r, c)] != 0.0 {
                graph.add_edge(nodes[r], nodes[c], ());
            }
        }
    }
    let mut eigenvalues = Vec::with_capacity(dim);
    for component in tarjan_scc(&graph) {
        let idx: Vec<usize> = component.iter().map(|node| node.index()).collect();
        let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| matrix[(idx[r], idx[c])]);
        eigenvalues.extend(block_eigenvalues(block)?);
    }
    Ok(eigenvalues)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Largest real part among the non-structural eigenvalues (1/s).
    pub max_real: f64,
    /// Number of eigenvalues treated as the translation mode.
    pub structural_zeros: usize,
    pub dimension: usize,
}

impl OracleResult {
    pub fn is_stable(&self) -> bool {
        self.max_real < 0.0
    }
}

/// Linear stability of the full ring by eigen-decomposition of its Jacobian.
pub fn eig_oracle(query: &LinearQuery) -> Result<OracleResult> {
    eig_oracle_with(query, DEFAULT_ZERO_TOL)
}

pub fn eig_oracle_with(query: &LinearQuery, zero_tol: f64) -> Result<OracleResult> {
    let jac = linearized_jacobian(query)?;
    let eigenvalues = spectrum(&jac)?;
    let structural_zeros = eigenvalues.iter().filter(|l| l.norm() < zero_tol).count();
    let max_real = eigenvalues
        .iter()
        .filter(|l| l.norm() >= zero_tol)
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OracleResult {
        max_real,
        structural_zeros,
        dimension: jac.nrows(),
    })
}
