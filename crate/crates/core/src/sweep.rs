//! Gap maps over probe grids, spectral flow along model paths, and ε-masks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{build_clifford, CliffordRep};
use crate::error::{Error, Result};
use crate::linalg::{eigen, SolverOptions};
use crate::models::{fingerprint, Model};
use crate::operator::check_dim;
use crate::pseudospectra::{
    complex_determinant, dense, gap, localizer, quadratic_operator, reduced_localizer, GapKind, ObservableTuple,
    ProbePoint,
};

/// Grid resolution used when none is given.
pub const DEFAULT_RESOLUTION: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweptAxis {
    /// Which probe coordinate this axis moves.
    pub coord: usize,
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweptAxis {
    pub fn new(coord: usize, name: &str, min: f64, max: f64, count: usize) -> Self {
        SweptAxis {
            coord,
            name: name.to_string(),
            min,
            max,
            count,
        }
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.point(k)).collect()
    }
}

/// One or two swept axes; every other probe coordinate is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<SweptAxis>,
    #[serde(default)]
    pub fixed_coords: BTreeMap<usize, f64>,
}

impl GridSpec {
    pub fn new(axes: Vec<SweptAxis>, fixed_coords: BTreeMap<usize, f64>) -> Self {
        GridSpec { axes, fixed_coords }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::config(format!("a grid sweeps 1 or 2 axes, got {}", self.axes.len())));
        }
        let mut covered = vec![false; d];
        for a in &self.axes {
            if a.count < 2 {
                return Err(Error::out_of_range(&a.name, a.count as f64, "an axis needs at least 2 points"));
            }
            if !(a.min < a.max) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::out_of_range(&a.name, a.min, "axis needs finite min < max"));
            }
            if a.coord >= d || covered[a.coord] {
                return Err(Error::config(format!("axis `{}` targets coordinate {} twice or out of range", a.name, a.coord)));
            }
            covered[a.coord] = true;
        }
        for (&j, &v) in &self.fixed_coords {
            if j >= d || covered[j] {
                return Err(Error::config(format!("fixed coordinate {j} out of range or also swept")));
            }
            if !v.is_finite() {
                return Err(Error::out_of_range("fixed coordinate", v, "must be finite"));
            }
            covered[j] = true;
        }
        if let Some(j) = covered.iter().position(|c| !c) {
            return Err(Error::config(format!("probe coordinate {j} is neither swept nor fixed")));
        }
        Ok(())
    }

    /// `(n0, n1)`; `n1 = 1` for a single axis.
    pub fn shape(&self) -> (usize, usize) {
        (self.axes[0].count, self.axes.get(1).map_or(1, |a| a.count))
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid coordinates of cell `(i, j)` in the full probe space.
    pub fn coords(&self, d: usize, i: usize, j: usize) -> Vec<f64> {
        let mut c = vec![0.0; d];
        for (&k, &v) in &self.fixed_coords {
            c[k] = v;
        }
        c[self.axes[0].coord] = self.axes[0].point(i);
        if let Some(a) = self.axes.get(1) {
            c[a.coord] = a.point(j);
        }
        c
    }

    /// `name=min:max:count;…`.
    pub fn describe(&self) -> String {
        let mut s: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("{}={}:{}:{}", a.name, a.min, a.max, a.count))
            .collect();
        for (k, v) in &self.fixed_coords {
            s.push(format!("coord{k}={v}"));
        }
        s.join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub kind: GapKind,
    /// Lipschitz pruning threshold ε; off when `None`.
    pub pruning: Option<f64>,
    pub solver: SolverOptions,
    /// Per-coordinate factor from grid units to probe units (empty: all 1).
    #[serde(default)]
    pub coord_scale: Vec<f64>,
}

impl SweepOptions {
    pub fn new(kind: GapKind) -> Self {
        SweepOptions {
            kind,
            pruning: None,
            solver: SolverOptions::default(),
            coord_scale: Vec::new(),
        }
    }

    fn scale(&self, j: usize) -> f64 {
        self.coord_scale.get(j).copied().unwrap_or(1.0)
    }

    /// Lipschitz constant of the gap in grid units.
    fn lipschitz(&self) -> f64 {
        self.coord_scale.iter().fold(1.0_f64, |m, s| m.max(s.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub i: usize,
    pub j: usize,
    pub coords: Vec<f64>,
    pub message: String,
}

/// Gap values on a grid, `values[i·n1 + j]` at axis-0 index `i`, axis-1 index `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapGrid {
    pub spec: GridSpec,
    pub kind: GapKind,
    pub model_fingerprint: String,
    pub values: Vec<f64>,
    pub skipped_mask: Vec<bool>,
    pub partial: bool,
    pub failures: Vec<CellFailure>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl GapGrid {
    pub fn shape(&self) -> (usize, usize) {
        self.spec.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape().1 + j]
    }

    /// Smallest evaluated value and its grid coordinates.
    pub fn min(&self) -> Option<(f64, Vec<f64>)> {
        let (n0, n1) = self.shape();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n0 {
            for j in 0..n1 {
                let v = self.get(i, j);
                if v.is_finite() && best.is_none_or(|b| v < b.0) {
                    best = Some((v, i, j));
                }
            }
        }
        best.map(|(v, i, j)| {
            let mut c = vec![self.spec.axes[0].point(i)];
            if let Some(a) = self.spec.axes.get(1) {
                c.push(a.point(j));
            }
            (v, c)
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# kind,axes,model_fingerprint\n");
        let _ = writeln!(out, "# {},{},{}", self.kind, self.spec.describe(), self.model_fingerprint);
        let (n0, n1) = self.shape();
        let p0 = self.spec.axes[0].points();
        let p1 = self.spec.axes.get(1).map(|a| a.points());
        for i in 0..n0 {
            for j in 0..n1 {
                let v = fmt_f64(self.get(i, j));
                match &p1 {
                    Some(p1) => {
                        let _ = writeln!(out, "{},{},{}", fmt_f64(p0[i]), fmt_f64(p1[j]), v);
                    }
                    None => {
                        let _ = writeln!(out, "{},{}", fmt_f64(p0[i]), v);
                    }
                }
            }
        }
        out
    }

    /// Greyscale preview; columns follow axis 0, the top row is the largest axis-1 value.
    pub fn to_pgm(&self) -> Result<String> {
        if self.spec.axes.len() != 2 {
            return Err(Error::config("PGM preview needs a two-axis grid"));
        }
        let (n0, n1) = self.shape();
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let mut out = format!(
            "P2\n# {} {} {}\n{n0} {n1}\n65535\n",
            self.kind,
            self.spec.describe(),
            self.model_fingerprint
        );
        for r in 0..n1 {
            let j = n1 - 1 - r;
            let row: Vec<String> = (0..n0)
                .map(|i| {
                    let v = self.get(i, j);
                    let level = if v.is_finite() && hi > lo {
                        ((v - lo) / (hi - lo) * 65535.0).round() as u32
                    } else {
                        0
                    };
                    level.to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn probe_for(t: &ObservableTuple, spec: &GridSpec, opts: &SweepOptions, i: usize, j: usize) -> Result<ProbePoint> {
    let c = spec.coords(t.d(), i, j);
    ProbePoint::new(c.iter().enumerate().map(|(k, &x)| x * opts.scale(k)).collect())
}

fn evaluate_cell(
    t: &ObservableTuple,
    spec: &GridSpec,
    rep: Option<&CliffordRep>,
    opts: &SweepOptions,
    i: usize,
    j: usize,
) -> std::result::Result<f64, String> {
    let probe = probe_for(t, spec, opts, i, j).map_err(|e| e.to_string())?;
    gap(opts.kind, t, &probe, rep, &opts.solver).map_err(|e| e.to_string())
}

/// Evaluates the gap on every grid cell.
///
/// With pruning at ε, rows along axis 0 are processed in order and a cell is
/// skipped when a lower bound from the previous row already exceeds ε. Lower
/// bounds are `v − L·dist` from evaluated cells (exact `v`) or skipped cells
/// (their own bound), so no skipped cell can lie in `Λ_ε`.
pub fn sweep_grid(
    t: &ObservableTuple,
    spec: &GridSpec,
    rep: Option<&CliffordRep>,
    opts: &SweepOptions,
) -> Result<GapGrid> {
    spec.validate(t.d())?;
    if opts.kind == GapKind::Clifford {
        match rep {
            Some(r) if r.d() != t.d() => {
                return Err(Error::RepMismatch {
                    rep: r.d(),
                    tuple: t.d(),
                })
            }
            None => return Err(Error::config("the Clifford gap needs a Clifford representation")),
            _ => {}
        }
    }
    if let Some(eps) = opts.pruning {
        if !(eps >= 0.0) {
            return Err(Error::out_of_range("epsilon", eps, "must be non-negative"));
        }
    }
    let (n0, n1) = spec.shape();
    let mut values = vec![f64::NAN; n0 * n1];
    let mut skipped = vec![false; n0 * n1];
    let mut failures = Vec::new();

    match opts.pruning {
        None => {
            let results: Vec<_> = (0..n0 * n1)
                .into_par_iter()
                .map(|k| evaluate_cell(t, spec, rep, opts, k / n1, k % n1))
                .collect();
            for (k, r) in results.into_iter().enumerate() {
                match r {
                    Ok(v) => values[k] = v,
                    Err(message) => failures.push(failure(t, spec, k / n1, k % n1, message)),
                }
            }
        }
        Some(eps) => {
            let lip = opts.lipschitz();
            let d0 = spec.axes[0].point(1) - spec.axes[0].point(0);
            let p1: Vec<f64> = spec.axes.get(1).map_or(vec![0.0], |a| a.points());
            let mut prev_lower: Option<Vec<f64>> = None;
            for i in 0..n0 {
                let bounds: Vec<f64> = (0..n1)
                    .map(|j| match &prev_lower {
                        None => f64::NEG_INFINITY,
                        Some(prev) => prev
                            .iter()
                            .zip(&p1)
                            .map(|(&lb, &y)| lb - lip * (d0 * d0 + (y - p1[j]).powi(2)).sqrt())
                            .fold(f64::NEG_INFINITY, f64::max),
                    })
                    .collect();
                let row: Vec<_> = (0..n1)
                    .into_par_iter()
                    .map(|j| {
                        if bounds[j] > eps {
                            None
                        } else {
                            Some(evaluate_cell(t, spec, rep, opts, i, j))
                        }
                    })
                    .collect();
                let mut lower = vec![f64::NEG_INFINITY; n1];
                for (j, r) in row.into_iter().enumerate() {
                    let k = i * n1 + j;
                    match r {
                        None => {
                            skipped[k] = true;
                            lower[j] = bounds[j];
                        }
                        Some(Ok(v)) => {
                            values[k] = v;
                            lower[j] = v;
                        }
                        Some(Err(message)) => failures.push(failure(t, spec, i, j, message)),
                    }
                }
                prev_lower = Some(lower);
            }
        }
    }
    for f in &failures {
        log::error!("cell ({}, {}) at {:?} failed: {}", f.i, f.j, f.coords, f.message);
    }
    let mut metadata = BTreeMap::new();
    if let Some(eps) = opts.pruning {
        metadata.insert("pruning_epsilon".into(), serde_json::json!(eps));
    }
    if !opts.coord_scale.is_empty() {
        metadata.insert("coord_scale".into(), serde_json::json!(opts.coord_scale));
    }
    Ok(GapGrid {
        spec: spec.clone(),
        kind: opts.kind,
        model_fingerprint: fingerprint(t),
        values,
        skipped_mask: skipped,
        partial: !failures.is_empty(),
        failures,
        metadata,
    })
}

fn failure(t: &ObservableTuple, spec: &GridSpec, i: usize, j: usize, message: String) -> CellFailure {
    CellFailure {
        i,
        j,
        coords: spec.coords(t.d(), i, j),
        message,
    }
}

/// True where the value is at most ε (skipped and failed cells are false).
pub fn epsilon_mask(grid: &GapGrid, epsilon: f64) -> Vec<bool> {
    grid.values
        .iter()
        .zip(&grid.skipped_mask)
        .map(|(&v, &s)| !s && v <= epsilon)
        .collect()
}

/// Number of 8-connected components of a mask on an `n0 × n1` grid.
pub fn connected_components(mask: &[bool], n0: usize, n1: usize) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (i, j) = ((k / n1) as isize, (k % n1) as isize);
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= n0 as isize || b >= n1 as isize {
                        continue;
                    }
                    let m = a as usize * n1 + b as usize;
                    if mask[m] && !seen[m] {
                        seen[m] = true;
                        stack.push(m);
                    }
                }
            }
        }
    }
    count
}

/// Cells no larger than any of their (up to 8) neighbours, as `(i, j, value)`.
pub fn local_minima(grid: &GapGrid) -> Vec<(usize, usize, f64)> {
    let (n0, n1) = grid.shape();
    let mut out = Vec::new();
    for i in 0..n0 {
        for j in 0..n1 {
            let v = grid.get(i, j);
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    let (a, b) = (i as isize + di, j as isize + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n0 as isize || b >= n1 as isize {
                        continue;
                    }
                    let w = grid.get(a as usize, b as usize);
                    if w.is_finite() && w < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                out.push((i, j, v));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowOperator {
    QuadraticSqrt,
    Localizer,
    ReducedLocalizer,
}

impl std::str::FromStr for FlowOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" | "quadratic_sqrt" => Ok(FlowOperator::QuadraticSqrt),
            "localizer" | "clifford" => Ok(FlowOperator::Localizer),
            "reduced" | "reduced_localizer" => Ok(FlowOperator::ReducedLocalizer),
            _ => Err(Error::config(format!("unknown flow operator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralFlowTable {
    pub path_parameter: Vec<f64>,
    pub spectra: Vec<Vec<f64>>,
    pub operator_kind: FlowOperator,
    /// `det((X − λ_x + iH)Γ)` as `(re, im)` per sample, for the reduced localizer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub determinants: Vec<(f64, f64)>,
    pub model_fingerprint: String,
}

impl SpectralFlowTable {
    pub fn to_csv(&self) -> String {
        let k = self.spectra.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for e in 1..=k {
            let _ = write!(out, ",eig_{e}");
        }
        out.push('\n');
        for (t, spec) in self.path_parameter.iter().zip(&self.spectra) {
            out.push_str(&fmt_f64(*t));
            for v in spec {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Sign changes of the real determinant along the path (exact zeros skipped).
    pub fn determinant_sign_changes(&self) -> usize {
        let signs: Vec<f64> = self
            .determinants
            .iter()
            .filter(|d| d.0 != 0.0)
            .map(|d| d.0.signum())
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Spectrum at one path sample, plus the determinant for the reduced localizer.
type FlowSample = (Vec<f64>, Option<(f64, f64)>);

fn flow_sample(model: &Model, lambda: &ProbePoint, kind: FlowOperator) -> Result<FlowSample> {
    let t = &model.tuple;
    check_dim(t.d(), lambda.d())?;
    match kind {
        FlowOperator::QuadraticSqrt => {
            let q = quadratic_operator(t, lambda)?;
            let scale = crate::linalg::norm_upper_bound(q.csr()).max(1.0);
            let spec = q.spectrum();
            if spec.first().is_some_and(|&m| m < -1e-10 * scale) {
                return Err(Error::NumericalFailure(crate::error::SolverDiagnostics {
                    method: "psd clamp",
                    iterations: 0,
                    residual: spec[0],
                    tolerance: 1e-10 * scale,
                }));
            }
            Ok((spec.iter().map(|v| v.max(0.0).sqrt()).collect(), None))
        }
        FlowOperator::Localizer => {
            let rep = build_clifford(t.d())?;
            Ok((eigen::hermitian_spectrum(localizer(t, lambda, &rep)?.csr()), None))
        }
        FlowOperator::ReducedLocalizer => {
            if t.d() != 2 {
                return Err(Error::ChiralSymmetryViolation(format!(
                    "reduced localizer needs a (position, energy) pair, got {} operators",
                    t.d()
                )));
            }
            if lambda.coords()[1] != 0.0 {
                return Err(Error::ChiralSymmetryViolation(
                    "reduced localizer is defined at energy 0 only".into(),
                ));
            }
            let grading = model
                .grading
                .as_ref()
                .ok_or_else(|| Error::ChiralSymmetryViolation("model has no grading operator".into()))?;
            let r = reduced_localizer(t.op(0), t.op(1), lambda.coords()[0], grading)?;
            let det = complex_determinant(&dense(&r));
            Ok((r.spectrum(), Some((det.re, det.im))))
        }
    }
}

/// Full spectra of a composite along a model path.
pub fn spectral_flow<F>(path: F, lambda: &ProbePoint, t_samples: &[f64], kind: FlowOperator) -> Result<SpectralFlowTable>
where
    F: Fn(f64) -> Result<Model> + Sync,
{
    if t_samples.is_empty() {
        return Err(Error::config("spectral flow needs at least one sample"));
    }
    let samples: Vec<_> = t_samples
        .par_iter()
        .map(|&t| {
            let model = path(t)?;
            let fp = fingerprint(&model.tuple);
            flow_sample(&model, lambda, kind).map(|r| (r, fp))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hasher = String::new();
    for (_, fp) in &samples {
        hasher.push_str(fp);
    }
    let mut spectra = Vec::with_capacity(samples.len());
    let mut determinants = Vec::new();
    for ((spec, det), _) in samples {
        spectra.push(spec);
        if let Some(d) = det {
            determinants.push(d);
        }
    }
    Ok(SpectralFlowTable {
        path_parameter: t_samples.to_vec(),
        spectra,
        operator_kind: kind,
        determinants,
        model_fingerprint: sha_hex(hasher.as_bytes()),
    })
}

fn sha_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `count` evenly spaced samples of `[0, 1]`.
pub fn unit_samples(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|k| k as f64 / (count - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_example, build_ssh, ExampleName, LatticeModelSpec, ModelKind};

    fn pauli_spec(n: usize) -> GridSpec {
        GridSpec::new(
            vec![SweptAxis::new(0, "x", -2.0, 2.0, n), SweptAxis::new(1, "y", -2.0, 2.0, n)],
            BTreeMap::new(),
        )
    }

    #[test]
    fn grid_validation() {
        let spec = pauli_spec(5);
        assert!(spec.validate(2).is_ok());
        assert!(spec.validate(3).is_err());
        let mut bad = spec.clone();
        bad.axes[1].coord = 0;
        assert!(bad.validate(2).is_err());
        let mut bad = spec.clone();
        bad.axes[0].count = 1;
        assert!(bad.validate(2).is_err());
        let mut bad = spec;
        bad.axes[0].max = -3.0;
        assert!(bad.validate(2).is_err());
    }

    #[test]
    fn axis_points_hit_endpoints() {
        let a = SweptAxis::new(0, "x", 0.0, 9.0, 101);
        assert_eq!(a.point(0), 0.0);
        assert_eq!(a.point(100), 9.0);
        assert!((a.point(50) - 4.5).abs() < 1e-15);
    }

    #[test]
    fn pauli_grid_matches_closed_form() {
        let t = build_example(ExampleName::PauliPair).unwrap();
        let grid = sweep_grid(&t, &pauli_spec(21), None, &SweepOptions::new(GapKind::Quadratic)).unwrap();
        for i in 0..21 {
            for j in 0..21 {
                let (x, y) = (grid.spec.axes[0].point(i), grid.spec.axes[1].point(j));
                let r2 = x * x + y * y;
                assert!((grid.get(i, j) - (r2 + 2.0 - 2.0 * r2.sqrt()).sqrt()).abs() < 1e-8);
            }
        }
        assert!(epsilon_mask(&grid, 0.0).iter().all(|m| !m));
        assert!(epsilon_mask(&grid, 10.0).iter().all(|&m| m));
    }

    #[test]
    fn clifford_sweep_requires_rep() {
        let t = build_example(ExampleName::PauliPair).unwrap();
        assert!(sweep_grid(&t, &pauli_spec(3), None, &SweepOptions::new(GapKind::Clifford)).is_err());
    }

    #[test]
    fn pruned_sweep_is_sound_and_exact_where_evaluated() {
        let t = build_ssh(4, 0.7, 1.4).unwrap();
        let spec = GridSpec::new(
            vec![SweptAxis::new(0, "x", 0.0, 9.0, 31), SweptAxis::new(1, "E", -3.0, 3.0, 31)],
            BTreeMap::new(),
        );
        let rep = build_clifford(2).unwrap();
        let full = sweep_grid(&t, &spec, Some(&rep), &SweepOptions::new(GapKind::Clifford)).unwrap();
        let mut opts = SweepOptions::new(GapKind::Clifford);
        opts.pruning = Some(0.1);
        let pruned = sweep_grid(&t, &spec, Some(&rep), &opts).unwrap();
        assert!(pruned.skipped_mask.iter().any(|&s| s));
        for k in 0..full.values.len() {
            if !pruned.skipped_mask[k] {
                assert_eq!(full.values[k].to_bits(), pruned.values[k].to_bits());
            } else {
                assert!(full.values[k] > 0.1);
            }
        }
        let a = epsilon_mask(&full, 0.1);
        let b = epsilon_mask(&pruned, 0.1);
        assert!(a.iter().zip(&b).all(|(x, y)| !x || *y));
    }

    #[test]
    fn csv_and_pgm_layout() {
        let t = build_example(ExampleName::PauliPair).unwrap();
        let grid = sweep_grid(&t, &pauli_spec(3), None, &SweepOptions::new(GapKind::Quadratic)).unwrap();
        let csv = grid.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# kind,axes,model_fingerprint");
        assert!(lines[1].starts_with("# quadratic,x=-2:2:3;y=-2:2:3,"));
        assert_eq!(lines.len(), 2 + 9);
        let first: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first[..2], [-2.0, -2.0]);
        // round-trips exactly
        assert_eq!(first[2].to_bits(), grid.get(0, 0).to_bits());
        let pgm = grid.to_pgm().unwrap();
        let rows: Vec<&str> = pgm.lines().collect();
        assert_eq!(rows[0], "P2");
        assert_eq!(rows[2], "3 3");
        assert_eq!(rows[3], "65535");
        // centre is the minimum, corners the maximum
        assert_eq!(rows[5].split(' ').nth(1), Some("0"));
        assert_eq!(rows[4].split(' ').next(), Some("65535"));
        let json: serde_json::Value = serde_json::from_str(&grid.to_json().unwrap()).unwrap();
        assert_eq!(json["kind"], "quadratic");
    }

    #[test]
    fn components_and_minima() {
        let mask = [true, false, false, false, false, true, false, false, true];
        assert_eq!(connected_components(&mask, 3, 3), 2);
        let mask = [true, false, true, false, false, false, true, false, true];
        assert_eq!(connected_components(&mask, 3, 3), 4);
    }

    #[test]
    fn flow_table_csv_and_sign_changes() {
        let spec = LatticeModelSpec::new(ModelKind::SshPath);
        let lam = ProbePoint::new(vec![4.0, 0.0]).unwrap();
        let table = spectral_flow(|t| spec.build_at(Some(t)), &lam, &unit_samples(11), FlowOperator::ReducedLocalizer).unwrap();
        assert_eq!(table.spectra.len(), 11);
        assert_eq!(table.determinants.len(), 11);
        let csv = table.to_csv();
        assert!(csv.starts_with("t,eig_1,eig_2"));
        assert_eq!(csv.lines().count(), 12);
        let ex = LatticeModelSpec::example(ExampleName::PauliPair);
        assert!(matches!(
            spectral_flow(|_| ex.build(), &ProbePoint::new(vec![0.0, 0.0]).unwrap(), &[0.0], FlowOperator::ReducedLocalizer),
            Err(Error::ChiralSymmetryViolation(_))
        ));
    }
}
