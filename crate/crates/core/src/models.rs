//! Observable tuples for the SSH chain, the small example pairs, the class D
//! chain and the two-orbital Chern insulator.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra_sparse::CooMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{c, pauli, CsrMat, DMat, C64, I, ONE, ZERO};
use crate::operator::HermitianOperator;
use crate::pseudospectra::{ObservableTuple, ProbePoint};

/// SSH chain `(X, H)`: `X = diag(1, …, 2n)`, hoppings `v, w, v, …`.
pub fn build_ssh(n_cells: usize, v: f64, w: f64) -> Result<ObservableTuple> {
    if n_cells == 0 {
        return Err(Error::out_of_range("n_cells", 0.0, "need at least one cell"));
    }
    for (name, val) in [("v", v), ("w", w)] {
        if !val.is_finite() {
            return Err(Error::out_of_range(name, val, "must be finite"));
        }
    }
    let n = 2 * n_cells;
    let x: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let mut h = CooMatrix::new(n, n);
    for i in 0..n - 1 {
        let t = if i % 2 == 0 { v } else { w };
        if t != 0.0 {
            h.push(i, i + 1, c(t, 0.0));
            h.push(i + 1, i, c(t, 0.0));
        }
    }
    ObservableTuple::new(
        vec![HermitianOperator::diagonal(&x)?, HermitianOperator::new(CsrMat::from(&h))?],
        1,
    )
}

pub const SSH_V: f64 = 0.7;
pub const SSH_W: f64 = 1.4;

/// Straight path from `(v, w) = (0.7, 1.4)` at t = 0 to `(1.4, 0.7)` at t = 1, four cells.
pub fn build_ssh_path(t: f64) -> Result<ObservableTuple> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::out_of_range("t", t, "path parameter must lie in [0, 1]"));
    }
    let (v, w) = ssh_path_hoppings(t);
    build_ssh(4, v, w)
}

pub fn ssh_path_hoppings(t: f64) -> (f64, f64) {
    (SSH_V * (1.0 - t) + SSH_W * t, SSH_W * (1.0 - t) + SSH_V * t)
}

/// Sublattice grading `diag(1, −1, 1, …)`.
pub fn ssh_grading(n_sites: usize) -> Result<HermitianOperator> {
    let g: Vec<f64> = (0..n_sites).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    HermitianOperator::diagonal(&g)
}

/// Site-reversal permutation.
pub fn site_reversal(n_sites: usize) -> DMat {
    DMat::from_fn(n_sites, n_sites, |i, j| if i + j + 1 == n_sites { ONE } else { ZERO })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleName {
    PauliPair,
    #[serde(rename = "pair_3x3")]
    Pair3x3,
    #[serde(rename = "pair_4x4")]
    Pair4x4,
    #[serde(rename = "class_d_7")]
    ClassD7,
    /// `class_d_7` with the positions rounded to two decimals.
    #[serde(rename = "class_d_7_printed")]
    ClassD7Printed,
}

pub struct ExampleInfo {
    pub name: &'static str,
    pub description: &'static str,
}

/// Built-in models, as listed by the CLI.
pub const MODELS: &[ExampleInfo] = &[
    ExampleInfo {
        name: "ssh",
        description: "SSH chain (X, H), v = 0.7, w = 1.4, 4 cells; chiral, two end states",
    },
    ExampleInfo {
        name: "ssh-path",
        description: "SSH interpolation v = 0.7(1-t) + 1.4t, w = 1.4(1-t) + 0.7t",
    },
    ExampleInfo {
        name: "pauli_pair",
        description: "(sigma_x, sigma_y); X + iY nilpotent, closed-form gaps",
    },
    ExampleInfo {
        name: "pair_3x3",
        description: "3x3 pair, X + iY eigenvalues 0 and about ±(1.272 + 0.786i)",
    },
    ExampleInfo {
        name: "pair_4x4",
        description: "real X, imaginary Y; class D style pair with negative det(X + iY)",
    },
    ExampleInfo {
        name: "class_d_7",
        description: "7-site class D chain with a phase defect, real eigenvalue about -1.1603",
    },
    ExampleInfo {
        name: "class_d_7_printed",
        description: "class_d_7 with positions rounded to -2.33, -1.17, ...",
    },
    ExampleInfo {
        name: "chern2d",
        description: "two-orbital Chern insulator (X, Y, H), Chern number -1, bulk bands in ±[1, 6]",
    },
];

impl std::str::FromStr for ExampleName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pauli_pair" => Ok(ExampleName::PauliPair),
            "pair_3x3" => Ok(ExampleName::Pair3x3),
            "pair_4x4" => Ok(ExampleName::Pair4x4),
            "class_d_7" => Ok(ExampleName::ClassD7),
            "class_d_7_printed" => Ok(ExampleName::ClassD7Printed),
            _ => Err(Error::config(format!("unknown example `{s}`"))),
        }
    }
}

fn dense_op(rows: usize, entries: &[C64]) -> Result<HermitianOperator> {
    HermitianOperator::from_dense(&DMat::from_row_slice(rows, rows, entries))
}

/// Imaginary antisymmetric tridiagonal `H[i, i+1] = i·t_i`.
fn imaginary_chain(hops: &[f64]) -> Result<HermitianOperator> {
    let n = hops.len() + 1;
    let mut h = CooMatrix::new(n, n);
    for (i, &t) in hops.iter().enumerate() {
        h.push(i, i + 1, I * t);
        h.push(i + 1, i, -I * t);
    }
    HermitianOperator::new(CsrMat::from(&h))
}

/// Class D chain: bonds `(w, v) × left_cells`, then `(v, w) × right_cells`,
/// positions evenly spaced and centred. Defaults reproduce `class_d_7`.
pub fn build_class_d_chain(left_cells: usize, right_cells: usize, v: f64, w: f64, spacing: f64) -> Result<ObservableTuple> {
    if left_cells + right_cells == 0 {
        return Err(Error::out_of_range("cells", 0.0, "need at least one cell"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::out_of_range("spacing", spacing, "must be positive"));
    }
    let mut hops = Vec::new();
    for _ in 0..left_cells {
        hops.extend([w, v]);
    }
    for _ in 0..right_cells {
        hops.extend([v, w]);
    }
    let n = hops.len() + 1;
    let mid = (n - 1) as f64 / 2.0;
    let x: Vec<f64> = (0..n).map(|i| (i as f64 - mid) * spacing).collect();
    ObservableTuple::new(vec![HermitianOperator::diagonal(&x)?, imaginary_chain(&hops)?], 1)
}

pub fn build_example(name: ExampleName) -> Result<ObservableTuple> {
    let [sx, sy, _] = pauli();
    let r = |x: f64| c(x, 0.0);
    match name {
        ExampleName::PauliPair => ObservableTuple::new(
            vec![HermitianOperator::from_dense(&sx)?, HermitianOperator::from_dense(&sy)?],
            0,
        ),
        ExampleName::Pair3x3 => {
            let (o, z) = (r(1.0), ZERO);
            ObservableTuple::new(
                vec![
                    dense_op(3, &[z, o, z, o, z, o, z, o, z])?,
                    dense_op(3, &[z, o, z, o, z, z, z, z, z])?,
                ],
                0,
            )
        }
        ExampleName::Pair4x4 => {
            let x = HermitianOperator::diagonal(&[-2.0, 2.0, 0.0, 1.0])?;
            ObservableTuple::new(vec![x, imaginary_chain(&[1.0, 1.0, 1.0])?], 1)
        }
        ExampleName::ClassD7 => build_class_d_chain(1, 2, SSH_V, SSH_W, 7.0 / 6.0),
        ExampleName::ClassD7Printed => {
            let x = HermitianOperator::diagonal(&[-3.5, -2.33, -1.17, 0.0, 1.17, 2.33, 3.5])?;
            ObservableTuple::new(vec![x, imaginary_chain(&[1.4, 0.7, 0.7, 1.4, 0.7, 1.4])?], 1)
        }
    }
}

/// `X + iY` of a pair (the non-normal matrix the pair encodes).
pub fn pair_matrix(t: &ObservableTuple) -> Result<DMat> {
    if t.d() != 2 {
        return Err(Error::config(format!("expected a pair, got {} operators", t.d())));
    }
    Ok(t.op(0).to_dense() + t.op(1).to_dense() * I)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub m: f64,
}

impl Default for ChernParams {
    /// Chern number −1, bulk bands in ±[1, 6].
    fn default() -> Self {
        ChernParams {
            a: 1.0,
            b: -1.0,
            c: 0.0,
            d: 0.0,
            m: -2.0,
        }
    }
}

/// Sign and phase convention of the `A` term in the hoppings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChernHopping {
    /// East `D + Bσz + (A/2i)σx`, north `D + Bσz − (A/2i)σy`: Bloch symbol
    /// `(C − 2D(2 − cos kx − cos ky)) + A sin kx σx − A sin ky σy + (M − 2B(2 − cos kx − cos ky)) σz`.
    #[default]
    Bhz,
    /// East `D + Bσz + Aσx`, north `D + Bσz − Aσy` taken literally (real
    /// hoppings); topologically trivial for the default parameters.
    AsPrinted,
}

impl std::str::FromStr for ChernHopping {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bhz" => Ok(ChernHopping::Bhz),
            "as_printed" | "as-printed" | "printed" => Ok(ChernHopping::AsPrinted),
            _ => Err(Error::config(format!("unknown hopping convention `{s}`"))),
        }
    }
}

/// On-site, east and north blocks.
pub fn chern_blocks(p: &ChernParams, hopping: ChernHopping) -> [DMat; 3] {
    let [sx, sy, sz] = pauli();
    let id = DMat::identity(2, 2);
    let onsite = &id * c(p.c - 4.0 * p.d, 0.0) + &sz * c(p.m - 4.0 * p.b, 0.0);
    let base = &id * c(p.d, 0.0) + &sz * c(p.b, 0.0);
    let amp = match hopping {
        ChernHopping::Bhz => c(p.a, 0.0) / (I * 2.0),
        ChernHopping::AsPrinted => c(p.a, 0.0),
    };
    let east = &base + &sx * amp;
    let north = &base - &sy * amp;
    [onsite, east, north]
}

/// `h(k) = on-site + T_e e^{i kx} + T_e† e^{−i kx} + T_n e^{i ky} + T_n† e^{−i ky}`.
pub fn chern_bloch_symbol(p: &ChernParams, hopping: ChernHopping, kx: f64, ky: f64) -> DMat {
    let [on, east, north] = chern_blocks(p, hopping);
    let ex = C64::from_polar(1.0, kx);
    let ey = C64::from_polar(1.0, ky);
    on + &east * ex + east.adjoint() * ex.conj() + &north * ey + north.adjoint() * ey.conj()
}

/// Centred coordinates `(i − (n−1)/2)·a`.
pub fn centred_coords(n: usize, lattice_constant: f64) -> Vec<f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n).map(|i| (i as f64 - mid) * lattice_constant).collect()
}

/// Two-orbital Chern insulator on an `nx × ny` open lattice; `(X, Y, H)`.
/// Basis index `2·(y·nx + x) + orbital`.
pub fn build_chern2d(
    nx: usize,
    ny: usize,
    p: &ChernParams,
    lattice_constant: f64,
    hopping: ChernHopping,
) -> Result<ObservableTuple> {
    if nx < 2 || ny < 2 {
        return Err(Error::out_of_range("size", nx.min(ny) as f64, "lattice must be at least 2x2"));
    }
    if !(lattice_constant > 0.0 && lattice_constant.is_finite()) {
        return Err(Error::out_of_range("lattice_constant", lattice_constant, "must be positive"));
    }
    for (name, v) in [("A", p.a), ("B", p.b), ("C", p.c), ("D", p.d), ("M", p.m)] {
        if !v.is_finite() {
            return Err(Error::out_of_range(name, v, "must be finite"));
        }
    }
    let n = 2 * nx * ny;
    let [on, east, north] = chern_blocks(p, hopping);
    let idx = |x: usize, y: usize| 2 * (y * nx + x);
    let mut h = CooMatrix::new(n, n);
    let mut push_block = |i: usize, j: usize, b: &DMat| {
        for r in 0..2 {
            for s in 0..2 {
                if b[(r, s)] != ZERO {
                    h.push(i + r, j + s, b[(r, s)]);
                }
            }
        }
    };
    let (east_dag, north_dag) = (east.adjoint(), north.adjoint());
    for y in 0..ny {
        for x in 0..nx {
            let i = idx(x, y);
            push_block(i, i, &on);
            if x + 1 < nx {
                let j = idx(x + 1, y);
                push_block(j, i, &east);
                push_block(i, j, &east_dag);
            }
            if y + 1 < ny {
                let j = idx(x, y + 1);
                push_block(j, i, &north);
                push_block(i, j, &north_dag);
            }
        }
    }
    let xs = centred_coords(nx, lattice_constant);
    let ys = centred_coords(ny, lattice_constant);
    let mut xd = Vec::with_capacity(n);
    let mut yd = Vec::with_capacity(n);
    for y in 0..ny {
        for x in 0..nx {
            xd.extend([xs[x]; 2]);
            yd.extend([ys[y]; 2]);
        }
    }
    let t = ObservableTuple::new(
        vec![
            HermitianOperator::diagonal(&xd)?,
            HermitianOperator::diagonal(&yd)?,
            HermitianOperator::new(CsrMat::from(&h))?,
        ],
        2,
    )?;
    t.with_orbitals(2)
}

/// Multiplies the commuting position block by `κ`.
pub fn scale_positions(t: &ObservableTuple, kappa: f64) -> Result<ObservableTuple> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::out_of_range("kappa", kappa, "must be positive"));
    }
    if t.commuting_prefix() == 0 {
        return Err(Error::config("scaling needs a commuting position block"));
    }
    let prefix = t.commuting_prefix();
    t.map_ops(|j, op| if j < prefix { op.scaled(kappa) } else { op.clone() })
}

/// `(κX_1, …, κX_p, H…)` with probes given in unscaled position units.
#[derive(Debug, Clone)]
pub struct ScaledTuple {
    base: ObservableTuple,
    kappa: f64,
    scaled: ObservableTuple,
}

impl ScaledTuple {
    pub fn new(base: ObservableTuple, kappa: f64) -> Result<Self> {
        let scaled = scale_positions(&base, kappa)?;
        Ok(ScaledTuple { base, kappa, scaled })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn base(&self) -> &ObservableTuple {
        &self.base
    }

    pub fn scaled(&self) -> &ObservableTuple {
        &self.scaled
    }

    /// `(κλ_1, …, κλ_p, λ_{p+1}, …)`, so that `Q = Σ κ²(X_j − λ_j)² + (H − E)²`.
    pub fn probe(&self, lambda: &ProbePoint) -> Result<ProbePoint> {
        crate::operator::check_dim(self.base.d(), lambda.d())?;
        let p = self.base.commuting_prefix();
        ProbePoint::new(
            lambda
                .coords()
                .iter()
                .enumerate()
                .map(|(j, &x)| if j < p { self.kappa * x } else { x })
                .collect(),
        )
    }
}

/// SHA-256 over the operators' sparse data, in hex.
pub fn fingerprint(t: &ObservableTuple) -> String {
    let mut hasher = Sha256::new();
    hasher.update((t.d() as u64).to_le_bytes());
    hasher.update((t.commuting_prefix() as u64).to_le_bytes());
    for op in t.ops() {
        let (offsets, cols, vals) = op.csr().csr_data();
        hasher.update((op.dim() as u64).to_le_bytes());
        for &o in offsets {
            hasher.update((o as u64).to_le_bytes());
        }
        for &j in cols {
            hasher.update((j as u64).to_le_bytes());
        }
        for v in vals {
            hasher.update(v.re.to_le_bytes());
            hasher.update(v.im.to_le_bytes());
        }
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ssh,
    SshPath,
    ClassDChain,
    Chern2d,
    Explicit,
    Example,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "ssh" => Ok(ModelKind::Ssh),
            "ssh_path" => Ok(ModelKind::SshPath),
            "class_d_chain" => Ok(ModelKind::ClassDChain),
            "chern2d" => Ok(ModelKind::Chern2d),
            "explicit" => Ok(ModelKind::Explicit),
            "example" => Ok(ModelKind::Example),
            other => Err(Error::config(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Declarative model description, read from `key = value` text or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub explicit_matrices: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleName>,
    #[serde(default)]
    pub hopping: ChernHopping,
}

/// A built model plus what the commands need besides the tuple.
#[derive(Debug, Clone)]
pub struct Model {
    pub tuple: ObservableTuple,
    /// Sublattice grading when the model is chiral.
    pub grading: Option<HermitianOperator>,
}

impl LatticeModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        LatticeModelSpec {
            kind,
            parameters: BTreeMap::new(),
            explicit_matrices: Vec::new(),
            example: None,
            hopping: ChernHopping::default(),
        }
    }

    pub fn example(name: ExampleName) -> Self {
        LatticeModelSpec {
            example: Some(name),
            ..Self::new(ModelKind::Example)
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    /// Parses a `--model` shorthand: `ssh`, `ssh-path`, `chern2d`, `example:NAME`
    /// or a bare example name.
    pub fn from_name(name: &str) -> Result<Self> {
        if let Some(ex) = name.strip_prefix("example:") {
            return Ok(Self::example(ex.parse()?));
        }
        if let Ok(ex) = name.parse::<ExampleName>() {
            return Ok(Self::example(ex));
        }
        Ok(Self::new(name.parse()?))
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = value.parse()?,
            "example" => {
                self.kind = ModelKind::Example;
                self.example = Some(value.parse()?);
            }
            "hopping" => self.hopping = value.parse()?,
            "matrix" | "explicit_matrix" => self.explicit_matrices.push(PathBuf::from(value)),
            _ => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::config(format!("parameter `{key}` expects a number, got `{value}`")))?;
                if !v.is_finite() {
                    return Err(Error::out_of_range(key, v, "must be finite"));
                }
                self.parameters.insert(key.to_string(), v);
            }
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut spec: Option<LatticeModelSpec> = None;
        let mut pending = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            match k {
                "kind" => spec = Some(LatticeModelSpec::from_name(v)?),
                "example" => spec = Some(LatticeModelSpec::example(v.parse()?)),
                _ => pending.push((lineno + 1, k.to_string(), v.to_string())),
            }
        }
        let mut spec = spec.ok_or_else(|| Error::config("model needs `kind`"))?;
        for (line, k, v) in pending {
            spec.set(&k, &v).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.parameters.get(key).copied().unwrap_or(default)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.param(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 || v > 1e7 {
            return Err(Error::out_of_range(key, v, "must be a non-negative integer"));
        }
        Ok(v as usize)
    }

    pub fn chern_params(&self) -> ChernParams {
        let d = ChernParams::default();
        ChernParams {
            a: self.param("A", d.a),
            b: self.param("B", d.b),
            c: self.param("C", d.c),
            d: self.param("D", d.d),
            m: self.param("M", d.m),
        }
    }

    /// Builds the model; `t` selects the point on a path model (default from the `t` parameter).
    pub fn build_at(&self, t: Option<f64>) -> Result<Model> {
        let tuple = match self.kind {
            ModelKind::Ssh => build_ssh(self.count("n_cells", 4)?, self.param("v", SSH_V), self.param("w", SSH_W))?,
            ModelKind::SshPath => {
                let t = t.unwrap_or(self.param("t", 0.0));
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::out_of_range("t", t, "path parameter must lie in [0, 1]"));
                }
                let v0 = self.param("v", SSH_V);
                let w0 = self.param("w", SSH_W);
                build_ssh(self.count("n_cells", 4)?, v0 * (1.0 - t) + w0 * t, w0 * (1.0 - t) + v0 * t)?
            }
            ModelKind::ClassDChain => build_class_d_chain(
                self.count("left_cells", 1)?,
                self.count("right_cells", 2)?,
                self.param("v", SSH_V),
                self.param("w", SSH_W),
                self.param("spacing", 7.0 / 6.0),
            )?,
            ModelKind::Chern2d => {
                let size = self.count("size", 20)?;
                build_chern2d(
                    self.count("size_x", size)?,
                    self.count("size_y", size)?,
                    &self.chern_params(),
                    self.param("lattice_constant", 1.0),
                    self.hopping,
                )?
            }
            ModelKind::Example => {
                let name = self.example.ok_or_else(|| Error::config("example model needs `example`"))?;
                build_example(name)?
            }
            ModelKind::Explicit => {
                if self.explicit_matrices.is_empty() {
                    return Err(Error::config("explicit model needs at least one `matrix` file"));
                }
                let ops = self
                    .explicit_matrices
                    .iter()
                    .map(|p| crate::io::read_matrix_file(p).and_then(HermitianOperator::new))
                    .collect::<Result<Vec<_>>>()?;
                let t = ObservableTuple::new(ops, self.count("commuting_prefix", 0)?)?;
                t.with_orbitals(self.count("orbitals", 1)?.max(1))?
            }
        };
        let grading = match self.kind {
            ModelKind::Ssh | ModelKind::SshPath => Some(ssh_grading(tuple.dim())?),
            _ => None,
        };
        Ok(Model { tuple, grading })
    }

    pub fn build(&self) -> Result<Model> {
        self.build_at(None)
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match (self.kind, self.example) {
            (ModelKind::Example, Some(e)) => serde_json::to_value(e)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            (kind, _) => serde_json::to_value(kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        }
    }
}
