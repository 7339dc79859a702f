//! Executes a validated [`RunConfig`] and writes its artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use quadps::io::atomic_write;
use quadps::models::{fingerprint, ScaledTuple, MODELS};
use quadps::pseudospectra::{gap, gap_pair_with_bound, quadratic_gap_with};
use quadps::states::{broadened_density, kappa_sweep, site_probabilities_csv, site_probabilities_pgm, DEFAULT_SIGMA};
use quadps::sweep::{
    connected_components, epsilon_mask, fmt_f64, local_minima, spectral_flow, sweep_grid, unit_samples,
    FlowOperator, SweepOptions,
};
use quadps::truncation::truncation_ladder;
use quadps::{build_clifford, GapKind, ObservableTuple, ProbePoint, SolverOptions};
use serde_json::json;

use crate::config::{parse_grid, Command, RunConfig};
use crate::CliError;

/// What a run produced: the summary line and the files written.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    /// Set when the artifacts are complete but some cells failed.
    pub partial: bool,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = match cfg.command {
        Command::Examples => Ok(Outcome {
            summary: examples_listing(false),
            files: Vec::new(),
            partial: false,
        }),
        Command::Gap => run_gap(cfg),
        Command::Sweep => run_sweep(cfg),
        Command::Flow => run_flow(cfg),
        Command::States => run_states(cfg),
        Command::Truncate => run_truncate(cfg),
    }?;
    if cfg.command != Command::Examples {
        let _ = write!(out.summary, "; wall {:.3}s", start.elapsed().as_secs_f64());
    }
    Ok(out)
}

pub fn examples_listing(as_json: bool) -> String {
    if as_json {
        let list: Vec<_> = MODELS
            .iter()
            .map(|m| json!({"name": m.name, "description": m.description}))
            .collect();
        return serde_json::to_string_pretty(&list).unwrap_or_default();
    }
    let width = MODELS.iter().map(|m| m.name.len()).max().unwrap_or(0);
    MODELS
        .iter()
        .map(|m| format!("{:width$}  {}", m.name, m.description))
        .collect::<Vec<_>>()
        .join("\n")
}

fn solver(cfg: &RunConfig) -> Result<SolverOptions, CliError> {
    Ok(match cfg.resolved_accuracy()? {
        Some(a) => SolverOptions::with_accuracy(a),
        None => SolverOptions::default(),
    })
}

/// The configuration as embedded in artifacts; the output location is left
/// out so identical runs produce identical files wherever they are written.
fn embedded_config(cfg: &RunConfig) -> serde_json::Value {
    let mut c = cfg.clone();
    c.output = None;
    serde_json::to_value(c).unwrap_or(serde_json::Value::Null)
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    atomic_write(&path, contents.as_bytes())?;
    files.push(path);
    Ok(())
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn fmt_point(c: &[f64]) -> String {
    let parts: Vec<String> = c.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// `(tuple, probe)` with positions scaled by κ when one is given.
fn working_tuple(base: ObservableTuple, kappa: Option<f64>, lambda: &ProbePoint) -> Result<(ObservableTuple, ProbePoint), CliError> {
    match kappa {
        Some(k) => {
            let st = ScaledTuple::new(base, k)?;
            let probe = st.probe(lambda)?;
            Ok((st.scaled().clone(), probe))
        }
        None => Ok((base, lambda.clone())),
    }
}

fn run_gap(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.build()?;
    let lambda = cfg.probe()?;
    let fp = fingerprint(&model.tuple);
    let (t, probe) = working_tuple(model.tuple, cfg.kappa, &lambda)?;
    let opts = solver(cfg)?;
    let (result, summary) = if cfg.both {
        let rep = build_clifford(t.d())?;
        let r = gap_pair_with_bound(&t, &probe, &rep, &opts)?;
        let (q, c, b) = (r.mu_q.unwrap_or(f64::NAN), r.mu_c.unwrap_or(f64::NAN), r.commutator_bound.unwrap_or(f64::NAN));
        let summary = format!(
            "mu_q={q:.10} mu_c={c:.10} bound={b:.10}; min gap {:.10} at {}",
            q.min(c),
            fmt_point(lambda.coords())
        );
        (json!({"mu_q": q, "mu_c": c, "commutator_bound": b}), summary)
    } else {
        let kind = cfg.kind.unwrap_or(GapKind::Quadratic);
        let rep = match kind {
            GapKind::Clifford => Some(build_clifford(t.d())?),
            GapKind::Quadratic => None,
        };
        let v = gap(kind, &t, &probe, rep.as_ref(), &opts)?;
        let summary = format!("{kind} gap {v:.10}; min gap {v:.10} at {}", fmt_point(lambda.coords()));
        (json!({ kind.to_string(): v }), summary)
    };
    let mut files = Vec::new();
    if let Some(dir) = &cfg.output {
        let doc = json!({
            "model_fingerprint": fp,
            "config": embedded_config(cfg),
            "lambda": lambda.coords(),
            "result": result,
        });
        write(dir, "gap.json", &to_json(&doc), &mut files)?;
    }
    Ok(Outcome {
        summary,
        files,
        partial: false,
    })
}

fn run_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.build()?;
    let d = model.tuple.d();
    let grid_text = cfg.grid.as_deref().unwrap_or_default();
    let (spec, defaulted) = parse_grid(grid_text, d, cfg.lambda.as_deref())?;
    let kind = cfg.kind.unwrap_or(GapKind::Quadratic);
    let mut opts = SweepOptions::new(kind);
    opts.solver = solver(cfg)?;
    opts.pruning = if cfg.pruning { cfg.epsilon } else { None };
    let fp = fingerprint(&model.tuple);
    let t = match cfg.kappa {
        Some(k) => {
            let st = ScaledTuple::new(model.tuple, k)?;
            let p = st.base().commuting_prefix();
            opts.coord_scale = (0..d).map(|j| if j < p { k } else { 1.0 }).collect();
            st.scaled().clone()
        }
        None => model.tuple,
    };
    let rep = match kind {
        GapKind::Clifford => Some(build_clifford(d)?),
        GapKind::Quadratic => None,
    };
    log::info!("sweeping {} cells ({kind})", spec.len());
    let mut grid = sweep_grid(&t, &spec, rep.as_ref(), &opts)?;
    // fingerprint of the unscaled model, so κ shows up only as a parameter
    grid.model_fingerprint = fp;
    grid.metadata.insert("config".into(), embedded_config(cfg));
    if defaulted {
        grid.metadata.insert("default_resolution".into(), json!(quadps::sweep::DEFAULT_RESOLUTION));
    }
    let minima: Vec<_> = local_minima(&grid)
        .into_iter()
        .map(|(i, j, v)| {
            let mut at = vec![spec.axes[0].point(i)];
            if let Some(a) = spec.axes.get(1) {
                at.push(a.point(j));
            }
            json!({"at": at, "value": v})
        })
        .collect();
    grid.metadata.insert("local_minima".into(), json!(minima));
    let (n0, n1) = grid.shape();
    if let Some(eps) = cfg.epsilon {
        let mask = epsilon_mask(&grid, eps);
        grid.metadata.insert("epsilon".into(), json!(eps));
        grid.metadata.insert("epsilon_cells".into(), json!(mask.iter().filter(|&&b| b).count()));
        grid.metadata.insert("epsilon_components".into(), json!(connected_components(&mask, n0, n1)));
    }

    let dir = output_dir(cfg);
    let mut files = Vec::new();
    write(&dir, "gap.csv", &grid.to_csv(), &mut files)?;
    if spec.axes.len() == 2 {
        write(&dir, "gap.pgm", &grid.to_pgm()?, &mut files)?;
    }
    write(&dir, "gap.json", &grid.to_json()?, &mut files)?;

    let mut summary = match grid.min() {
        Some((v, at)) => format!("min {kind} gap {v:.10} at {}", fmt_point(&at)),
        None => format!("no {kind} gap evaluated"),
    };
    let _ = write!(summary, "; {} local minima", minima.len());
    if grid.partial {
        let _ = write!(summary, "; PARTIAL: {} cells failed", grid.failures.len());
    }
    Ok(Outcome {
        summary,
        files,
        partial: grid.partial,
    })
}

fn run_flow(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.kappa.is_some() {
        return Err(CliError::validation("flow does not take kappa"));
    }
    let lambda = cfg.probe()?;
    let kind = cfg.operator.unwrap_or(FlowOperator::Localizer);
    let samples = unit_samples(cfg.samples.unwrap_or(quadps::sweep::DEFAULT_RESOLUTION));
    let spec = cfg.model.clone();
    let table = spectral_flow(|t| spec.build_at(Some(t)), &lambda, &samples, kind)?;

    let mut csv = format!(
        "# operator={},lambda={},model_fingerprint={}\n",
        serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
        lambda.coords().iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";"),
        table.model_fingerprint
    );
    csv.push_str(&table.to_csv());
    let doc = json!({"config": embedded_config(cfg), "table": table});
    let dir = output_dir(cfg);
    let mut files = Vec::new();
    write(&dir, "flow.csv", &csv, &mut files)?;
    write(&dir, "flow.json", &to_json(&doc), &mut files)?;

    let (mut best, mut at) = (f64::INFINITY, 0.0);
    for (t, spec) in table.path_parameter.iter().zip(&table.spectra) {
        for v in spec {
            if v.abs() < best {
                best = v.abs();
                at = *t;
            }
        }
    }
    let mut summary = format!("min |eigenvalue| {best:.10} at t = {at:.6}");
    if !table.determinants.is_empty() {
        let _ = write!(summary, "; {} determinant sign changes", table.determinant_sign_changes());
    }
    Ok(Outcome {
        summary,
        files,
        partial: false,
    })
}

fn run_states(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.build()?;
    let lambda = cfg.probe()?;
    let kappas = if cfg.kappas.is_empty() {
        vec![cfg.kappa.unwrap_or(1.0)]
    } else {
        cfg.kappas.clone()
    };
    let opts = solver(cfg)?;
    let reports = kappa_sweep(&model.tuple, &lambda, &kappas, &opts)?;
    let fp = fingerprint(&model.tuple);

    let dir = output_dir(cfg);
    let mut files = Vec::new();
    for (k, r) in reports.iter().enumerate() {
        let header = format!("# kappa={},model_fingerprint={fp}\n", fmt_f64(r.kappa));
        let sites = match site_probabilities_csv(&model.tuple, r) {
            Ok(body) => body,
            Err(_) => r
                .site_probabilities
                .iter()
                .enumerate()
                .map(|(s, p)| format!("{s},{}\n", fmt_f64(*p)))
                .collect(),
        };
        write(&dir, &format!("sites_{k}.csv"), &(header.clone() + &sites), &mut files)?;
        if let Ok(pgm) = site_probabilities_pgm(&model.tuple, r) {
            write(&dir, &format!("sites_{k}.pgm"), &pgm, &mut files)?;
        }

        let lo = r.energy_weights.iter().map(|w| w.0).fold(f64::INFINITY, f64::min) - 0.5;
        let hi = r.energy_weights.iter().map(|w| w.0).fold(f64::NEG_INFINITY, f64::max) + 0.5;
        let energies: Vec<f64> = (0..=800).map(|i| lo + (hi - lo) * i as f64 / 800.0).collect();
        let dens = broadened_density(&r.energy_weights, DEFAULT_SIGMA, &energies);
        let mut body = header;
        body.push_str("E,density\n");
        for (e, v) in energies.iter().zip(&dens) {
            let _ = writeln!(body, "{},{}", fmt_f64(*e), fmt_f64(*v));
        }
        write(&dir, &format!("energy_{k}.csv"), &body, &mut files)?;
    }
    let doc = json!({"model_fingerprint": fp, "config": embedded_config(cfg), "reports": reports});
    write(&dir, "states.json", &to_json(&doc), &mut files)?;

    let best = reports
        .iter()
        .min_by(|a, b| a.mu_q.total_cmp(&b.mu_q))
        .ok_or_else(|| CliError::validation("no kappa given"))?;
    Ok(Outcome {
        summary: format!(
            "min quadratic gap {:.10} at {} (kappa {})",
            best.mu_q,
            fmt_point(lambda.coords()),
            best.kappa
        ),
        files,
        partial: false,
    })
}

fn run_truncate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.build()?;
    let lambda = cfg.probe()?;
    let fp = fingerprint(&model.tuple);
    let (t, probe) = working_tuple(model.tuple, cfg.kappa, &lambda)?;
    let opts = solver(cfg)?;
    let reference = if cfg.reference {
        Some(quadratic_gap_with(&t, &probe, &opts)?.value)
    } else {
        None
    };
    let certs = truncation_ladder(&t, &probe, &cfg.rhos, reference, &opts)?;

    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut csv = format!(
        "# lambda={},kappa={},model_fingerprint={fp}\nrho,retained,C,mu_truncated,mu_modified,lower,upper,mu_full\n",
        lambda.coords().iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";"),
        cfg.kappa.map(fmt_f64).unwrap_or_else(|| "1".into())
    );
    for c in &certs {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            opt(c.rho),
            c.retained,
            fmt_f64(c.c),
            fmt_f64(c.mu_truncated),
            fmt_f64(c.mu_modified),
            fmt_f64(c.lower),
            opt(c.upper),
            opt(c.mu_full)
        );
    }
    let doc = json!({"model_fingerprint": fp, "config": embedded_config(cfg), "certificates": certs});
    let dir = output_dir(cfg);
    let mut files = Vec::new();
    write(&dir, "truncation.csv", &csv, &mut files)?;
    write(&dir, "truncation.json", &to_json(&doc), &mut files)?;

    let best = certs
        .iter()
        .min_by(|a, b| a.mu_truncated.total_cmp(&b.mu_truncated))
        .ok_or_else(|| CliError::validation("no rho given"))?;
    let mut summary = format!(
        "min truncated gap {:.10} at {} (rho {})",
        best.mu_truncated,
        fmt_point(lambda.coords()),
        opt(best.rho)
    );
    if let Some(r) = reference {
        let _ = write!(summary, "; full gap {r:.10}");
    }
    Ok(Outcome {
        summary,
        files,
        partial: false,
    })
}
