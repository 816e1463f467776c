//! The six commands: validation, capacity staircases, typicality
//! verdicts, closeness comparison, curve inversion, and sector-leakage
//! diagnosis.
//!
//! Each command reads files, runs the corresponding toolkit analysis,
//! and writes a deterministic plain-text report to stdout (capacity
//! optionally writes its CSV to a file instead).  Identical invocations
//! produce byte-identical output: all floats are rendered through one
//! 12-significant-digit formatter and nothing time- or
//! environment-dependent is ever printed.

use std::fs;
use std::path::Path;

use procmat::{
    are_close, capacity_curve, classify, invert_capacity_curves, leakage_report,
    marginal_probabilities, oracle_capacity_curve, reduce_sector, validate_process,
    CapacityCurve, CapacityMargin, ClosenessCriterion, ComparabilityCondition, Direction,
    Sector, SectorLeakage, TendencyThresholds,
};
use serde::Deserialize;

use crate::error::{CliError, CmdResult};
use crate::model::{load_model, sectored_ab_process, LoadedModel};
use crate::report::{pass_fail, sig12};

/// Which transmission directions a capacity run tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionChoice {
    /// A → B only.
    Forward,
    /// B → A only.
    Backward,
    /// Both, forward rows first.
    Both,
}

impl DirectionChoice {
    fn directions(self) -> &'static [Direction] {
        match self {
            DirectionChoice::Forward => &[Direction::Forward],
            DirectionChoice::Backward => &[Direction::Backward],
            DirectionChoice::Both => &[Direction::Forward, Direction::Backward],
        }
    }
}

/// Parse a tolerance grid given as `start:stop:step`, endpoints
/// inclusive (the last point is kept when it lands within a relative
/// 10⁻⁶ step of `stop`).
///
/// # Errors
/// [`CliError::Usage`] for malformed syntax, a non-positive step,
/// `start > stop`, or points outside [0, 1].
pub fn parse_eps_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(CliError::Usage(format!(
            "tolerance grid {spec:?} is not of the form start:stop:step"
        )));
    };
    let parse = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("tolerance grid value {s:?} is not a number")))
    };
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if !step.is_finite() || step <= 0.0 {
        return Err(CliError::Usage(format!(
            "tolerance grid step must be positive, got {step}"
        )));
    }
    if start > stop {
        return Err(CliError::Usage(format!(
            "tolerance grid start {start} exceeds stop {stop}"
        )));
    }
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let x = start + (k as f64) * step;
        if x > stop + step * 1e-6 {
            break;
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(CliError::Usage(format!(
                "tolerance grid point {x} lies outside [0, 1]"
            )));
        }
        grid.push(x.min(stop));
        k += 1;
    }
    Ok(grid)
}

/// `validate`: build the model's primary process and report every
/// process-matrix check plus the full signalling table.
///
/// Exit code 0 when the process invariants hold, 1 otherwise.
pub fn cmd_validate(file: &Path) -> CmdResult {
    let model = load_model(file)?;
    let w = model.primary_process()?;
    let report = validate_process(&w);
    println!("kind: {}", model.kind());
    let names: Vec<&str> = w.parties().iter().map(|p| p.name.as_str()).collect();
    println!("parties: {}", names.join(", "));
    println!("hermiticity_residue: {}", sig12(report.hermiticity_residue));
    println!("min_eigenvalue: {}", sig12(report.min_eigenvalue));
    println!("psd: {}", pass_fail(report.psd_ok));
    println!(
        "trace: {} + {}i",
        sig12(report.trace.re),
        sig12(report.trace.im)
    );
    println!("unit_trace: {}", pass_fail(report.trace_ok));
    for (from, to, verdict) in &report.signalling {
        println!("signalling {from}->{to}: {verdict}");
    }
    println!("valid: {}", report.is_valid());
    Ok(if report.is_valid() { 0 } else { 1 })
}

/// One CSV row: direction label, tolerance, capacity in bits.
type Row = (String, f64, f64);

fn curve_rows(tag: &str, curve: &CapacityCurve, rows: &mut Vec<Row>) {
    for &(eps, bits) in &curve.points {
        rows.push((tag.to_string(), eps, bits));
    }
}

fn sector_tag(direction: Direction, sector: Sector) -> String {
    let sector_name = match sector {
        Sector::Massless => "massless",
        Sector::Massive => "massive",
    };
    format!("{direction}_{sector_name}")
}

/// `capacity`: tabulate one-shot entanglement-transmission staircases
/// over a tolerance grid and emit them as CSV (stdout, or `--out`).
///
/// Harmonic and sectored models use the exact closed form by default
/// (sectored models produce one row group per sector, tagged
/// `forward_massless` and so on).  `--oracle` derives every staircase
/// from Born-rule fidelities instead; kinds outside the mixture family
/// (`clean_general`, `partial_swap`) have no closed form and are
/// rejected without it.
pub fn cmd_capacity(
    file: &Path,
    choice: DirectionChoice,
    grid_spec: &str,
    oracle: bool,
    out: &str,
) -> CmdResult {
    let grid = parse_eps_grid(grid_spec)?;
    let model = load_model(file)?;
    let mut rows: Vec<Row> = Vec::new();
    match &model {
        LoadedModel::Harmonic(m) => {
            let reduced = if oracle {
                Some(model.bipartite_process()?)
            } else {
                None
            };
            for &dir in choice.directions() {
                let curve = match &reduced {
                    Some(w) => oracle_capacity_curve(w, dir, &grid)?,
                    None => {
                        let p = m.probabilities();
                        let serving = match dir {
                            Direction::Forward => p[0],
                            Direction::Backward => p[1],
                        };
                        capacity_curve(serving, m.wire_dim(), dir, &grid)?
                    }
                };
                curve_rows(dir.as_str(), &curve, &mut rows);
            }
        }
        LoadedModel::Sectored {
            amplitudes,
            wire_dim,
        } => {
            if oracle {
                let ab = sectored_ab_process(amplitudes, *wire_dim)?;
                let massless = reduce_sector(&ab, Sector::Massless)?;
                let massive = reduce_sector(&ab, Sector::Massive)?;
                for &dir in choice.directions() {
                    for (sector, w) in
                        [(Sector::Massless, &massless), (Sector::Massive, &massive)]
                    {
                        let curve = oracle_capacity_curve(w, dir, &grid)?;
                        curve_rows(&sector_tag(dir, sector), &curve, &mut rows);
                    }
                }
            } else {
                let (massless_p, massive_p) = marginal_probabilities(amplitudes);
                for &dir in choice.directions() {
                    for (sector, marginal) in
                        [(Sector::Massless, massless_p), (Sector::Massive, massive_p)]
                    {
                        let serving = match dir {
                            Direction::Forward => marginal[0],
                            Direction::Backward => marginal[1],
                        };
                        let curve = capacity_curve(serving, *wire_dim, dir, &grid)?;
                        curve_rows(&sector_tag(dir, sector), &curve, &mut rows);
                    }
                }
            }
        }
        LoadedModel::CleanGeneral { .. } | LoadedModel::PartialSwap(_) => {
            if !oracle {
                return Err(CliError::Model(format!(
                    "kind {:?} is outside the mixture family, so the closed-form staircase \
                     does not apply; pass --oracle to derive the staircase from Born-rule \
                     fidelities instead",
                    model.kind()
                )));
            }
            let w = model.bipartite_process()?;
            for &dir in choice.directions() {
                let curve = oracle_capacity_curve(&w, dir, &grid)?;
                curve_rows(dir.as_str(), &curve, &mut rows);
            }
        }
    }

    let mut csv = String::from("direction,eps,capacity_bits\n");
    for (tag, eps, bits) in &rows {
        csv.push_str(&format!("{tag},{},{}\n", sig12(*eps), sig12(*bits)));
    }
    if out == "-" {
        print!("{csv}");
    } else {
        fs::write(out, csv)
            .map_err(|e| CliError::Usage(format!("cannot write {out}: {e}")))?;
    }
    Ok(0)
}

/// `typicality`: classify a sectored model under the tendency
/// postulate and echo the thresholds the verdict was computed with.
///
/// Exit code 0 whenever the classification runs; the verdict itself is
/// data, not a failure.
pub fn cmd_typicality(file: &Path, condition: &str, theta: f64, kappa: f64) -> CmdResult {
    let model = load_model(file)?;
    let Some(amps) = model.sectored_amplitudes() else {
        return Err(CliError::Model(format!(
            "typicality classification needs a sectored model, got kind {:?}",
            model.kind()
        )));
    };
    let condition = ComparabilityCondition::parse(condition)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let thresholds = TendencyThresholds::new(theta, kappa)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let v = classify(amps, condition, thresholds)?;
    println!("condition: {}", v.condition);
    println!("theta_connect: {}", sig12(v.thresholds.theta_connect));
    println!("kappa_comparable: {}", sig12(v.thresholds.kappa_comparable));
    println!("p_connect: {}", sig12(v.p_connect));
    println!("massless_comparable: {}", v.massless_comparable);
    println!("massive_comparable: {}", v.massive_comparable);
    println!("large_connectivity: {}", v.detail.large_connectivity);
    println!("comparability_holds: {}", v.detail.comparability_holds);
    println!("typical: {}", v.typical);
    Ok(0)
}

/// Closeness criterion in file form: per-direction (ε, margin) lists.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CriterionFile {
    forward: Vec<MarginFile>,
    backward: Vec<MarginFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginFile {
    eps: f64,
    margin_bits: f64,
}

fn load_criterion(path: &Path) -> Result<ClosenessCriterion, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let f: CriterionFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let lift = |ms: Vec<MarginFile>| {
        ms.into_iter()
            .map(|m| CapacityMargin {
                eps: m.eps,
                margin_bits: m.margin_bits,
            })
            .collect()
    };
    ClosenessCriterion::new(lift(f.forward), lift(f.backward))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// `compare`: decide whether two models are operationally close — every
/// probed capacity within its margin in both directions.
///
/// Exit code 0 iff close; unequal wire bounds are a model-level
/// failure carrying the library's normalization note.
pub fn cmd_compare(first: &Path, second: &Path, criterion: Option<&Path>) -> CmdResult {
    let w1 = load_model(first)?.bipartite_process()?;
    let w2 = load_model(second)?.bipartite_process()?;
    let criterion = match criterion {
        None => ClosenessCriterion::standard(),
        Some(p) => load_criterion(p)?,
    };
    let report = are_close(&w1, &w2, &criterion)?;
    for c in report.forward.iter().chain(report.backward.iter()) {
        println!(
            "{} eps={}: first={} second={} gap={} margin={} within={}",
            c.direction,
            sig12(c.eps),
            sig12(c.q_first),
            sig12(c.q_second),
            sig12(c.gap_bits),
            sig12(c.margin_bits),
            c.within
        );
    }
    println!("close: {}", report.close);
    Ok(if report.close { 0 } else { 1 })
}

/// Read one capacity CSV (as written by `capacity`) into a curve whose
/// rows must all carry the expected direction label.
fn read_curve_csv(path: &Path, direction: Direction) -> Result<CapacityCurve, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Model(format!("{}: empty CSV", path.display())))?;
    if header != "direction,eps,capacity_bits" {
        return Err(CliError::Model(format!(
            "{}: unexpected header {header:?}, expected \"direction,eps,capacity_bits\"",
            path.display()
        )));
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        let [tag, eps, bits] = fields.as_slice() else {
            return Err(CliError::Model(format!(
                "{}: row {row}: expected 3 comma-separated fields, got {}",
                path.display(),
                fields.len()
            )));
        };
        if *tag != direction.as_str() {
            return Err(CliError::Model(format!(
                "{}: row {row}: direction {tag:?}, expected {:?} rows",
                path.display(),
                direction.as_str()
            )));
        }
        let number = |s: &str, what: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|_| {
                CliError::Model(format!(
                    "{}: row {row}: {what} {s:?} is not a number",
                    path.display()
                ))
            })
        };
        points.push((number(eps, "tolerance")?, number(bits, "capacity")?));
    }
    Ok(CapacityCurve { direction, points })
}

/// `invert`: recover branch weights, amplitude moduli and (when the
/// saturation plateaus pin them down) wire dimensions from a
/// forward/backward pair of capacity CSVs.
pub fn cmd_invert(forward: &Path, backward: &Path) -> CmdResult {
    let fwd = read_curve_csv(forward, Direction::Forward)?;
    let bwd = read_curve_csv(backward, Direction::Backward)?;
    let est = invert_capacity_curves(&fwd, &bwd)?;
    println!("p1: {}", sig12(est.p[0]));
    println!("p2: {}", sig12(est.p[1]));
    println!("p3: {}", sig12(est.p[2]));
    println!("alpha1_abs: {}", sig12(est.alpha_abs[0]));
    println!("alpha2_abs: {}", sig12(est.alpha_abs[1]));
    println!("alpha3_abs: {}", sig12(est.alpha_abs[2]));
    match est.dims {
        Some((fwd_dim, bwd_dim)) => println!("dims: {fwd_dim} {bwd_dim}"),
        None => println!("dims: undetermined"),
    }
    Ok(0)
}

fn print_sector(s: &SectorLeakage) {
    let name = match s.sector {
        Sector::Massless => "massless",
        Sector::Massive => "massive",
    };
    println!("sector {name} wire_dim: {}", s.wire_dim);
    for d in [&s.forward, &s.backward] {
        println!(
            "  {} branch_probability: {} capacity_bits: {} achievable: {}",
            d.direction,
            sig12(d.branch_probability),
            sig12(d.capacity_bits),
            d.achievable
        );
    }
    println!(
        "  disconnected_probability: {}",
        sig12(s.disconnected_probability)
    );
}

/// `leakage`: per-sector, per-direction transmission diagnosis of a
/// sectored model and the superluminal verdict (massive sector
/// signalling where the massless one cannot).
pub fn cmd_leakage(file: &Path, eps: f64) -> CmdResult {
    if !eps.is_finite() || !(0.0..=procmat::tol::MEASURE_EPS_MAX).contains(&eps) {
        return Err(CliError::Usage(format!(
            "--eps must lie in [0, {}], got {eps}: beyond 3/4 every direction is \
             trivially achievable through fresh entanglement",
            procmat::tol::MEASURE_EPS_MAX
        )));
    }
    let model = load_model(file)?;
    if model.sectored_amplitudes().is_none() {
        return Err(CliError::Model(format!(
            "leakage diagnosis needs a sectored model, got kind {:?}",
            model.kind()
        )));
    }
    let w = model.bipartite_process()?;
    let report = leakage_report(&w, eps)?;
    println!("eps: {}", sig12(report.eps));
    print_sector(&report.massless);
    print_sector(&report.massive);
    println!("superluminal: {}", report.superluminal);
    Ok(0)
}
