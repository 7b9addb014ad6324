use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use cutquant::cut::{cstar_space, verify_theorem1, Verdict};
use cutquant::examples::ExampleRegistry;
use cutquant::hilbert::{BasisLabel, DiagonalOperator, LabeledBasis};
use cutquant::line::{convergence_study, QuadratureRegistry, RiggingFixture};
use cutquant::projection::{
    default_near_trivial_threshold, interval_projector, positive_projector, ProjectionReport,
};
use cutquant::rational::{self, q, Q};

use crate::{Format, Global, ProjectArgs, RigArgs, Source, SpectrumArgs};

/// A file produced by a command.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Everything a command produced; the first artifact is echoed to stdout.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    pub exit_code: i32,
}

impl Outcome {
    fn single(name: String, bytes: Vec<u8>, summary: String, exit_code: i32) -> Self {
        Self {
            artifacts: vec![Artifact { name, bytes }],
            summary,
            exit_code,
        }
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn label_csv(label: &BasisLabel) -> String {
    let parts: Vec<String> = label.components.iter().map(rational::decimal).collect();
    let joined = parts.join(" ");
    match &label.sector_tag {
        Some(tag) => format!("{tag}:{joined}"),
        None => joined,
    }
}

struct Discrete {
    basis: Arc<LabeledBasis>,
    constraints: Vec<DiagonalOperator>,
}

fn load_discrete(source: &Source) -> Result<Discrete> {
    match (&source.example, &source.operator) {
        (Some(name), None) => {
            let system = ExampleRegistry::with_builtins().get(name)?;
            let d = system
                .discrete()
                .ok_or_else(|| anyhow!("example `{name}` has no discrete operator"))??;
            Ok(Discrete {
                basis: d.basis,
                constraints: d.constraints,
            })
        }
        (None, Some(path)) => {
            let op = load_operator(path)?;
            Ok(Discrete {
                basis: op.basis().clone(),
                constraints: vec![op],
            })
        }
        _ => bail!("exactly one of --example or --operator is required"),
    }
}

fn load_operator(path: &Path) -> Result<DiagonalOperator> {
    let text = fs::read_to_string(path).with_context(|| format!("reading operator file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("operator file {}", path.display()))
}

fn single_constraint(d: &Discrete) -> Result<&DiagonalOperator> {
    match d.constraints.as_slice() {
        [f] => Ok(f),
        other => bail!("expected a single constraint operator, found {}", other.len()),
    }
}

pub fn spectrum(g: &Global, args: &SpectrumArgs) -> Result<Outcome> {
    let (source, mut values) = if args.cstar {
        let s = cstar_space(g.theta.unwrap_or(q(1)), g.nmax.unwrap_or(10), args.metaplectic, g.hbar)?;
        (s.tag(), s.p_op().exact_values()?.to_vec())
    } else {
        if args.metaplectic {
            bail!("--metaplectic requires --cstar");
        }
        let d = load_discrete(&args.source)?;
        let f = single_constraint(&d)?;
        (f.name().to_string(), f.spectrum()?.values().to_vec())
    };
    values.sort();

    let (name, bytes) = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("eigenvalue\n");
            for v in &values {
                writeln!(out, "{}", rational::decimal(v))?;
            }
            ("spectrum.csv", out.into_bytes())
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                source: &'a str,
                #[serde(with = "cutquant::rational::serde_q_vec")]
                eigenvalues: Vec<Q>,
            }
            let doc = Doc {
                source: &source,
                eigenvalues: values.clone(),
            };
            ("spectrum.json", json_bytes(&doc)?)
        }
    };
    let summary = format!("{source}: {} eigenvalues", values.len());
    Ok(Outcome::single(name.into(), bytes, summary, 0))
}

pub fn cut_verify(g: &Global, source: &Source, metaplectic: bool) -> Result<Outcome> {
    let d = load_discrete(source)?;
    let f = single_constraint(&d)?;
    let sector = cstar_space(g.theta.unwrap_or(q(1)), g.nmax.unwrap_or(10), metaplectic, g.hbar)?;
    let report = verify_theorem1(&d.basis, f, &sector)?;
    let exit_code = match report.verdict {
        Verdict::Mismatch => 1,
        Verdict::Verified | Verdict::VerifiedUpToTruncation | Verdict::TrivialKernel => 0,
    };
    let (name, bytes) = match g.format.unwrap_or(Format::Json) {
        Format::Json => ("cut_verify.json", json_bytes(&report)?),
        Format::Csv => {
            let mut out = String::from("ambient,sector,eigenvalue\n");
            for p in &report.matched_pairs {
                writeln!(out, "{},{},{}", label_csv(&p.ambient), label_csv(&p.sector), rational::decimal(&p.eigenvalue))?;
            }
            ("cut_verify.csv", out.into_bytes())
        }
    };
    let summary = format!(
        "verdict {}: kernel_dim {}, projected_dim {}, {} unmatched",
        report.verdict,
        report.kernel_dim,
        report.projected_dim,
        report.unmatched_projected.len()
    );
    Ok(Outcome::single(name.into(), bytes, summary, exit_code))
}

pub fn project(g: &Global, args: &ProjectArgs) -> Result<Outcome> {
    let d = load_discrete(&args.source)?;
    let p = match args.interval.as_deref() {
        Some([lo, hi]) => interval_projector(single_constraint(&d)?, *lo, *hi)?,
        Some(_) => bail!("--interval takes two values"),
        None => positive_projector(&d.constraints)?,
    };
    let threshold = args.near_trivial.unwrap_or_else(default_near_trivial_threshold);
    let report = ProjectionReport::from_projector(&p, threshold);
    let selected: Vec<BasisLabel> = p.selected().iter().map(|&i| d.basis.label(i)).collect();

    let (name, bytes) = match g.format.unwrap_or(Format::Json) {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                report: &'a ProjectionReport,
                selected: &'a [BasisLabel],
            }
            ("project.json", json_bytes(&Doc {
                report: &report,
                selected: &selected,
            })?)
        }
        Format::Csv => {
            let arity = d.basis.arity();
            let header: Vec<String> = (0..arity).map(|k| format!("c{k}")).collect();
            let mut out = header.join(",") + "\n";
            for label in &selected {
                let row: Vec<String> = label.components.iter().map(rational::decimal).collect();
                writeln!(out, "{}", row.join(","))?;
            }
            ("project.csv", out.into_bytes())
        }
    };
    let summary = format!(
        "kept {} of {} states, removed fraction {}, {}",
        report.projected_dim,
        report.original_dim,
        rational::format(&report.removed_fraction),
        report.triviality_flag
    );
    Ok(Outcome::single(name.into(), bytes, summary, 0))
}

pub fn rig(g: &Global, args: &RigArgs) -> Result<Outcome> {
    let text = fs::read_to_string(&args.fixture)
        .with_context(|| format!("reading fixture {}", args.fixture.display()))?;
    let fixture: RiggingFixture =
        serde_json::from_str(&text).with_context(|| format!("fixture {}", args.fixture.display()))?;
    fixture.validate()?;
    let rule = QuadratureRegistry::with_builtins().get(&fixture.quadrature)?;
    let table = convergence_study(
        &fixture.states()?,
        &fixture.measure()?,
        &fixture.t_list,
        rule.as_ref(),
        fixture.reference(),
    )?;
    let final_rel = table.final_rel_error().unwrap_or(0.0);
    let exit_code = if final_rel > g.tol { 1 } else { 0 };
    let (name, bytes) = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => ("rig.csv", table.to_csv().into_bytes()),
        Format::Json => ("rig.json", json_bytes(&table)?),
    };
    let summary = format!(
        "{} T values, final relative error {:e} (tolerance {:e}), tail averages decreasing: {}",
        table.rows.len(),
        final_rel,
        g.tol,
        table.tail_decreasing()
    );
    Ok(Outcome::single(name.into(), bytes, summary, exit_code))
}

pub fn examples_list(g: &Global) -> Result<Outcome> {
    if g.format == Some(Format::Csv) {
        bail!("examples list only supports --format json");
    }
    #[derive(Serialize)]
    struct Entry {
        name: String,
        description: String,
    }
    let registry = ExampleRegistry::with_builtins();
    let entries: Vec<Entry> = registry
        .iter()
        .map(|s| Entry {
            name: s.name().to_string(),
            description: s.describe(),
        })
        .collect();
    let summary = entries
        .iter()
        .map(|e| format!("{:<24} {}", e.name, e.description))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome::single("examples_list.json".into(), json_bytes(&entries)?, summary, 0))
}

pub fn examples_run(g: &Global, name: &str) -> Result<Outcome> {
    if g.format == Some(Format::Csv) {
        bail!("examples run only supports --format json");
    }
    let outcome = ExampleRegistry::with_builtins().get(name)?.run()?;
    let summary = format!(
        "{}\nexpected: {}\nreproduced: {}",
        outcome.summary, outcome.expected, outcome.reproduced
    );
    let exit_code = if outcome.reproduced { 0 } else { 1 };
    Ok(Outcome::single(format!("example_{name}.json"), json_bytes(&outcome)?, summary, exit_code))
}
