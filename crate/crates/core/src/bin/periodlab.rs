use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use periodlab::bounds::{self, AuditOptions, BoundExtras};
use periodlab::cycles::{self, continue_cycle, cycle_metrics};
use periodlab::detformula::{self, choose_form_tuple, closed_form_constant, FormTuple};
use periodlab::genericity::{self, critical_data, genericity_profile, normalize, NormalizationMode};
use periodlab::integrals::{default_samples, integrate_forms, period_matrix};
use periodlab::io;
use periodlab::projection::{branch_points, track_branches, track_branches_with_step, PolyPath};
use periodlab::{BivariatePolynomial, Config, Error, C64};

#[derive(Parser)]
#[command(name = "periodlab", version, about = "Vanishing cycles, Abelian integrals and period determinants")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Residual target for roots and critical points.
    #[arg(long, global = true)]
    tol_root: Option<f64>,
    /// Ambiguity factor for nearest-match labelling.
    #[arg(long, global = true)]
    tol_match: Option<f64>,
    /// Gauss-Legendre order per panel.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Number of circle samples for the period determinant.
    #[arg(long, global = true, default_value_t = 12)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// weak | normalized | unit_scaled | centrally_rescaled
    #[arg(long, global = true)]
    mode: Option<NormalizationMode>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical points, ultra-Morse status and the genericity constants.
    Analyze { input: PathBuf },
    /// Brings the polynomial to the normal form chosen by --mode (default normalized).
    Normalize { input: PathBuf },
    /// Generalized critical values of the projection of S_t to the x-axis.
    BranchPoints {
        input: PathBuf,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        t: String,
    },
    /// Labelled branch points along a polygonal t-path "re,im;re,im;...".
    Track {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        path: String,
        /// Fixed output grid step in the path parameter.
        #[arg(long)]
        step: Option<f64>,
    },
    /// The cycle vanishing along a path ending at a critical value, at the path start.
    Cycle {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        path: String,
    },
    /// Marked basis of vanishing cycles with its intersection matrix.
    Basis {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<String>,
    },
    /// Integrals of monomial forms "l,m;..." (x^l y^(m+1) dx) over a cycle document.
    Integrate {
        input: PathBuf,
        #[arg(long)]
        cycle: PathBuf,
        #[arg(long)]
        forms: Option<String>,
    },
    /// Period matrix and determinant of a star basis at t0.
    PeriodDet {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<String>,
        #[arg(long)]
        forms: Option<String>,
    },
    /// Numerical period determinant against the closed form on a sample circle.
    VerifyFormula {
        input: PathBuf,
        #[arg(long)]
        forms: Option<String>,
    },
    /// A form tuple maximizing the smallest |P_d|.
    ChooseForms { input: PathBuf },
    /// Table of the explicit constants in log10.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cprime: f64,
        #[arg(long)]
        cdoubleprime: f64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        alpha_len: Option<f64>,
        #[arg(long)]
        m_alpha: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        alpha_tilde_len: Option<f64>,
        #[arg(long)]
        v: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Literal audits of the theorem inequalities, with log10 margins.
    Audit {
        input: PathBuf,
        /// Levels "re,im;..." for the topology audit of the unit-scaled polynomial.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        topology_t: String,
        /// Skip the cycle and integral checks.
        #[arg(long)]
        no_cycles: bool,
    },
}

enum Outcome {
    Ok(Value),
    Fail(Value),
}

fn read_text(path: &PathBuf) -> Result<String, Error> {
    let mut s = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::InvalidInput(format!("stdin: {e}")))?;
    } else {
        s = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    }
    Ok(s)
}

fn read_poly(path: &PathBuf) -> Result<BivariatePolynomial, Error> {
    io::read_polynomial(&read_text(path)?)
}

fn doc<T: Serialize>(v: &T) -> Value {
    io::document(v)
}

fn forms_or(spec: &Option<String>, h: &BivariatePolynomial) -> Result<FormTuple, Error> {
    match spec {
        Some(s) => io::parse_tuple_spec(s),
        None => {
            let (top, _) = h.homogeneous_split()?;
            choose_form_tuple(&top)
        }
    }
}

fn config(c: &Common) -> Config {
    let mut cfg = Config { seed: c.seed, ..Config::default() };
    if let Some(v) = c.tol_root {
        cfg.tol_root = v;
    }
    if let Some(v) = c.tol_match {
        cfg.tol_match = v;
    }
    if let Some(v) = c.quad_order {
        cfg.quad_order = v;
    }
    cfg
}

fn threads() -> Result<usize, Error> {
    match std::env::var("PERIODLAB_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(Error::InvalidInput(format!("PERIODLAB_THREADS={s:?} is not a positive integer"))),
        },
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    threads()?;
    let cfg = config(&cli.common);
    let c = &cli.common;
    let out = match &cli.cmd {
        Cmd::Analyze { input } => {
            let h = read_poly(input)?;
            let crit = critical_data(&h, &cfg)?;
            let (top, lower) = h.homogeneous_split()?;
            let profile = genericity_profile(&top, &cfg)?;
            Outcome::Ok(doc(&json!({
                "n": crit.n,
                "ultra_morse": crit.ultra_morse,
                "critical_values": crit.sorted_values(),
                "critical": crit,
                "genericity": profile,
                "max_norm_h": top.max_norm(),
                "max_norm_lower": lower.max_norm(),
                "value_at_origin": h.coeff(0, 0),
            })))
        }
        Cmd::Normalize { input } => {
            let h = read_poly(input)?;
            let mode = c.mode.unwrap_or(NormalizationMode::Normalized);
            let nz = normalize(&h, mode, &cfg)?;
            let mut report = nz.report.clone();
            report.critical_values = genericity::sort_values(report.critical_values);
            Outcome::Ok(doc(&json!({
                "polynomial": io::polynomial_value(&nz.poly),
                "transform": nz.transform,
                "report": report,
            })))
        }
        Cmd::BranchPoints { input, t } => {
            let h = read_poly(input)?;
            let set = branch_points(&h, io::parse_complex(t)?, &cfg)?;
            Outcome::Ok(doc(&json!({
                "t": set.t,
                "points": set.points,
                "distinct_count": set.distinct_count,
                "multiplicity_sum": set.multiplicity_sum(),
                "cluster_tol": set.cluster_tol,
            })))
        }
        Cmd::Track { input, path, step } => {
            let h = read_poly(input)?;
            let p = PolyPath::new(io::parse_points(path)?)?;
            let tr = match step {
                Some(s) => track_branches_with_step(&h, &p, *s, &cfg)?,
                None => track_branches(&h, &p, &cfg)?,
            };
            let polylines: Vec<Vec<C64>> = (0..tr.labels()).map(|k| tr.polyline(k)).collect();
            Outcome::Ok(doc(&json!({ "path": p, "taus": tr.taus, "polylines": polylines })))
        }
        Cmd::Cycle { input, path } => {
            let h = read_poly(input)?;
            let p = PolyPath::new(io::parse_points(path)?)?;
            let cyc = continue_cycle(&h, &p, &cfg)?;
            let metrics = cycle_metrics(&h, &cyc, (f64::INFINITY, f64::INFINITY), &cfg)?;
            Outcome::Ok(doc(&json!({ "cycle": cyc, "metrics": metrics })))
        }
        Cmd::Basis { input, t0 } => {
            let h = read_poly(input)?;
            let t0 = t0.as_deref().map(io::parse_complex).transpose()?;
            Outcome::Ok(doc(&cycles::marked_basis(&h, t0, &cfg)?))
        }
        Cmd::Integrate { input, cycle, forms } => {
            let h = read_poly(input)?;
            let cyc = io::read_cycle(&read_text(cycle)?)?;
            let tuple = match forms {
                Some(s) => io::parse_tuple_spec(s)?,
                None => FormTuple::lexicographic(h.degree().unwrap_or(1).saturating_sub(1).max(1)),
            };
            let values = integrate_forms(&h, &cyc, &tuple.forms, &cfg)?;
            Outcome::Ok(doc(&json!({ "t": cyc.t, "forms": tuple.pairs(), "integrals": values })))
        }
        Cmd::PeriodDet { input, t0, forms } => {
            let h = read_poly(input)?;
            let tuple = forms_or(forms, &h)?;
            let t0 = t0.as_deref().map(io::parse_complex).transpose()?;
            let (_, t0, values, _, basis) = cycles::star_basis(&h, t0, &cfg)?;
            let pm = period_matrix(&h, &basis, &tuple.forms, &cfg)?;
            Outcome::Ok(doc(&json!({
                "t": t0,
                "critical_values": values,
                "forms": tuple.pairs(),
                "entries": pm.entries,
                "det": pm.det,
            })))
        }
        Cmd::VerifyFormula { input, forms } => {
            let mut h = read_poly(input)?;
            if let Some(mode) = c.mode {
                h = normalize(&h, mode, &cfg)?.poly;
            }
            let tuple = forms_or(forms, &h)?;
            let crit = critical_data(&h, &cfg)?;
            let ts = default_samples(&crit, c.samples);
            let (verdict, samples) = detformula::verify_formula(&h, &tuple, &ts, &cfg)?;
            let (top, _) = h.homogeneous_split()?;
            let constant = closed_form_constant(&top, &tuple, &cfg)?;
            let body = doc(&json!({
                "pass": verdict.pass,
                "max_rel_err": verdict.max_rel_err,
                "max_rel_err_complex": verdict.max_rel_err_complex,
                "phase": verdict.phase,
                "log_abs_c": verdict.log_abs_c,
                "tolerance": detformula::VERDICT_TOL,
                "forms": tuple.pairs(),
                "constant": constant,
                "samples": samples,
            }));
            if verdict.pass {
                Outcome::Ok(body)
            } else {
                Outcome::Fail(body)
            }
        }
        Cmd::ChooseForms { input } => {
            let h = read_poly(input)?;
            Outcome::Ok(io::tuple_value(&forms_or(&None, &h)?))
        }
        Cmd::Bounds { n, cprime, cdoubleprime, eps, alpha_len, m_alpha, beta, alpha_tilde_len, v, t } => {
            let extras = BoundExtras {
                eps: *eps,
                alpha_len: *alpha_len,
                m_alpha: *m_alpha,
                beta: *beta,
                alpha_tilde_len: *alpha_tilde_len,
                v: *v,
                t: *t,
            };
            Outcome::Ok(doc(&bounds::bound_table(*n, *cprime, *cdoubleprime, &extras)?))
        }
        Cmd::Audit { input, topology_t, no_cycles } => {
            let h = read_poly(input)?;
            let opts = AuditOptions { cycles: !no_cycles, ..Default::default() };
            let mut report = bounds::audit_theorems(&h, &opts, &cfg)?;
            let hu = normalize(&h, NormalizationMode::UnitScaled, &cfg)?.poly;
            let topo = bounds::audit_topology(&hu, &io::parse_points(topology_t)?, &cfg)?;
            report.checks.extend(topo.checks);
            let pass = report.pass();
            let body = doc(&json!({ "pass": pass, "checks": report.checks, "note": report.note }));
            if pass {
                Outcome::Ok(body)
            } else {
                Outcome::Fail(body)
            }
        }
    };
    Ok(out)
}

fn emit(v: &Value, out: &Option<PathBuf>) -> Result<(), Error> {
    let text = io::to_text(v);
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|o| match o {
        Outcome::Ok(v) => emit(&v, &cli.common.out).map(|_| 0u8),
        Outcome::Fail(v) => emit(&v, &cli.common.out).map(|_| 1u8),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("periodlab: error: {e}");
            ExitCode::from(2)
        }
    }
}
