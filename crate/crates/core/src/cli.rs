//! Command-line front end.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::coefficient::Stabilisation;
use crate::diagnostics::{error_norms, fit_rates, midline_profiles, ErrorNorms};
use crate::driver::{convergence_study, run_transient, solve_steady, InitialCondition, Scenario, TimeLoopConfig, SCENARIOS};
use crate::error::{OseenError, Result};
use crate::linalg::SolverOptions;
use crate::mesh::read_text;
use crate::output::{write_diagnostics, write_error_table, write_profile, write_vtk};
use crate::selftest;
use crate::system::Scheme;

#[derive(Parser, Debug)]
#[command(name = "oseen", version, about = "Mixed and DG solvers for the 2D Oseen equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Error table on a sequence of refined meshes.
    Converge(Options),
    /// Backward-Euler time stepping.
    Transient(Options),
    /// One steady solve.
    Solve(Options),
    /// Run the built-in invariant checks.
    Selftest(Options),
}

/// Flags shared by all subcommands. Unset flags fall back to the config
/// file, then to the scenario defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// `mixed` or `dg`.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Polynomial index (0, 1 or 2).
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of meshes in a convergence study.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Cells per side of the unit square.
    #[arg(long)]
    pub n: Option<usize>,
    /// Mesh file in the text format (steady solves).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c11: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a11: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d11: Option<f64>,
    /// Write a field file every this many steps (0 disables).
    #[arg(long)]
    pub stride: Option<usize>,
    /// Initial velocity: `field` or `stokes`.
    #[arg(long)]
    pub init: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A failure with its exit code: 1 for usage errors, 2 for numerical ones.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<OseenError> for Failure {
    fn from(e: OseenError) -> Self {
        let code = match e {
            OseenError::Config(_) | OseenError::MeshParse { .. } | OseenError::Io(_) | OseenError::UnsupportedDegree { .. } => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 1, message: msg.into() }
}

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| OseenError::Config(format!("line {}: expected key = value", no + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| OseenError::Config(format!("bad value '{v}' for {key}")))
}

impl Options {
    /// Fills unset fields from a config file.
    pub fn merge_config(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let cfg = parse_config(&fs::read_to_string(&path)?)?;
        for (k, v) in &cfg {
            let v = v.as_str();
            match k.as_str() {
                "scheme" => self.scheme = self.scheme.or(Some(v.to_string())),
                "k" => self.k = self.k.or(Some(parse(k, v)?)),
                "levels" => self.levels = self.levels.or(Some(parse(k, v)?)),
                "n" => self.n = self.n.or(Some(parse(k, v)?)),
                "mesh" => self.mesh = self.mesh.or(Some(PathBuf::from(v))),
                "scenario" => self.scenario = self.scenario.or(Some(v.to_string())),
                "steps" => self.steps = self.steps.or(Some(parse(k, v)?)),
                "dt" => self.dt = self.dt.or(Some(parse(k, v)?)),
                "nu" => self.nu = self.nu.or(Some(parse(k, v)?)),
                "sigma" => self.sigma = self.sigma.or(Some(parse(k, v)?)),
                "c11" => self.c11 = self.c11.or(Some(parse(k, v)?)),
                "a11" => self.a11 = self.a11.or(Some(parse(k, v)?)),
                "d11" => self.d11 = self.d11.or(Some(parse(k, v)?)),
                "stride" => self.stride = self.stride.or(Some(parse(k, v)?)),
                "init" => self.init = self.init.or(Some(v.to_string())),
                "out" => self.out = self.out.or(Some(PathBuf::from(v))),
                other => return Err(OseenError::Config(format!("unknown config key '{other}'"))),
            }
        }
        Ok(self)
    }

    fn scheme_or(&self, default: Scheme) -> Result<Scheme> {
        self.scheme.as_deref().map_or(Ok(default), str::parse)
    }

    fn degree_or(&self, default: usize) -> Result<usize> {
        let k = self.k.unwrap_or(default);
        if k > 2 {
            return Err(OseenError::Config(format!("--k must be 0, 1 or 2, got {k}")));
        }
        Ok(k)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let d = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    /// Applies `--nu`, `--sigma` and the penalty overrides.
    fn apply_overrides(&self, sc: &mut Scenario) {
        if let Some(s) = self.sigma {
            sc.set_sigma(s);
        }
        let st = &mut sc.params.stab;
        *st = Stabilisation {
            c11: self.c11.unwrap_or(st.c11),
            a11: self.a11.unwrap_or(st.a11),
            d11: self.d11.unwrap_or(st.d11),
        };
    }

    fn scenario(&self, default: &str, n: usize) -> Result<Scenario> {
        let name = self.scenario.as_deref().unwrap_or(default);
        let mut sc = match &self.mesh {
            Some(path) => {
                let mesh = read_text(BufReader::new(File::open(path)?))?;
                match name {
                    "manufactured" => Scenario::manufactured_on(mesh, self.nu.unwrap_or(0.1), 10.0)?,
                    "zero" => Scenario { mesh: Arc::new(mesh), ..Scenario::zero(1, self.nu.unwrap_or(0.1), 10.0)? },
                    other => return Err(OseenError::Config(format!("--mesh is supported for manufactured and zero, not '{other}'"))),
                }
            }
            None => Scenario::by_name(name, n, self.nu, None)?,
        };
        if self.mesh.is_some() && self.sigma.is_none() {
            sc.set_sigma(10.0);
        }
        self.apply_overrides(&mut sc);
        Ok(sc)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Rate thresholds of a convergence run: `|rate − (k+1)| ≤ 0.15` at the
/// finest pair for the norms that the scheme is proven to converge in.
pub fn rates_ok(scheme: Scheme, k: usize, rows: &[ErrorNorms]) -> Result<Vec<(&'static str, f64, bool)>> {
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let cols: Vec<(&'static str, Vec<f64>)> = match scheme {
        Scheme::Mixed => vec![
            ("u", rows.iter().map(|r| r.u_div).collect()),
            ("w", rows.iter().map(|r| r.w_z).collect()),
            ("p", rows.iter().map(|r| r.p_l2).collect()),
        ],
        Scheme::Dg => vec![
            ("A", rows.iter().map(|r| r.a_seminorm).collect()),
            ("p", rows.iter().map(|r| r.p_l2).collect()),
        ],
    };
    cols.into_iter()
        .map(|(name, e)| {
            let r = fit_rates(&h, &e)?.last().copied().flatten().unwrap_or(f64::NAN);
            Ok((name, r, (r - (k + 1) as f64).abs() <= 0.15))
        })
        .collect()
}

fn cmd_converge(o: Options) -> Result<(), Failure> {
    let scheme = o.scheme_or(Scheme::Mixed)?;
    let k = o.degree_or(0)?;
    let levels = o.levels.unwrap_or(5);
    if levels < 2 {
        return Err(usage("--levels must be at least 2"));
    }
    let name = o.scenario.clone().unwrap_or_else(|| "manufactured".into());
    if o.mesh.is_some() {
        return Err(usage("converge builds its own meshes; --mesh is not accepted"));
    }
    let rows = convergence_study(
        |n| {
            let mut sc = Scenario::by_name(&name, n, o.nu, None)?;
            o.apply_overrides(&mut sc);
            Ok(sc)
        },
        scheme,
        k,
        levels,
        &SolverOptions::default(),
    )?;
    let dir = o.out_dir()?;
    write_error_table(create(&dir, &format!("convergence_{scheme}_k{k}.csv"))?, scheme, &rows)?;
    write_error_table(std::io::stdout().lock(), scheme, &rows)?;
    let checks = rates_ok(scheme, k, &rows)?;
    let mut ok = true;
    for (n, r, pass) in &checks {
        eprintln!("rate {n}: {r:.3} (expected {}) {}", k + 1, if *pass { "ok" } else { "FAIL" });
        ok &= pass;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure { code: 2, message: "observed rates outside tolerance".into() })
    }
}

fn cmd_solve(o: Options) -> Result<(), Failure> {
    let scheme = o.scheme_or(Scheme::Mixed)?;
    let k = o.degree_or(0)?;
    let sc = o.scenario("manufactured", o.n.unwrap_or(8))?;
    let sol = solve_steady(&sc, scheme, k, &SolverOptions::default())?;
    let dir = o.out_dir()?;
    write_vtk(create(&dir, "solution.vtk")?, &sol, &format!("{} {scheme} k={k}", sc.name))?;
    let (v, h) = midline_profiles(&sol, sc.bounds, 101)?;
    write_profile(create(&dir, "profile_vertical.csv")?, &v)?;
    write_profile(create(&dir, "profile_horizontal.csv")?, &h)?;
    let mut stdout = std::io::stdout().lock();
    if let Some(r) = &sol.report {
        writeln!(stdout, "dofs {} backend {:?} residual {:.2e}", r.n, r.backend, r.residual).map_err(OseenError::from)?;
    }
    if let Some(exact) = &sc.exact {
        let e = error_norms(&sol, exact, &sc.params)?;
        write_error_table(&mut stdout, scheme, &[e])?;
    }
    Ok(())
}

fn cmd_transient(o: Options) -> Result<(), Failure> {
    let name = o.scenario.clone().unwrap_or_else(|| "kh".into());
    let (default_scheme, default_k, default_n) = if name == "kh" { (Scheme::Dg, 1, 64) } else { (Scheme::Mixed, 0, 16) };
    let scheme = o.scheme_or(default_scheme)?;
    let k = o.degree_or(default_k)?;
    let sc = o.scenario(&name, o.n.unwrap_or(default_n))?;
    if sc.initial_velocity.is_none() {
        return Err(usage(format!("scenario '{}' has no initial condition", sc.name)));
    }
    let dt = o.dt.unwrap_or(1.0 / sc.params.sigma);
    let mut cfg = TimeLoopConfig::new(scheme, k, dt, o.steps.unwrap_or(4));
    cfg.initial_condition = match o.init.as_deref() {
        None | Some("field") => InitialCondition::FromField,
        Some("stokes") => InitialCondition::StokesSolve,
        Some(other) => return Err(usage(format!("--init must be field or stokes, got '{other}'"))),
    };
    let stride = o.stride.unwrap_or(1);
    let dir = o.out_dir()?;
    let records = run_transient(&sc, &cfg, |r, sol| {
        println!("{:>4} t={:.6e} E={:.8e} P={:.8e} div={:.2e}", r.step, r.t, r.enstrophy.e, r.enstrophy.p, r.div_linf);
        if stride > 0 && r.step > 0 && r.step % stride == 0 {
            write_vtk(create(&dir, &format!("step_{:04}.vtk", r.step))?, sol, &format!("{} t={}", sc.name, r.t))?;
        }
        Ok(())
    })?;
    let recorded = if cfg.n_steps == 0 { &records[..0] } else { &records[..] };
    write_diagnostics(create(&dir, "diagnostics.csv")?, recorded)?;
    Ok(())
}

fn cmd_selftest(o: Options) -> Result<(), Failure> {
    let d = selftest::default_stabilisation();
    let stab = Stabilisation {
        c11: o.c11.unwrap_or(d.c11),
        a11: o.a11.unwrap_or(d.a11),
        d11: o.d11.unwrap_or(d.d11),
    };
    let checks = selftest::run(stab);
    let mut ok = true;
    for c in &checks {
        println!("{:<20} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
        ok &= c.passed;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure { code: 2, message: "selftest failed".into() })
    }
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> Result<(), Failure> {
    let merge = |o: Options| o.merge_config().map_err(|e| usage(e.to_string()));
    match cli.command {
        Command::Converge(o) => cmd_converge(merge(o)?),
        Command::Solve(o) => cmd_solve(merge(o)?),
        Command::Transient(o) => cmd_transient(merge(o)?),
        Command::Selftest(o) => cmd_selftest(merge(o)?),
    }
}

/// Valid scenario names, for help texts.
pub fn scenario_names() -> String {
    SCENARIOS.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let m = parse_config("# c\nscheme = dg\nk=1 # trailing\n\nnu = 0.01").unwrap();
        assert_eq!(m["scheme"], "dg");
        assert_eq!(m["k"], "1");
        assert_eq!(m["nu"], "0.01");
        assert!(parse_config("nonsense").is_err());
    }

    #[test]
    fn levels_below_two_is_usage_error() {
        let cli = Cli::try_parse_from(["oseen", "converge", "--levels", "1"]).unwrap();
        let e = run(cli).unwrap_err();
        assert_eq!(e.code, 1);
    }

    #[test]
    fn degree_out_of_range() {
        let o = Options { k: Some(3), ..Default::default() };
        assert!(o.degree_or(0).is_err());
    }
}
