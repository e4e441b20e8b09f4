use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use starpinch::config::{ExperimentConfig, MIN_CALIBRATION_SAMPLES};
use starpinch::identities::{cauchy_schwarz_chain_check, hsiung_minkowski_residual, CheckKind, ResidualReport};
use starpinch::output::{csv_document, json_document, write_file, Header};
use starpinch::pinch::{
    epsilon_field, hypothesis_gate, identity_suite, run_pinch, scaling_study, GateCheck, GateInputs, PinchReport,
    ScalingRow, EPS1_GATE,
};
use starpinch::quadrature::{PairedSampling, SphericalRule};
use starpinch::surface::SignConvention;
use starpinch::symfun::{calibrate, Calibration};
use starpinch::{Error, ErrorKind, Result};

/// Curvature pinching experiments for starshaped hypersurfaces in space forms.
///
/// Exit codes: 0 success, 1 hypothesis violation, 2 numerical failure or
/// failed check, 3 configuration error.
#[derive(Parser, Debug)]
#[command(name = "starpinch", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the quadrature order (the check order is raised to twice this if needed).
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Geometry summary: area, curvature ranges, starshapedness, epsilon field.
    Report,
    /// Residuals of the integral identities and the pointwise inequalities.
    Identities {
        /// Evaluate with the reversed second fundamental form (debugging aid).
        #[arg(long)]
        flip_sign: bool,
        /// Also tabulate the identity residuals at orders 8, 16 and 32.
        #[arg(long)]
        order_sweep: bool,
    },
    /// Pinching experiment: constants, fitted sphere, Hausdorff distance and bound.
    Pinch,
    /// Runs the pinching experiment over an amplitude schedule.
    Scaling {
        /// Strictly decreasing amplitudes, comma separated.
        #[arg(long, value_delimiter = ',')]
        amplitudes: Option<Vec<f64>>,
    },
    /// Samples the simplex of principal curvatures for c_n and the Maclaurin constants.
    Calibrate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Hypothesis => 1,
        ErrorKind::Numerical => 2,
        ErrorKind::Input => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("starpinch: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Context {
    cfg: ExperimentConfig,
    out: PathBuf,
}

impl Context {
    fn header(&self, command: &str) -> Header {
        // The output location does not change results, so it is left out of the hash.
        let mut canon = self.cfg.clone();
        canon.output = Default::default();
        Header::new(command, &canon, canon.experiment.seed)
    }

    /// The configured calibration, or one sampled now when the constants are not configured.
    fn calibration(&self) -> Result<Option<Calibration>> {
        if let Some(c) = self.cfg.load_calibration()? {
            return Ok(Some(c));
        }
        if self.cfg.constants.c_n.is_some() && self.cfg.constants.b_consts.is_some() {
            return Ok(None);
        }
        let c = &self.cfg.calibration;
        calibrate(self.cfg.surface.n, self.cfg.experiment.r, c.samples, self.cfg.experiment.seed, c.margin).map(Some)
    }
}

fn load(cli: &Cli) -> Result<Context> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("this command needs --config <file>".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.experiment.seed = s;
    }
    if let Some(q) = cli.quad_order {
        cfg.set_quad_order(q);
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate()
        .map_err(|(section, key, msg)| Error::InvalidArgument(format!("{section}.{key}: {msg}")))?;
    let out = cfg.output.dir.clone();
    Ok(Context { cfg, out })
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Report => report(&load(&cli)?),
        Command::Identities { flip_sign, order_sweep } => {
            let mut ctx = load(&cli)?;
            if *flip_sign {
                ctx.cfg.surface.sign = SignConvention::Flipped;
            }
            identities(&ctx, *order_sweep)
        }
        Command::Pinch => pinch(&load(&cli)?),
        Command::Scaling { amplitudes } => {
            let mut ctx = load(&cli)?;
            if let Some(a) = amplitudes {
                ctx.cfg.experiment.amplitudes = Some(a.clone());
                ctx.cfg
                    .validate()
                    .map_err(|(section, key, msg)| Error::InvalidArgument(format!("{section}.{key}: {msg}")))?;
            }
            scaling(&ctx)
        }
        Command::Calibrate { n, r, samples, margin } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            calibrate_cmd(*n, *r, *samples, cli.seed.unwrap_or(0), *margin, &out)
        }
    }
}

fn print_checks(checks: &[GateCheck]) {
    for c in checks {
        println!("  {:<24} {}  {}", c.name, if c.pass { "ok  " } else { "FAIL" }, c.detail);
    }
}

#[derive(Serialize)]
struct CurvatureRange {
    k: usize,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct GeometryReport {
    n: usize,
    r: usize,
    delta: f64,
    quad_order: usize,
    quad_order_check: usize,
    support_sign: i8,
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "R")]
    big_r: f64,
    volume: f64,
    volume_refinement: f64,
    mean_curvatures: Vec<CurvatureRange>,
    #[serde(rename = "B_sup")]
    b_sup: f64,
    tau_max: f64,
    h: f64,
    eps_l1: f64,
    eps_linf: f64,
    /// `H_r` is constant to working precision.
    eps_identically_zero: bool,
    hypotheses: Vec<GateCheck>,
}

fn report(ctx: &Context) -> Result<u8> {
    let cfg = &ctx.cfg;
    let surface = cfg.surface()?;
    let (n, r) = (surface.n(), cfg.experiment.r);
    let q = &cfg.quadrature;
    let star = surface.starshape_report(&SphericalRule::new(n, q.quad_order)?)?;
    let sampling = PairedSampling::new(&surface, q.quad_order, q.quad_order_check)?;
    let prim = &sampling.primary;
    let volume = sampling.volume();
    let mean_curvatures = (1..=n)
        .map(|k| CurvatureRange {
            k,
            min: prim.points.iter().map(|p| p.h(k)).fold(f64::INFINITY, f64::min),
            max: prim.points.iter().map(|p| p.h(k)).fold(f64::NEG_INFINITY, f64::max),
        })
        .collect::<Vec<_>>();
    let b_sup = prim.points.iter().map(|p| p.profile.kappa.spectral_norm()).fold(0.0, f64::max);
    let tau_max = prim.points.iter().map(|p| p.tau_norm()).fold(0.0, f64::max);
    let (h, eps) = epsilon_field(prim, r, cfg.experiment.h)?;
    let eps_l1 = prim.lp_norm_values(&eps, 1.0);
    let eps_linf = prim.lp_norm_values(&eps, f64::INFINITY);
    let gate = hypothesis_gate(&GateInputs {
        starshaped: true,
        r0: star.r0,
        h,
        eps_linf,
        eps_l1,
        eps1: None,
        min_h_next: mean_curvatures.get(r).map_or(f64::INFINITY, |c| c.min),
        big_r: star.r_max,
        max_radius: surface.model().max_geodesic_radius(),
    });
    let hypotheses: Vec<GateCheck> = gate.checks.into_iter().filter(|c| c.name != EPS1_GATE).collect();
    let body = GeometryReport {
        n,
        r,
        delta: surface.model().delta(),
        quad_order: q.quad_order,
        quad_order_check: q.quad_order_check,
        support_sign: star.sign,
        r0: star.r0,
        big_r: star.r_max,
        volume: volume.value,
        volume_refinement: volume.refinement_error,
        mean_curvatures,
        b_sup,
        tau_max,
        h,
        eps_l1,
        eps_linf,
        eps_identically_zero: eps_linf == 0.0,
        hypotheses,
    };
    let path = write_file(&ctx.out, "report.json", &json_document(&ctx.header("report"), &body))?;

    println!("n = {n}, r = {r}, delta = {}", body.delta);
    println!("area = {:.12e} (refinement {:.1e})", body.volume, body.volume_refinement);
    for c in &body.mean_curvatures {
        println!("H_{} in [{:.9e}, {:.9e}]", c.k, c.min, c.max);
    }
    println!("R0 = {:.6e}, R = {:.6e}, |B|_inf = {:.6e}", body.r0, body.big_r, body.b_sup);
    println!("||eps||_inf = {:.3e}{}", body.eps_linf, if body.eps_identically_zero { " (eps = 0)" } else { "" });
    print_checks(&body.hypotheses);
    println!("wrote {}", path.display());
    if body.hypotheses.iter().all(|c| c.pass) {
        Ok(0)
    } else {
        eprintln!("starpinch: hypothesis violated");
        Ok(1)
    }
}

const SWEEP_ORDERS: [usize; 3] = [8, 16, 32];

fn identities(ctx: &Context, order_sweep: bool) -> Result<u8> {
    let cfg = &ctx.cfg;
    let surface = cfg.surface()?;
    let settings = cfg.pinch_settings(ctx.calibration()?);
    let suite = identity_suite(&surface, cfg.experiment.r, &settings)?;
    let mut header = ctx.header("identities");
    if let Some(c) = &suite.constants {
        header = header.with_provenance(&c.provenance);
    }
    let rows: Vec<String> = suite.checks.iter().map(ResidualReport::csv_row).collect();
    let path = write_file(&ctx.out, "identities.csv", &csv_document(&header, ResidualReport::csv_header(), &rows, &[]))?;
    for c in &suite.checks {
        let status = match (c.kind, c.pass) {
            (CheckKind::Diagnostic, _) => "info",
            (_, true) => "ok  ",
            (_, false) => "FAIL",
        };
        println!(
            "{:<26} {status}  value = {:+.3e}  tol = {:.1e}  refinement = {:.1e}",
            c.name, c.value, c.tolerance, c.refinement_error
        );
    }
    println!("wrote {}", path.display());

    if order_sweep {
        let delta = surface.model().delta();
        let mut rows = Vec::new();
        for order in SWEEP_ORDERS {
            let sampling = PairedSampling::new(&surface, order, 2 * order)?;
            for k in 0..surface.n() {
                let rep = hsiung_minkowski_residual(&sampling, k, delta)?;
                rows.push(format!("{order},{},{:e},{:e}", rep.name, rep.value, rep.refinement_error));
            }
            let chain = cauchy_schwarz_chain_check(&sampling);
            rows.push(format!("{order},{},{:e},{:e}", chain.name, chain.value, chain.refinement_error));
        }
        let p = write_file(
            &ctx.out,
            "identities_sweep.csv",
            &csv_document(&header, "order,name,value,refinement_error", &rows, &[]),
        )?;
        println!("wrote {}", p.display());
    }

    let failed: Vec<&ResidualReport> = suite
        .checks
        .iter()
        .filter(|c| c.kind != CheckKind::Diagnostic && !c.pass)
        .collect();
    if failed.is_empty() {
        return Ok(0);
    }
    for c in &failed {
        eprintln!(
            "starpinch: check {} failed: value {:e} outside tolerance {:e} (+ refinement {:e})",
            c.name, c.value, c.tolerance, c.refinement_error
        );
    }
    if cfg.surface.sign == SignConvention::Flipped {
        eprintln!("starpinch: the second fundamental form sign convention is flipped");
    }
    Ok(2)
}

fn print_pinch(rep: &PinchReport) {
    println!("n = {}, r = {}, delta = {}", rep.n, rep.r, rep.delta);
    println!("h = {:.9e}, ||eps||_1 = {:.3e}, ||eps||_inf = {:.3e}", rep.h, rep.eps_l1, rep.eps_linf);
    println!("||tau||_2 = {:.3e}, ||tau||_(n+1) = {:.3e}", rep.tau_l2, rep.tau_lnp1);
    println!("rho0 = {:.9e}, dH = {:.6e} (refinement {:.1e})", rep.rho0, rep.dh, rep.dh_refinement);
    match &rep.constants {
        Some(c) => println!(
            "K1 = {:.4e}, K2 = {:.4e}, K3 = {:.4e}, eps1 = {:.4e}, gamma = {}",
            c.k1, c.k2, c.k3, c.eps1, c.gamma
        ),
        None => println!(
            "constants unavailable: {}",
            rep.constants_error.as_deref().unwrap_or("unknown")
        ),
    }
    println!("bound = {:.6e}, applicable = {}", rep.bound, rep.applicable);
    print_checks(&rep.gate.checks);
}

fn pinch(ctx: &Context) -> Result<u8> {
    let cfg = &ctx.cfg;
    let surface = cfg.surface()?;
    let settings = cfg.pinch_settings(ctx.calibration()?);
    let rep = run_pinch(&surface, cfg.experiment.r, &settings)?;
    let mut header = ctx.header("pinch");
    if let Some(c) = &rep.constants {
        header = header.with_provenance(&c.provenance);
    }
    let path = write_file(&ctx.out, "pinch.json", &json_document(&header, &rep))?;
    print_pinch(&rep);
    println!("wrote {}", path.display());
    if !rep.gate.structural_pass {
        eprintln!("starpinch: hypothesis violated");
        return Ok(1);
    }
    if rep.bound_holds == Some(false) {
        eprintln!("starpinch: dH = {:e} exceeds the bound {:e}", rep.dh, rep.bound);
        return Ok(2);
    }
    Ok(0)
}

fn scaling(ctx: &Context) -> Result<u8> {
    let cfg = &ctx.cfg;
    let amplitudes = cfg
        .experiment
        .amplitudes
        .clone()
        .ok_or_else(|| Error::InvalidArgument("scaling needs --amplitudes or experiment.amplitudes".into()))?;
    let surface = cfg.surface()?;
    let settings = cfg.pinch_settings(ctx.calibration()?);
    let study = scaling_study(&surface, &amplitudes, cfg.experiment.r, &settings)?;
    let mut header = ctx.header("scaling");
    if let Some(c) = study.reports.iter().find_map(|r| r.constants.as_ref()) {
        header = header.with_provenance(&c.provenance);
    }
    let rows: Vec<String> = study.rows.iter().map(ScalingRow::csv_row).collect();
    let mut trailer = vec![match &study.regression {
        Some(f) => format!(
            "regression ln dH = {:e} ln ||eps||_1 + {:e}, rms residual {:e}",
            f.slope, f.intercept, f.residual
        ),
        None => "regression unavailable (fewer than two rows pass the hypothesis checks)".into(),
    }];
    trailer.push(format!("monotone: {}", study.monotone));
    let csv = write_file(&ctx.out, "scaling.csv", &csv_document(&header, ScalingRow::CSV_HEADER, &rows, &trailer))?;
    let json = write_file(&ctx.out, "scaling.json", &json_document(&header, &study))?;
    println!("{}", ScalingRow::CSV_HEADER);
    for row in &rows {
        println!("{row}");
    }
    for t in &trailer {
        println!("# {t}");
    }
    println!("wrote {} and {}", csv.display(), json.display());
    if let Some(bad) = study.reports.iter().find(|r| r.bound_holds == Some(false)) {
        eprintln!("starpinch: dH = {:e} exceeds the bound {:e}", bad.dh, bad.bound);
        return Ok(2);
    }
    Ok(0)
}

#[derive(Serialize)]
struct CalibrateParams {
    n: usize,
    r: usize,
    samples: usize,
    seed: u64,
    margin: f64,
}

fn calibrate_cmd(n: usize, r: usize, samples: usize, seed: u64, margin: f64, out: &Path) -> Result<u8> {
    if samples < MIN_CALIBRATION_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "--samples must be at least {MIN_CALIBRATION_SAMPLES}, got {samples}"
        )));
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidArgument(format!("--margin must lie in [0, 1), got {margin}")));
    }
    let cal = calibrate(n, r, samples, seed, margin)?;
    let header = Header::new(
        "calibrate",
        &CalibrateParams {
            n,
            r,
            samples,
            seed,
            margin,
        },
        seed,
    );
    let text = format!("{}{}", header.comment_block(), cal.to_toml());
    let path = write_file(out, "calibration.toml", &text)?;
    println!("c_n = {:e}", cal.c_n);
    println!("b_consts = {:?}", cal.b_consts);
    println!("wrote {}", path.display());
    Ok(0)
}
