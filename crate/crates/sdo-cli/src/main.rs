#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sdo::bifurcation::{classify_regime, cycle_census, sweep_eta, ClassifyConfig};
use sdo::blowup::unscale_params;
use sdo::io::{read_het_csv, write_het_csv, write_json, write_trajectory_csv, ErrorReport, KvConfig};
use sdo::model::full_field;
use sdo::numerics::cycles::CycleConfig;
use sdo::numerics::ode::{Record, Solver};
use sdo::sphere::{build_het_curve, hopf_value, Side};
use sdo::verify::verify_geometry;
use sdo::{Error, Result};

#[derive(Parser)]
#[command(name = "sdo", version, about = "Substrate-depletion oscillator near its nonsmooth limit")]
struct Cli {
    /// Directory for CSV/JSON artefacts (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    #[value(name = "L", alias = "l")]
    L,
    #[value(name = "R", alias = "r")]
    R,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the full system from (x0, y0).
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
    },
    /// Equilibria, Hopf points and the cycle branch over an η-grid.
    Bifurcate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        eta_min: f64,
        #[arg(long)]
        eta_max: f64,
        #[arg(long)]
        n: usize,
        /// Skip the cycle search at each grid value.
        #[arg(long)]
        no_cycles: bool,
    },
    /// Heteroclinic values η_Het^{L,R}(μ₁) on an equispaced μ₁-grid.
    HetCurve {
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long)]
        mu1_max: f64,
        #[arg(long)]
        n: usize,
    },
    /// Closed-form against numeric Hopf value on one sphere.
    HopfCheck {
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long, value_enum)]
        side: SideArg,
        #[arg(long, default_value_t = 0.0)]
        mu1: f64,
    },
    /// Predicted against observed regime at the parameters of a params file.
    Classify {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        het: PathBuf,
    },
    /// Chart round trips, cocycle and pushforward residuals.
    BlowupVerify {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        push_samples: usize,
        #[arg(long, default_value_t = 1000)]
        roundtrip_samples: usize,
    },
    /// Limit cycles of the full system; repelling ones with --reverse-time.
    Cycle {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        reverse_time: bool,
    },
}

const PUSH_TOL: f64 = 1e-8;
const ROUND_TOL: f64 = 1e-12;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let p = dir.join(name);
    File::create(&p).map(BufWriter::new).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("write failed: {e}"))
}

fn emit_json<T: serde::Serialize>(dir: &Path, name: &str, v: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    write_json(&mut w, v).map_err(io_err)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err)
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_path();
    fs::create_dir_all(out).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    match cli.cmd {
        Cmd::Simulate { params, tmax, x0, y0 } => {
            let cfg = KvConfig::load(&params)?;
            let (p, sig) = (cfg.model()?, cfg.sigmoid()?);
            if !(tmax > 0.0) {
                return Err(Error::Config("--tmax must be positive".into()));
            }
            let f = full_field(&p, &sig);
            let tr = Solver::new(&f, cfg.integrator()?).record(Record::Steps).run([x0, y0], 0.0, tmax)?;
            let mut w = create(out, "trajectory.csv")?;
            write_trajectory_csv(&mut w, &tr.t, &tr.y).map_err(io_err)?;
            w.flush().map_err(io_err)?;
            // time spent in the layer |x − 1| < 0.05
            let near: f64 = tr
                .t
                .windows(2)
                .zip(&tr.y)
                .filter(|(_, s)| (s[0] - 1.0).abs() < 0.05)
                .map(|(w, _)| w[1] - w[0])
                .sum();
            let (t_end, y_end) = tr.end();
            emit_json(
                out,
                "simulate.json",
                &json!({
                    "params": { "alpha": p.alpha, "beta": p.beta, "eta": p.eta, "mu": p.mu, "eps": p.eps },
                    "t_end": t_end,
                    "final_state": y_end,
                    "steps": tr.steps,
                    "stiff_steps": tr.stiff_steps,
                    "fraction_near_x1": near / t_end,
                }),
            )
        }
        Cmd::Bifurcate { params, eta_min, eta_max, n, no_cycles } => {
            let cfg = KvConfig::load(&params)?;
            let (p, sig) = (cfg.model()?, cfg.sigmoid()?);
            if !(eta_min < eta_max) {
                return Err(Error::Config("need --eta-min < --eta-max".into()));
            }
            let d = sweep_eta(&p, &sig, (eta_min, eta_max), n, !no_cycles)?;
            let mut w = create(out, "bifurcation.csv")?;
            d.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
            emit_json(out, "hopf.json", &json!({ "hopf_points": d.hopf_points, "warnings": d.warnings }))
        }
        Cmd::HetCurve { gamma, mu1_max, n } => {
            let cfg = KvConfig::load(&gamma)?;
            let g = cfg.gamma()?;
            let h = build_het_curve(&g, mu1_max, n, &cfg.shoot()?)?;
            let mut w = create(out, "het_curve.csv")?;
            write_het_csv(&mut w, &h).and_then(|_| w.flush()).map_err(io_err)?;
            emit_json(
                out,
                "het_curve.json",
                &json!({
                    "gamma": g,
                    "eta_het0_L": h.eta_het0_l,
                    "eta_het0_R": h.eta_het0_r,
                    "slope_L": h.slope_l,
                    "slope_R": h.slope_r,
                    "mu1_star": h.mu1_star,
                }),
            )
        }
        Cmd::HopfCheck { gamma, side, mu1 } => {
            let g = KvConfig::load(&gamma)?.gamma()?;
            let side = match side {
                SideArg::L => Side::L,
                SideArg::R => Side::R,
            };
            let h = hopf_value(side, mu1, &g)?;
            emit_json(out, "hopf_check.json", &json!({ "result": h, "abs_diff": (h.eta_h - h.eta_h_numeric).abs() }))
        }
        Cmd::Classify { params, het } => {
            let cfg = KvConfig::load(&params)?;
            let (p, sig, g) = (cfg.model()?, cfg.sigmoid()?, cfg.gamma()?);
            let file = File::open(&het).map_err(|e| Error::Config(format!("{}: {e}", het.display())))?;
            let curve = read_het_csv(BufReader::new(file))?;
            let sp = unscale_params(p.eps, p.mu, p.eta, g.k)?;
            let v = classify_regime(p.eps, sp.mu1, sp.eta1, &sig, &g, &curve, &ClassifyConfig::default())?;
            emit_json(out, "classify.json", &v)
        }
        Cmd::BlowupVerify { k, seed, push_samples, roundtrip_samples } => {
            let r = verify_geometry(k, push_samples, roundtrip_samples, seed)?;
            let mut w = create(out, "blowup_verify.csv")?;
            let table = (|| -> std::io::Result<()> {
                writeln!(w, "chart,pushforward_max,roundtrip_max,change_max")?;
                for c in &r.charts {
                    writeln!(w, "{},{:.16e},{:.16e},{:.16e}", c.chart, c.pushforward_max, c.roundtrip_max, c.change_max)?;
                }
                w.flush()
            })();
            table.map_err(io_err)?;
            emit_json(out, "blowup_verify.json", &r)?;
            let worst = [r.pushforward_max() / PUSH_TOL, r.roundtrip_max() / ROUND_TOL, r.change_max() / ROUND_TOL, r.cocycle_max / ROUND_TOL];
            if worst.iter().any(|v| !(*v < 1.0)) {
                return Err(Error::NoConvergence(format!(
                    "geometry residuals above tolerance: pushforward {:e}, round trip {:e}, change {:e}, cocycle {:e}",
                    r.pushforward_max(),
                    r.roundtrip_max(),
                    r.change_max(),
                    r.cocycle_max
                )));
            }
            Ok(())
        }
        Cmd::Cycle { params, reverse_time } => {
            let cfg = KvConfig::load(&params)?;
            let (p, sig) = (cfg.model()?, cfg.sigmoid()?);
            let cc = CycleConfig { integrator: cfg.integrator()?, ..CycleConfig::default() };
            let census = cycle_census(&p, &sig, reverse_time, &cc)?;
            for (tag, list) in [("attracting", &census.attracting), ("repelling", &census.repelling)] {
                for (i, c) in list.iter().enumerate() {
                    let mut w = create(out, &format!("cycle_{tag}_{i}.csv"))?;
                    c.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
                }
            }
            emit_json(out, "cycles.json", &census)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let r = ErrorReport::from_error(&e);
            eprintln!("{}", serde_json::to_string(&r).unwrap());
            ExitCode::from(r.exit_code as u8)
        }
    }
}
