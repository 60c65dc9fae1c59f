//! `geostat generate|model|predict` over `x,y,z` CSV files.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use hpcready_core::{
    generate_synthetic, mle_fit_with, predict_with, Approximation, CovarianceParams64, GeoDataset64, MleOptions,
    ParamBounds, Point64, PredictionProblem64,
};
use serde_json::json;

use crate::exit::{CliError, CliResult};

#[derive(Debug, Subcommand)]
pub enum GeostatCommand {
    /// Synthesize a Gaussian random field at n Morton-ordered sites.
    Generate {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        theta: Theta,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate (σ², β, ν) by maximum likelihood; θ flags give the start point.
    Model {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        theta: Theta,
        #[command(flatten)]
        tiles: Tiles,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        #[arg(long, default_value_t = 500)]
        max_evals: usize,
    },
    /// Krige the field at query sites (CSV with x,y columns).
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[command(flatten)]
        theta: Theta,
        #[command(flatten)]
        tiles: Tiles,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Theta {
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
}

/// `--nb` switches from dense to tile low-rank.
#[derive(Debug, Args)]
pub struct Tiles {
    #[arg(long)]
    nb: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

impl Theta {
    fn params(&self) -> CliResult<CovarianceParams64> {
        CovarianceParams64::new(self.sigma2, self.beta, self.nu).map_err(CliError::invalid)
    }
}

impl Tiles {
    fn approximation(&self) -> Approximation {
        match self.nb {
            Some(nb) => Approximation::Tlr { nb, tol: self.tol },
            None => Approximation::Dense,
        }
    }
}

fn read_dataset(path: &Path) -> CliResult<GeoDataset64> {
    let file = fs::File::open(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    GeoDataset64::read_csv(file).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn read_query(path: &Path) -> CliResult<Vec<Point64>> {
    let bad = |e: &dyn std::fmt::Display| CliError::invalid(format!("{}: {e}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(&e))?;
    let headers = rdr.headers().map_err(|e| bad(&e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(&format!("missing column {name}")));
    let (xi, yi) = (col("x")?, col("y")?);
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(&e))?;
        let num = |i: usize| rec.get(i).unwrap_or_default().parse::<f64>().map_err(|e| bad(&e));
        points.push(Point64::new(num(xi)?, num(yi)?));
    }
    Ok(points)
}

fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => {
            Box::new(BufWriter::new(fs::File::create(p).map_err(|e| CliError::write(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn write_dataset(data: &GeoDataset64, out: Option<&Path>) -> CliResult {
    let mut w = sink(out)?;
    data.write_csv(&mut w).map_err(CliError::write)?;
    w.flush().map_err(CliError::write)
}

pub fn run(cmd: GeostatCommand) -> CliResult {
    match cmd {
        GeostatCommand::Generate { n, theta, seed, out } => {
            let data = generate_synthetic(n, &theta.params()?, seed).map_err(CliError::invalid)?;
            write_dataset(&data, out.as_deref())
        }
        GeostatCommand::Model { data, theta, tiles, max_iters, max_evals } => {
            let data = read_dataset(&data)?;
            let opts = MleOptions { max_iters, max_evals, approximation: tiles.approximation(), ..Default::default() };
            let fit =
                mle_fit_with(&data, &theta.params()?, &ParamBounds::default(), &opts).map_err(CliError::failed)?;
            let [s, b, nu] = fit.params.theta();
            let report = json!({
                "sigma2": s,
                "beta": b,
                "nu": nu,
                "log_likelihood": fit.log_likelihood,
                "iterations": fit.trace.len(),
                "evaluations": fit.evaluations,
                "converged": fit.converged,
                "warning": fit.warning,
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            Ok(())
        }
        GeostatCommand::Predict { data, query, theta, tiles, out } => {
            let observed = read_dataset(&data)?;
            let sites = read_query(&query)?;
            let problem = PredictionProblem64::new(observed, sites.clone());
            let z = predict_with(&problem, &theta.params()?, tiles.approximation()).map_err(CliError::failed)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            w.write_record(["x", "y", "z"]).map_err(CliError::write)?;
            for (p, v) in sites.iter().zip(&z) {
                w.write_record([p.x.to_string(), p.y.to_string(), v.to_string()]).map_err(CliError::write)?;
            }
            w.flush().map_err(CliError::write)
        }
    }
}
