use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levyprop_core::JacobianForm;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "levyprop",
    version,
    about = "Mean-field analysis of deep networks with heavy-tailed weights"
)]
pub struct Cli {
    /// Master seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Comma-separated output formats [default: csv,svg]
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,

    /// Re-run the command recorded in a manifest
    #[arg(long, global = true)]
    pub replay: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn defaults() -> Vec<Format> {
        vec![Format::Csv, Format::Svg]
    }
}

/// A list of values, given as `a,b,c` or as an inclusive range `start:stop:step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if !(step > 0.0) || b < a {
                    return Err("range needs start <= stop and a positive step".into());
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                if n > 1_000_000 {
                    return Err("range has too many points".into());
                }
                // round away accumulated binary noise
                (0..=n)
                    .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
                    .collect()
            }
            [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(format!("cannot parse grid {s:?}")),
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err("grid must hold finite values".into());
        }
        Ok(Grid(values))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// `D^l W^l`
    Dw,
    /// `W^(l+1) D^l`
    Wd,
}

impl From<Form> for JacobianForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Dw => JacobianForm::DW,
            Form::Wd => JacobianForm::WD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    /// One weight file of stable draws
    Matrix,
    /// A full network, one file per layer
    Network,
}

/// Weight scale given either directly or as `D_w^(1/alpha)`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Scale {
    /// Weight scale D_w
    #[arg(long, conflicts_with = "dw_root")]
    pub dw: Option<f64>,
    /// Weight scale as D_w^(1/alpha)
    #[arg(long)]
    pub dw_root: Option<f64>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Fit stable and Gaussian laws to a weight file
    Fit(FitArgs),
    /// Draw stable samples or a whole random network
    Sample(SampleArgs),
    /// Iterate the fluctuation map, optionally against simulation
    Meanfield(MeanfieldArgs),
    /// Tabulate the ordered transition over alpha
    TransitionLine(TransitionArgs),
    /// Theoretical and empirical Jacobian spectra
    Spectrum(SpectrumArgs),
    /// Jacobian-average ratios over (alpha, D_w^(1/alpha))
    PhaseDiagram(PhaseArgs),
    /// Propagate a great circle; PCA and pairwise-distance cv
    Manifold(ManifoldArgs),
    /// Fractal dimensions of Jacobian eigenvectors
    Fractal(FractalArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Little-endian f32 weight file with a JSON shape sidecar
    pub weights: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value = "matrix")]
    pub kind: SampleKind,
    #[arg(long)]
    pub alpha: f64,
    /// Skewness (matrix only)
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Scale (matrix only)
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Location (matrix only)
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long, default_value_t = 1000)]
    pub cols: usize,
    /// Weight scale (network only)
    #[arg(long, default_value_t = 1.0)]
    pub dw: f64,
    /// Bias scale (network only)
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub scale: Scale,
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
    /// Input level q^0
    #[arg(long, default_value_t = 1.0)]
    pub q0: f64,
    /// Layers of the trajectory
    #[arg(long, default_value_t = 20)]
    pub layers: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Compare against finite networks
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = 1000)]
    pub width: usize,
    #[arg(long, default_value_t = 1)]
    pub realizations: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TransitionArgs {
    #[arg(long, default_value = "1.0:2.0:0.05")]
    pub alphas: Grid,
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub scale: Scale,
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
    #[arg(long, default_value_t = 1000)]
    pub width: usize,
    #[arg(long, default_value_t = 10)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub layer: usize,
    #[arg(long, value_enum, default_value = "wd")]
    pub form: Form,
    #[arg(long, default_value_t = 100_000)]
    pub n_mc: usize,
    #[arg(long, default_value_t = 200)]
    pub radii: usize,
    #[arg(long, default_value_t = 0.01)]
    pub r_min: f64,
    /// Bins of the radial histogram
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PhaseArgs {
    #[arg(long, default_value = "1.0:2.0:0.05")]
    pub alphas: Grid,
    /// Weight axis in D_w^(1/alpha)
    #[arg(long, default_value = "0.25:3.0:0.05")]
    pub dw_roots: Grid,
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
    #[arg(long, default_value_t = 6)]
    pub l_max: u32,
    /// Odd exponents of the shifted-power contours
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,11,21,31,41,51,61,71,81,91,101"
    )]
    pub contours: Vec<u32>,
    #[arg(long, default_value_t = 20_000)]
    pub n_mc: usize,
    #[arg(long, default_value_t = 200)]
    pub radii: usize,
    #[arg(long, default_value_t = 0.01)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ManifoldArgs {
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    #[command(flatten)]
    pub scale: Scale,
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub q0: f64,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
    /// Ensemble cv over a grid instead of a single network
    #[arg(long)]
    pub map: bool,
    #[arg(long, default_value = "1.0:2.0:0.1")]
    pub alphas: Grid,
    #[arg(long, default_value = "0.25:3.0:0.25")]
    pub dw_roots: Grid,
    #[arg(long, default_value_t = 100)]
    pub ensembles: usize,
    /// Layers reported by the cv map
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    pub layers: Vec<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FractalArgs {
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub scale: Scale,
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
    #[arg(long, default_value_t = 1)]
    pub layer: usize,
    #[arg(long, value_enum, default_value = "wd")]
    pub form: Form,
    #[arg(long, default_value = "0.5,1.5,2,2.5,3,3.5,4")]
    pub q_grid: Grid,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048,4096")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub realizations: usize,
    /// Pool only eigenvalues with lo <= |lambda| <= hi, given as lo,hi
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub annulus: Option<Vec<f64>>,
}
