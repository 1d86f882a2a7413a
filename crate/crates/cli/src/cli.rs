//! Command-line front end.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use acouforge_core::coding::{
    decode_simulated, encode, format_bits, BandPlan, EncodeConfig, Probe, TagPayload,
};
use acouforge_core::design::{from_document, to_document, voxelize, DesignError, VoxelGrid};
use acouforge_core::mesh::{parse_off, plan, plan_csv, realize, write_off, PlanOptions, Surface};
use acouforge_core::modal::{EnvelopeSpline, Impact, Material};
use acouforge_core::optimize::{optimize, SearchConfig, TargetSpec};
use acouforge_core::{FilterDesign, FrequencyGrid, Primitive, Spacing};
use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::api::{router, AppState};
use crate::ops::{self, ModelRequest, SpectrumRequest, StlRequest, SynthRequest};
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(
    name = "acouforge",
    version,
    about = "Acoustic filter design, tagging and modal sound tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 100.0)]
    pub fmin: f64,
    #[arg(long, default_value_t = 4000.0)]
    pub fmax: f64,
    /// Number of grid frequencies.
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// Logarithmic instead of linear spacing.
    #[arg(long)]
    pub log: bool,
}

impl GridArgs {
    fn grid(&self) -> anyhow::Result<FrequencyGrid> {
        let spacing = if self.log {
            Spacing::Logarithmic
        } else {
            Spacing::Linear
        };
        Ok(FrequencyGrid::new(self.fmin, self.fmax, self.n, spacing)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmission-loss spectrum of a design as CSV.
    Spectrum {
        design: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Include thermo-viscous wall losses.
        #[arg(long)]
        losses: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Open-outlet resonances of a design as CSV.
    Resonances {
        design: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Searches for a design meeting a target.
    Optimize {
        design: PathBuf,
        /// Target document (pitch, notch or curve).
        #[arg(long, conflicts_with = "notes", required_unless_present = "notes")]
        target: Option<PathBuf>,
        /// Pitch targets as comma-separated MIDI notes.
        #[arg(long, value_delimiter = ',')]
        notes: Vec<i64>,
        /// Pitch tolerance in cents for --notes.
        #[arg(long, default_value_t = 10.0)]
        tolerance: f64,
        /// Search configuration document.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write objective, residuals and trace.
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Builds a tag design carrying a bit string.
    Encode {
        #[arg(long)]
        bits: String,
        #[arg(long, default_value_t = acouforge_core::coding::DEFAULT_THRESHOLD_DB)]
        threshold: f64,
        /// First band [Hz]; default depends on the bit count.
        #[arg(long)]
        base: Option<f64>,
        /// Band spacing [Hz].
        #[arg(long)]
        step: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decodes a tag through a simulated probe recording.
    DecodeSim {
        tag: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add white noise at this SNR [dB].
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        duration: f64,
    },
    /// Impact sound of a voxel grid (or a design voxelized at --cell) as WAV.
    Synth {
        input: PathBuf,
        /// Cell size used when the input is a design.
        #[arg(long)]
        cell: Option<f64>,
        #[arg(long)]
        youngs: f64,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        node: usize,
        /// Impulse [N·s].
        #[arg(long, default_value_t = 1e-3)]
        impulse: f64,
        #[arg(long, default_value_t = 1.0)]
        distance: f64,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = acouforge_core::io::DEFAULT_SAMPLE_RATE)]
        rate: u32,
        #[arg(long)]
        max_modes: Option<usize>,
        /// Envelope spline document.
        #[arg(long)]
        envelope: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Per-frequency element budgets and the speedup over a uniform mesh.
    PlanMesh {
        /// OFF surface; its area sets the budgets.
        #[arg(long, required_unless_present = "area", conflicts_with = "area")]
        mesh: Option<PathBuf>,
        /// Bare surface area [m²].
        #[arg(long)]
        area: Option<f64>,
        /// Explicit frequencies; otherwise --count log-spaced in [--fmin, --fmax].
        #[arg(long, value_delimiter = ',')]
        freqs: Vec<f64>,
        #[arg(long, default_value_t = 100.0)]
        fmin: f64,
        #[arg(long, default_value_t = 4000.0)]
        fmax: f64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = acouforge_core::mesh::DEFAULT_ELEMENTS_PER_WAVELENGTH)]
        elements_per_wavelength: f64,
        #[arg(long, default_value_t = acouforge_core::mesh::DEFAULT_COST_EXPONENT)]
        exponent: f64,
        /// Write one decimated OFF per frequency into this directory.
        #[arg(long, requires = "mesh")]
        realize: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Printable shell of a design as binary STL.
    ExportStl {
        design: PathBuf,
        #[arg(long, default_value_t = StlRequest::default().cell_size_m)]
        cell: f64,
        #[arg(long, default_value_t = StlRequest::default().wall_thickness_m)]
        wall: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Runs the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "ACOUFORGE_STORE", default_value = "acouforge-store")]
        store: PathBuf,
    },
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_doc<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    from_document(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn read_design(path: &Path) -> anyhow::Result<FilterDesign> {
    let d: FilterDesign = read_doc(path)?;
    let v = d.validate();
    if !v.is_empty() {
        bail!("{}: {}", path.display(), DesignError::ValidationFailed(v));
    }
    Ok(d)
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{} is not a file path", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match output {
        Some(p) => write_atomic(p, bytes),
        None => Ok(std::io::stdout().lock().write_all(bytes)?),
    }
}

/// Seed-determined part of an optimization result.
#[derive(Serialize)]
struct ResultSummary<'a> {
    objective_value: f64,
    residuals: &'a [Option<f64>],
    trace: &'a [f64],
    evaluations: usize,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Spectrum {
            design,
            grid,
            losses,
            output,
        } => {
            let d = read_design(&design)?;
            let csv = ops::spectrum(
                &d,
                &SpectrumRequest {
                    grid: grid.grid()?,
                    losses,
                },
            )?;
            emit(output.as_deref(), csv.as_bytes())
        }
        Command::Resonances {
            design,
            grid,
            output,
        } => {
            let csv = ops::resonances(&read_design(&design)?, &grid.grid()?)?;
            emit(output.as_deref(), csv.as_bytes())
        }
        Command::Optimize {
            design,
            target,
            notes,
            tolerance,
            config,
            seed,
            iterations,
            output,
            result,
        } => {
            let d = read_design(&design)?;
            let target: TargetSpec = match target {
                Some(p) => read_doc(&p)?,
                None => TargetSpec::pitches(&notes, tolerance),
            };
            let mut cfg: SearchConfig = match config {
                Some(p) => read_doc(&p)?,
                None => SearchConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = iterations {
                cfg.max_iterations = n;
            }
            let r = optimize(&d, &target, &cfg, &mut |_| {})?;
            log::info!("{} evaluations in {:.2} s", r.evaluations, r.wall_time_s);
            write_atomic(&output, to_document(&r.design).as_bytes())?;
            if let Some(p) = result {
                let summary = ResultSummary {
                    objective_value: r.objective_value,
                    residuals: &r.residuals,
                    trace: &r.trace,
                    evaluations: r.evaluations,
                };
                write_atomic(&p, to_document(&summary).as_bytes())?;
            }
            println!("objective {}", r.objective_value);
            for (i, res) in r.residuals.iter().enumerate() {
                match res {
                    Some(x) => println!("target {i}: {x}"),
                    None => println!("target {i}: unmatched"),
                }
            }
            Ok(())
        }
        Command::Encode {
            bits,
            threshold,
            base,
            step,
            output,
        } => {
            let bits = TagPayload::parse_bits(&bits)?;
            let default = BandPlan::default_for(bits.len());
            let band_plan = BandPlan {
                base_hz: base.unwrap_or(default.base_hz),
                step_hz: step.unwrap_or(default.step_hz),
            };
            let payload = TagPayload {
                bits,
                band_plan,
                threshold_db: threshold,
            };
            let d = encode(&payload, &EncodeConfig::default())?;
            emit(output.as_deref(), to_document(&d).as_bytes())
        }
        Command::DecodeSim {
            tag,
            seed,
            snr,
            duration,
        } => {
            let d = read_design(&tag)?;
            let probe = Probe {
                duration_s: duration,
                seed,
                ..Probe::default()
            };
            println!("{}", format_bits(&decode_simulated(&d, &probe, snr)?));
            Ok(())
        }
        Command::Synth {
            input,
            cell,
            youngs,
            density,
            alpha,
            beta,
            node,
            impulse,
            distance,
            duration,
            rate,
            max_modes,
            envelope,
            output,
        } => {
            let text = read(&input)?;
            let voxels = match from_document::<VoxelGrid>(&text) {
                Ok(g) => g,
                Err(grid_err) => {
                    let d: FilterDesign = from_document(&text).map_err(|_| {
                        anyhow!(
                            "{}: not a voxel grid ({grid_err}) or a design",
                            input.display()
                        )
                    })?;
                    let r_min = d
                        .chain
                        .iter()
                        .chain(&d.branches)
                        .map(Primitive::radius)
                        .fold(f64::INFINITY, f64::min);
                    voxelize(&d, cell.unwrap_or(r_min / 4.0))?
                }
            };
            let material = Material::new(youngs, density).with_damping(alpha, beta);
            let model = ops::build_model(&ModelRequest {
                voxels,
                material,
                max_modes,
            })?;
            let envelope: Option<EnvelopeSpline> = envelope.map(|p| read_doc(&p)).transpose()?;
            let req = SynthRequest {
                material: None,
                impact: Impact {
                    node,
                    impulse_n_s: impulse,
                },
                listener_distance_m: distance,
                duration_s: duration,
                sample_rate_hz: rate,
                envelope,
            };
            let out = ops::synth(&model, &req)?;
            if out.silent {
                eprintln!("warning: every mode was dropped; wrote silence");
            }
            log::info!(
                "{} modes, normalization gain {}",
                model.mode_count(),
                out.gain
            );
            write_atomic(&output, &out.wav)
        }
        Command::PlanMesh {
            mesh,
            area,
            freqs,
            fmin,
            fmax,
            count,
            elements_per_wavelength,
            exponent,
            realize: realize_dir,
            output,
        } => {
            let freqs = if freqs.is_empty() {
                FrequencyGrid::logarithmic(fmin, fmax, count)?.values()
            } else {
                freqs
            };
            let opts = PlanOptions {
                elements_per_wavelength,
                cost_exponent: exponent,
                ..PlanOptions::default()
            };
            let surface_mesh = mesh
                .as_deref()
                .map(|p| parse_off(&read(p)?).map_err(|e| anyhow!("{}: {e}", p.display())))
                .transpose()?;
            let surface = match (&surface_mesh, area) {
                (Some(m), _) => Surface::Mesh(m),
                (None, Some(a)) => Surface::Area(a),
                (None, None) => bail!("either --mesh or --area is required"),
            };
            let p = plan(&freqs, surface, &opts)?;
            eprintln!("speedup {}", p.speedup);
            if let (Some(dir), Some(m)) = (realize_dir, &surface_mesh) {
                fs::create_dir_all(&dir)
                    .with_context(|| format!("cannot create {}", dir.display()))?;
                for (e, dec) in p.entries.iter().zip(realize(m, &p)?) {
                    write_atomic(
                        &dir.join(format!("{}hz.off", e.frequency_hz)),
                        write_off(&dec).as_bytes(),
                    )?;
                }
            }
            emit(output.as_deref(), plan_csv(&p).as_bytes())
        }
        Command::ExportStl {
            design,
            cell,
            wall,
            output,
        } => {
            let bytes = ops::stl(
                &read_design(&design)?,
                &StlRequest {
                    cell_size_m: cell,
                    wall_thickness_m: wall,
                },
            )?;
            write_atomic(&output, &bytes)
        }
        Command::Serve { port, host, store } => serve(&host, port, &store),
    }
}

fn serve(host: &str, port: u16, store_dir: &Path) -> anyhow::Result<()> {
    let store = Store::open(store_dir)?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("bad address {host}:{port}"))?;
    let app = router(AppState::new(store));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("cannot bind {addr}"))?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
