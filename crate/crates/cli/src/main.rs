use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use macrocoh::bosonic::{standard_state, FockSpace, StateRecipe, DEFAULT_FOCK_DIM};
use macrocoh::channels::{fuzz_monotonicity, Monotone};
use macrocoh::dynamics::{evolve, nh_generator, phase_space_generator, purity_rate};
use macrocoh::error::{Error, Result};
use macrocoh::experiments::{copy_equivalence, scaling_table};
use macrocoh::io::MatrixJson;
use macrocoh::macroscopicity::{
    m4_ordering_check, nf_quadratures, nf_qubits, nlj_closed_form, nlj_integral, nlj_tilde, NljGrid, SearchConfig,
};
use macrocoh::measures::{evaluate, EvalOptions, MeasureId};
use macrocoh::modes::{delta_coherence_profile, gap_set};

mod inputs;
mod output;

use output::{num, Report};

#[derive(Parser)]
#[command(name = "macrocoh", version = concat!(env!("CARGO_PKG_VERSION"), " (output schema 1)"))]
#[command(about = "Macroscopic coherence measures on finite-dimensional quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write CSV to this path (`-` for stdout) instead of JSON to stdout.
    #[arg(short = 'o', long = "output", global = true, value_name = "PATH")]
    output: Option<String>,
}

#[derive(Args)]
struct StateArgs {
    /// State file (JSON matrix or vector) or a built-in such as `ghz:3`, `mixed:4`, `cat:1.5`.
    #[arg(long)]
    state: String,

    /// Fock truncation per mode for bosonic states and observables.
    #[arg(long, default_value_t = DEFAULT_FOCK_DIM)]
    fock_dim: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one coherence measure.
    Measure {
        #[command(flatten)]
        state: StateArgs,
        /// variance, qfi, qfi_bures, skew, il, rel_ent or roof.
        #[arg(long)]
        which: String,
        /// Observable file or built-in (`z`, `x`, `p`, `n`, `diag:…`).
        #[arg(long, default_value = "z")]
        observable: String,
        /// Convex-roof decompositions.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Phase step of the fidelity-based QFI.
        #[arg(long, default_value_t = 1e-4)]
        dx: f64,
    },
    /// Gap set and δ-coherence trace norms.
    Modes {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value = "z")]
        observable: String,
        /// Gap grouping tolerance (default: 1e-9 times the spectral range).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Effective size from the QFI over local observables.
    Nf {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, value_enum, default_value_t = Family::Qubits)]
        family: Family,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        max_sweeps: usize,
    },
    /// Phase-space size: closed form, refined optimum and (optionally) the integral.
    Nlj {
        #[command(flatten)]
        state: StateArgs,
        /// Also evaluate the characteristic-function integral.
        #[arg(long)]
        integral: bool,
        #[arg(long, default_value_t = 7.0)]
        radius: f64,
        #[arg(long, default_value_t = 80)]
        points: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Build a standard single-mode state as a JSON vector file.
    State {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Photon number for `number`.
        #[arg(long, default_value_t = 0)]
        n: usize,
        /// Displacement `re[,im]`.
        #[arg(long, default_value = "0")]
        alpha: String,
        /// Squeezing `re[,im]`.
        #[arg(long, default_value = "0")]
        xi: String,
        #[arg(long, default_value_t = DEFAULT_FOCK_DIM)]
        fock_dim: usize,
        /// Emit the density matrix instead of the amplitudes.
        #[arg(long)]
        density: bool,
    },
    /// Integrate the double-commutator decoherence model.
    Evolve {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, value_enum)]
        model: Model,
        /// Position coefficient (required for `nh`).
        #[arg(long)]
        cx: Option<f64>,
        /// Momentum coefficient (required for `nh`).
        #[arg(long)]
        cp: Option<f64>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        steps: usize,
        /// Report every k-th step.
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Fuzz a monotone against random free channels.
    FuzzMonotone {
        /// A measure name or `delta:<gap>`.
        #[arg(long)]
        measure: String,
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value_t = 500)]
        channels: usize,
    },
    /// Exact QFI and I_L of ρ_N next to their closed forms.
    Scaling {
        /// Even qubit counts, comma separated.
        #[arg(long = "N", value_parser = inputs::even_list)]
        n: std::vec::Vec<usize>,
    },
    /// Compare δ-coherence profiles of ψ^{⊗n} and φ^{⊗m}.
    Copies {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        phi: String,
        /// Single-copy observable (`z` means σ^z).
        #[arg(long, default_value = "z")]
        observable: String,
        #[arg(long)]
        n: usize,
    },
    /// Order a measure on two equal-weight superpositions of eigenvectors.
    M4check {
        /// variance, qfi, skew, il, rel_ent, …
        #[arg(long)]
        measure: String,
        /// Observable file or `diag:v0,v1,…`.
        #[arg(long)]
        observable: String,
        /// Eigenvector indices `i,j` of the wider pair.
        #[arg(long, value_parser = inputs::pair)]
        wide: (usize, usize),
        /// Eigenvector indices `k,l` of the narrower pair.
        #[arg(long, value_parser = inputs::pair)]
        narrow: (usize, usize),
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Qubits,
    Quadratures,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Number,
    Coherent,
    Cat,
    Squeezed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    T4a,
    Nh,
}

fn parse_complex(s: &str) -> Result<num_complex::Complex64> {
    match inputs::recipe(&format!("coherent:{s}"))? {
        Some(StateRecipe::Coherent { alpha }) => Ok(alpha),
        _ => Err(Error::Parse(format!("`{s}` is not `re[,im]`"))),
    }
}

#[derive(Serialize)]
struct GapNorm {
    delta: f64,
    norm: f64,
}

#[derive(Serialize)]
struct EvolveRow {
    time: f64,
    purity: f64,
    nlj: f64,
}

fn run(cli: &Cli) -> Result<Report> {
    let seed = cli.seed;
    Ok(match &cli.command {
        Command::Measure { state, which, observable, samples, dx } => {
            let id: MeasureId = which.parse()?;
            let rho = inputs::state(&state.state, state.fock_dim)?;
            let a = inputs::observable(observable, rho.dim(), state.fock_dim)?;
            let report = evaluate(id, &rho, &a, &EvalOptions { samples: *samples, seed, dx: *dx })?;
            let row = vec![id.name().to_string(), num(report.value)];
            Report::new("measure", report).table(vec!["measure", "value"], vec![row])
        }
        Command::Modes { state, observable, tolerance } => {
            let rho = inputs::state(&state.state, state.fock_dim)?;
            let a = inputs::observable(observable, rho.dim(), state.fock_dim)?;
            let gaps = gap_set(&a, *tolerance)?;
            let profile: Vec<GapNorm> = delta_coherence_profile(&rho, &a, &gaps)?
                .into_iter()
                .map(|(delta, norm)| GapNorm { delta, norm })
                .collect();
            let rows = profile.iter().map(|g| vec![num(g.delta), num(g.norm)]).collect();
            Report::new("modes", json!({ "tolerance": gaps.tolerance(), "modes": profile }))
                .table(vec!["delta", "norm"], rows)
        }
        Command::Nf { state, family, restarts, max_sweeps } => {
            let rho = inputs::state(&state.state, state.fock_dim)?;
            let cfg = SearchConfig { restarts: *restarts, max_sweeps: *max_sweeps, seed, ..SearchConfig::default() };
            let (value, body) = match family {
                Family::Qubits => {
                    let opt = nf_qubits(&rho, &cfg)?;
                    (opt.value, serde_json::to_value(opt).expect("serializable"))
                }
                Family::Quadratures => {
                    let fock = inputs::fock_for(rho.dim(), state.fock_dim)?;
                    let opt = nf_quadratures(&rho, &fock, &cfg)?;
                    (opt.value, serde_json::to_value(opt).expect("serializable"))
                }
            };
            Report::new("nf", body).table(vec!["nf"], vec![vec![num(value)]])
        }
        Command::Nlj { state, integral, radius, points, restarts } => {
            let rho = inputs::state(&state.state, state.fock_dim)?;
            let fock = inputs::fock_for(rho.dim(), state.fock_dim)?;
            let closed = nlj_closed_form(&rho, &fock)?;
            let cfg = SearchConfig { restarts: *restarts, seed, ..SearchConfig::default() };
            let tilde = nlj_tilde(&rho, &fock, &cfg)?;
            let integral = if *integral {
                let grid = NljGrid { radius: *radius, points_per_axis: *points, ..NljGrid::default() };
                Some(nlj_integral(&rho, &fock, &grid)?)
            } else {
                None
            };
            let row = vec![num(closed), num(tilde.value), integral.map_or(String::new(), |i| num(i.value))];
            Report::new("nlj", json!({ "closed_form": closed, "tilde": tilde, "integral": integral }))
                .table(vec!["closed_form", "tilde", "integral"], vec![row])
        }
        Command::State { kind, n, alpha, xi, fock_dim, density } => {
            let alpha = parse_complex(alpha)?;
            let recipe = match kind {
                Kind::Number => StateRecipe::Number { n: *n },
                Kind::Coherent => StateRecipe::Coherent { alpha },
                Kind::Cat => StateRecipe::Cat { alpha },
                Kind::Squeezed => StateRecipe::Squeezed { xi: parse_complex(xi)?, alpha },
            };
            let psi = standard_state(&recipe, &FockSpace::single_mode(*fock_dim)?)?;
            let file = if *density {
                MatrixJson::from_matrix(&psi.projector())
            } else {
                MatrixJson::from_vector(psi.amplitudes())
            };
            let rows =
                psi.amplitudes().iter().enumerate().map(|(k, z)| vec![k.to_string(), num(z.re), num(z.im)]).collect();
            let mut report = Report::new("state", file).table(vec!["index", "re", "im"], rows);
            report.raw = true;
            report
        }
        Command::Evolve { state, model, cx, cp, t, steps, every } => {
            let rho = inputs::state(&state.state, state.fock_dim)?;
            let fock = FockSpace::single_mode(state.fock_dim)?;
            let generator = match model {
                Model::T4a => phase_space_generator(&fock)?,
                Model::Nh => {
                    let (Some(cx), Some(cp)) = (cx, cp) else {
                        return Err(Error::InvalidParameter("model `nh` needs both --cx and --cp".into()));
                    };
                    nh_generator(*cx, *cp, &fock)?
                }
            };
            let every = (*every).max(1);
            let trajectory = evolve(&rho, &generator, *t, *steps)?;
            let t4a = phase_space_generator(&fock)?;
            let rows: Vec<EvolveRow> = trajectory
                .iter()
                .enumerate()
                .filter(|(k, _)| k % every == 0 || *k == *steps)
                .map(|(_, p)| Ok(EvolveRow { time: p.time, purity: p.purity, nlj: purity_rate(&p.state, &t4a)? }))
                .collect::<Result<_>>()?;
            let table = rows.iter().map(|r| vec![num(r.time), num(r.purity), num(r.nlj)]).collect();
            Report::new("evolve", json!({ "trajectory": rows })).table(vec!["time", "purity", "nlj"], table)
        }
        Command::FuzzMonotone { measure, dim, channels } => {
            let monotone: Monotone = measure.parse()?;
            let summary = fuzz_monotonicity(monotone, *dim, *channels, seed)?;
            let row = vec![
                measure.clone(),
                summary.channels.to_string(),
                summary.m2a_failures.to_string(),
                summary.m2b_failures.to_string(),
                num(summary.worst_m2a_excess),
                num(summary.worst_m2b_excess),
                summary.worst_case.to_string(),
            ];
            Report::new("fuzz-monotone", summary).table(
                vec![
                    "measure",
                    "channels",
                    "m2a_failures",
                    "m2b_failures",
                    "worst_m2a_excess",
                    "worst_m2b_excess",
                    "worst_case",
                ],
                vec![row],
            )
        }
        Command::Scaling { n } => {
            let rows = scaling_table(n)?;
            let table = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.qfi_value),
                        num(r.qfi_formula),
                        num(r.il_value),
                        num(r.il_formula),
                        num(r.ratio),
                    ]
                })
                .collect();
            Report::new("scaling", json!({ "rows": rows }))
                .table(vec!["N", "qfi", "qfi_formula", "il", "il_formula", "ratio"], table)
        }
        Command::Copies { psi, phi, observable, n } => {
            let psi = inputs::pure_state(psi, DEFAULT_FOCK_DIM)?;
            let phi = inputs::pure_state(phi, DEFAULT_FOCK_DIM)?;
            let a = if observable == "z" {
                macrocoh::state::HermitianObservable::pauli_z()
            } else {
                inputs::observable(observable, psi.dim(), psi.dim())?
            };
            let profile = copy_equivalence(&psi, &a, &phi, *n)?;
            let rows = (0..profile.delta_grid.len())
                .map(|k| vec![num(profile.delta_grid[k]), num(profile.psi_norms[k]), num(profile.phi_norms[k])])
                .collect();
            Report::new("copies", profile).table(vec!["delta", "psi_norm", "phi_norm"], rows)
        }
        Command::M4check { measure, observable, wide, narrow } => {
            let id: MeasureId = measure.parse()?;
            let a = inputs::standalone_observable(observable)?;
            let verdict = m4_ordering_check(id, &a, *wide, *narrow)?;
            let row = vec![
                id.name().to_string(),
                num(verdict.value_wide),
                num(verdict.value_narrow),
                serde_json::to_value(verdict.ordering).expect("serializable").as_str().unwrap_or_default().to_string(),
            ];
            Report::new("m4check", verdict).table(vec!["measure", "value_wide", "value_narrow", "ordering"], vec![row])
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => match report.emit(cli.output.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
