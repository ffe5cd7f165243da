//! Argument definitions and subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netcover::model_export::{
    self, assignment_from_placement, build_multi_instance, build_seed_ilp, build_single_instance,
    default_psnlclp_balls, verify_solution, Assignment, ModelFormat, ModelInstance, MultiOptions,
};
use netcover::placement;
use netcover::{
    evaluate, seed_to_placement, solve_seed_ilp, standin, Ball, ExportError, IncompatibilityTable,
    Network, NetworkError, NetworkFormat, Norm, PlacementError, Problem, RunConfig, SeedError,
    SeedMode, SolverConfig, Strategy,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::output::{read_file, to_json, write_file, write_manifest, PlacementFile};
use crate::svg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Seed(#[from] SeedError),
}

impl CliError {
    /// 2 usage, 3 solver guard, 4 i/o, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Json { .. } => 4,
            CliError::Network(NetworkError::Io { .. } | NetworkError::Parse(_)) => 4,
            CliError::Network(_) => 1,
            CliError::Placement(PlacementError::Stalled { .. }) => 3,
            CliError::Placement(
                PlacementError::MissingP
                | PlacementError::MissingGamma
                | PlacementError::InvalidGamma(_),
            ) => 2,
            CliError::Placement(_) => 1,
            CliError::Export(
                ExportError::MissingGamma
                | ExportError::InvalidGamma(_)
                | ExportError::CostCount { .. },
            ) => 2,
            CliError::Export(ExportError::Parse { .. }) => 4,
            CliError::Export(_) => 1,
            CliError::Seed(SeedError::ZeroDevices) => 2,
            CliError::Seed(_) => 1,
        }
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "netcover",
    version,
    about = "Place leak-detection devices anywhere in the plane to cover pipeline networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Network JSON file.
    #[arg(long, global = true)]
    pub network: Option<PathBuf>,
    /// Radius of the disk the network is scaled into before solving.
    #[arg(long, global = true, default_value_t = 5.0)]
    pub scale_radius: f64,
    /// Use the network coordinates as given.
    #[arg(long, global = true)]
    pub no_scale: bool,
    /// Coverage norm.
    #[arg(long, global = true, value_enum, default_value_t = NormArg::L2)]
    pub norm: NormArg,
    /// Coverage radius R of every device.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub radius: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub rng_seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    L1,
    L2,
    Linf,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Norm {
        match n {
            NormArg::L1 => Norm::L1,
            NormArg::L2 => Norm::L2,
            NormArg::Linf => Norm::LInf,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemArg {
    Mnlclp,
    Psnlclp,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Problem {
        match p {
            ProblemArg::Mnlclp => Problem::Mnlclp,
            ProblemArg::Psnlclp => Problem::Psnlclp,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    Heuristic,
    SeedPolish,
    BaselineNodes,
    BaselineEdges,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Heuristic => Strategy::Heuristic,
            StrategyArg::SeedPolish => Strategy::SeedPolish,
            StrategyArg::BaselineNodes => Strategy::BaselineNodes,
            StrategyArg::BaselineEdges => Strategy::BaselineEdges,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum SeedModeArg {
    ExactBnb,
    Greedy,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Single,
    Multi,
    Seed,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum FormatArg {
    ConicText,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Write the network translated and scaled into the disk of radius --scale-radius.
    Scale,
    /// Write the incompatible edge pairs and triples for the coverage ball.
    Compat,
    /// Solve the edge-packing seed program and write clusters and the derived placement.
    Seed {
        #[arg(long)]
        p: usize,
        #[arg(long, value_enum, default_value_t = SeedModeArg::ExactBnb)]
        mode: SeedModeArg,
        /// Polish each seeded device by local search.
        #[arg(long)]
        polish: bool,
    },
    /// Place devices and write placement.json (and placement.svg with --svg).
    Solve {
        #[arg(long, value_enum)]
        problem: ProblemArg,
        /// Number of devices (mnlclp).
        #[arg(long)]
        p: Option<usize>,
        /// Fraction of weighted length to cover (psnlclp).
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value_t = StrategyArg::Heuristic)]
        strategy: StrategyArg,
        /// Candidate spacing along edges for the edge baseline (default R/4).
        #[arg(long)]
        edge_grid_step: Option<f64>,
        /// Random starts per single-device solve.
        #[arg(long, default_value_t = 200)]
        random_starts: usize,
        #[arg(long)]
        svg: bool,
    },
    /// Evaluate a placement file, or check an external model solution.
    Evaluate {
        #[arg(long, conflicts_with_all = ["model", "solution"])]
        placement: Option<PathBuf>,
        /// Model written by `export`.
        #[arg(long, requires = "solution")]
        model: Option<PathBuf>,
        /// JSON object mapping variable names to values.
        #[arg(long, requires = "model")]
        solution: Option<PathBuf>,
    },
    /// Write an exact model for an external solver.
    Export {
        #[arg(long, value_enum, default_value_t = ModelKind::Multi)]
        model: ModelKind,
        #[arg(long, value_enum, default_value_t = ProblemArg::Mnlclp)]
        problem: ProblemArg,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Comma-separated per-device set-up costs (psnlclp).
        #[arg(long, value_delimiter = ',')]
        costs: Option<Vec<f64>>,
        /// Add pair and triple conflict rows to the single model.
        #[arg(long)]
        helly: bool,
        /// Also write the model assignment of this placement file to solution.json.
        #[arg(long)]
        from_placement: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::ConicText)]
        format: FormatArg,
    },
    /// Compare the unrestricted heuristic with node- and edge-restricted baselines.
    ///
    /// Deviations are (unrestricted - restricted) / unrestricted in percent;
    /// positive means devices placed anywhere cover more. A cell whose
    /// unrestricted coverage is zero reports deviation 0.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "2,5,8")]
        p_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5")]
        radius_list: Vec<f64>,
        #[arg(long)]
        edge_grid_step: Option<f64>,
        #[arg(long, default_value_t = 200)]
        random_starts: usize,
    },
    /// Render a placement file as SVG.
    Plot {
        #[arg(long)]
        placement: PathBuf,
    },
    /// Write the synthetic stand-in networks.
    Generate {
        /// Stand-in name, or `all`.
        #[arg(long, default_value = "all")]
        name: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scale => "scale",
            Command::Compat => "compat",
            Command::Seed { .. } => "seed",
            Command::Solve { .. } => "solve",
            Command::Evaluate { .. } => "evaluate",
            Command::Export { .. } => "export",
            Command::Compare { .. } => "compare",
            Command::Plot { .. } => "plot",
            Command::Generate { .. } => "generate",
        }
    }
}

impl Global {
    fn ball(&self) -> Result<Ball, CliError> {
        self.ball_with(self.radius)
    }

    fn ball_with(&self, radius: f64) -> Result<Ball, CliError> {
        Ball::new(self.norm.into(), radius).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn network(&self) -> Result<Network, CliError> {
        let path = self
            .network
            .as_ref()
            .ok_or_else(|| CliError::Usage("--network is required".into()))?;
        let net = Network::load(path, NetworkFormat::Json)?;
        if self.no_scale {
            return Ok(net);
        }
        if !(self.scale_radius > 0.0) {
            return Err(CliError::Usage(format!(
                "--scale-radius must be positive, got {}",
                self.scale_radius
            )));
        }
        Ok(net.scale_to_disk(self.scale_radius)?)
    }

    fn instance_name(&self) -> String {
        self.network
            .as_ref()
            .and_then(|p| p.file_stem())
            .map_or_else(
                || "network".to_string(),
                |s| s.to_string_lossy().into_owned(),
            )
    }

    fn solver(&self, random_starts: usize) -> SolverConfig {
        SolverConfig {
            random_seeds: random_starts,
            rng_seed: self.rng_seed,
            ..SolverConfig::default()
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_file(path)?).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let g = &cli.global;
    let outputs = match &cli.command {
        Command::Scale => {
            let net = g.network()?;
            let path = g.out.join("scaled.json");
            write_file(&path, &(net.to_json() + "\n"))?;
            vec![path]
        }
        Command::Compat => {
            let net = g.network()?;
            let table = IncompatibilityTable::build(&net, &g.ball()?);
            let path = g.out.join("compat.json");
            write_file(&path, &(table.to_json(&net) + "\n"))?;
            println!(
                "{} incompatible pairs, {} incompatible triples",
                table.pairs.len(),
                table.triples.len()
            );
            vec![path]
        }
        Command::Seed { p, mode, polish } => {
            let net = g.network()?;
            let ball = g.ball()?;
            let table = IncompatibilityTable::build(&net, &ball);
            let mode = match mode {
                SeedModeArg::ExactBnb => SeedMode::ExactBnb,
                SeedModeArg::Greedy => SeedMode::Greedy,
            };
            let seed = solve_seed_ilp(&net, &ball, *p, &table, mode)?;
            let placement = seed_to_placement(&seed, &net, &ball, *polish);
            let report = evaluate(&net, &placement);
            #[derive(Serialize)]
            struct SeedOut<'a> {
                clusters: Vec<Vec<&'a str>>,
                positions: &'a [netcover::Point],
                ilp_value: f64,
                proven_optimal: bool,
            }
            let clusters = seed
                .clusters
                .iter()
                .map(|c| c.iter().map(|&e| net.edges()[e].id.as_str()).collect())
                .collect();
            let out = SeedOut {
                clusters,
                positions: &seed.positions,
                ilp_value: seed.ilp_value,
                proven_optimal: seed.proven_optimal,
            };
            let seed_path = g.out.join("seed.json");
            let placement_path = g.out.join("seed_placement.json");
            write_file(&seed_path, &to_json(&out))?;
            write_file(
                &placement_path,
                &to_json(&PlacementFile::new(&placement, Some(report.clone()))),
            )?;
            println!(
                "ilp value {:.6}, covered fraction {:.6}",
                seed.ilp_value, report.fraction
            );
            vec![seed_path, placement_path]
        }
        Command::Solve {
            problem,
            p,
            gamma,
            strategy,
            edge_grid_step,
            random_starts,
            svg: want_svg,
        } => {
            let problem: Problem = (*problem).into();
            match problem {
                Problem::Mnlclp if p.is_none() => {
                    return Err(CliError::Usage("--problem mnlclp requires --p".into()))
                }
                Problem::Psnlclp if gamma.is_none() => {
                    return Err(CliError::Usage("--problem psnlclp requires --gamma".into()))
                }
                _ => {}
            }
            let net = g.network()?;
            let cfg = RunConfig {
                problem,
                p: *p,
                gamma: *gamma,
                ball: g.ball()?,
                solver: g.solver(*random_starts),
                edge_grid_step: *edge_grid_step,
            };
            let (placement, report) = placement::solve(&net, &cfg, (*strategy).into())?;
            println!(
                "{} devices, covered fraction {:.6}",
                placement.len(),
                report.fraction
            );
            let path = g.out.join("placement.json");
            write_file(
                &path,
                &to_json(&PlacementFile::new(&placement, Some(report))),
            )?;
            let mut outputs = vec![path];
            if *want_svg {
                let svg_path = g.out.join("placement.svg");
                write_file(&svg_path, &svg::render(&net, &placement))?;
                outputs.push(svg_path);
            }
            outputs
        }
        Command::Evaluate {
            placement,
            model,
            solution,
        } => {
            let net = g.network()?;
            let path = g.out.join("evaluation.json");
            match (placement, model, solution) {
                (Some(file), None, None) => {
                    let placement = read_json::<PlacementFile>(file)?.placement()?;
                    let report = evaluate(&net, &placement);
                    println!("covered fraction {:.6}", report.fraction);
                    write_file(&path, &to_json(&report))?;
                }
                (None, Some(model), Some(solution)) => {
                    let model = model_export::parse(&read_file(model)?)?;
                    let assignment: Assignment = read_json(solution)?;
                    let check = verify_solution(&model, &net, &assignment)?;
                    println!(
                        "feasible {}, {} violations, objective {:.6}",
                        check.feasible,
                        check.violations.len(),
                        check.objective
                    );
                    write_file(&path, &to_json(&check))?;
                }
                _ => {
                    return Err(CliError::Usage(
                        "evaluate needs --placement, or --model with --solution".into(),
                    ))
                }
            }
            vec![path]
        }
        Command::Export {
            model,
            problem,
            p,
            gamma,
            costs,
            helly,
            from_placement,
            format: _,
        } => {
            let net = g.network()?;
            let ball = g.ball()?;
            let inst = ModelInstance::from_network(&g.instance_name(), &net);
            let built = match model {
                ModelKind::Single => {
                    let table = helly.then(|| IncompatibilityTable::build(&net, &ball));
                    build_single_instance(&inst, &ball, table.as_ref())?
                }
                ModelKind::Seed => {
                    let p = p.ok_or_else(|| CliError::Usage("--model seed requires --p".into()))?;
                    build_seed_ilp(&net, &IncompatibilityTable::build(&net, &ball), p)?
                }
                ModelKind::Multi => {
                    let problem: Problem = (*problem).into();
                    let balls = match (problem, p, gamma) {
                        (_, Some(p), _) => vec![ball; *p],
                        (Problem::Psnlclp, None, Some(gm)) => {
                            default_psnlclp_balls(&net, &ball, *gm)?
                        }
                        (Problem::Psnlclp, None, None) => {
                            return Err(CliError::Usage(
                                "--problem psnlclp requires --gamma".into(),
                            ))
                        }
                        (Problem::Mnlclp, None, _) => {
                            return Err(CliError::Usage("--problem mnlclp requires --p".into()))
                        }
                    };
                    let opts = MultiOptions {
                        gamma: *gamma,
                        costs: costs.clone(),
                    };
                    build_multi_instance(&inst, &balls, problem, &opts)?
                }
            };
            let path = g.out.join("model.cmodel");
            write_file(
                &path,
                &model_export::serialize(&built, ModelFormat::ConicText),
            )?;
            let mut outputs = vec![path];
            if let Some(file) = from_placement {
                let placement = read_json::<PlacementFile>(file)?.placement()?;
                let assignment = assignment_from_placement(&built, &net, &placement)?;
                let solution_path = g.out.join("solution.json");
                write_file(&solution_path, &to_json(&assignment))?;
                outputs.push(solution_path);
            }
            println!(
                "{} variables ({} binary), {} linear rows, {} cone rows",
                built.variables.len(),
                built.num_binaries(),
                built.linear.len(),
                built.soc.len()
            );
            outputs
        }
        Command::Compare {
            p_list,
            radius_list,
            edge_grid_step,
            random_starts,
        } => {
            let net = g.network()?;
            let rows = compare(
                &net,
                g,
                p_list,
                radius_list,
                *edge_grid_step,
                *random_starts,
            )?;
            let name = g.instance_name();
            let mut csv = String::from(
                "network,p,radius,unrestricted,edges,nodes,dev_edges_pct,dev_nodes_pct\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{name},{},{},{:.9},{:.9},{:.9},{:.6},{:.6}\n",
                    r.p,
                    r.radius,
                    r.unrestricted,
                    r.edges,
                    r.nodes,
                    r.dev_edges_pct,
                    r.dev_nodes_pct
                ));
            }
            let csv_path = g.out.join("compare.csv");
            let json_path = g.out.join("compare.json");
            write_file(&csv_path, &csv)?;
            write_file(&json_path, &to_json(&rows))?;
            print!("{csv}");
            vec![csv_path, json_path]
        }
        Command::Plot { placement } => {
            let net = g.network()?;
            let placement = read_json::<PlacementFile>(placement)?.placement()?;
            let path = g.out.join("plot.svg");
            write_file(&path, &svg::render(&net, &placement))?;
            vec![path]
        }
        Command::Generate { name } => {
            let specs: Vec<_> = if name == "all" {
                standin::STANDINS.to_vec()
            } else {
                vec![standin::spec(name)
                    .ok_or_else(|| CliError::Usage(format!("unknown stand-in {name}")))?]
            };
            let mut outputs = Vec::new();
            for s in specs {
                let path = g.out.join(format!("{}.json", s.name));
                write_file(&path, &(standin::generate(&s).to_json() + "\n"))?;
                outputs.push(path);
            }
            outputs
        }
    };
    let flags = serde_json::to_value(cli).expect("flags serialize");
    write_manifest(
        &g.out,
        cli.command.name(),
        flags,
        g.rng_seed,
        start.elapsed(),
        &outputs,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub p: usize,
    pub radius: f64,
    pub unrestricted: f64,
    pub edges: f64,
    pub nodes: f64,
    pub dev_edges_pct: f64,
    pub dev_nodes_pct: f64,
}

fn deviation_pct(unrestricted: f64, restricted: f64) -> f64 {
    if unrestricted > 0.0 {
        100.0 * (unrestricted - restricted) / unrestricted
    } else {
        0.0
    }
}

fn compare(
    net: &Network,
    g: &Global,
    p_list: &[usize],
    radius_list: &[f64],
    edge_grid_step: Option<f64>,
    random_starts: usize,
) -> Result<Vec<CompareRow>, CliError> {
    let cells: Vec<(usize, f64)> = p_list
        .iter()
        .flat_map(|&p| radius_list.iter().map(move |&r| (p, r)))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(p, radius)| {
            let cfg = RunConfig {
                problem: Problem::Mnlclp,
                p: Some(p),
                gamma: None,
                ball: g.ball_with(radius)?,
                solver: g.solver(random_starts),
                edge_grid_step,
            };
            let cover = |s: Strategy| {
                placement::solve(net, &cfg, s).map(|(_, r)| r.covered_weighted_length)
            };
            let unrestricted = cover(Strategy::Heuristic)?;
            let edges = cover(Strategy::BaselineEdges)?;
            let nodes = cover(Strategy::BaselineNodes)?;
            Ok(CompareRow {
                p,
                radius,
                unrestricted,
                edges,
                nodes,
                dev_edges_pct: deviation_pct(unrestricted, edges),
                dev_nodes_pct: deviation_pct(unrestricted, nodes),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    rows.sort_by(|a, b| a.p.cmp(&b.p).then(a.radius.total_cmp(&b.radius)));
    Ok(rows)
}
