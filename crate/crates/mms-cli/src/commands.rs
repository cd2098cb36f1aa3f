//! Command handlers: thin wrappers over the library that serialize
//! results, write outputs and drop a manifest next to every file output.

use std::path::{Path, PathBuf};

use serde::Serialize;

use mmspace::convergence::{self, ConvergeOptions, Family, SequenceSpec};
use mmspace::core::{
    complete_graph_space, random_graph_space, sphere_empirical, FiniteMetric, Space,
};
use mmspace::distances::{self, AlignBudget, AlignMode};
use mmspace::formats::{self, FileRepr};
use mmspace::invariants::{self, ObsDiamBudget, SearchMode, TargetSpace};
use mmspace::sampling::{self, MomentOptions};

use crate::manifest::RunManifest;
use crate::{
    AlignModeArg, Box1Args, CliError, CompareArgs, ConvergeArgs, FamilyArg, GenerateArgs, ModeArg,
    MomentsArgs, ObsDiamArgs, PdiamArgs, SampleArgs, SepArgs, SequenceArgs, DEFAULT_SEED,
};

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::internal)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(CliError::internal),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit<T: Serialize>(
    value: &T,
    out: Option<&Path>,
    command: &str,
    argv: &[String],
    seed: u64,
    inputs: &[PathBuf],
) -> Result<(), CliError> {
    write_json(value, out)?;
    if let Some(path) = out {
        RunManifest::new(command, argv, seed, inputs).write_next_to(path)?;
    }
    Ok(())
}

pub fn generate(args: GenerateArgs, argv: &[String]) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let space = match args.family {
        FamilyArg::Complete => {
            let n = args
                .n
                .ok_or_else(|| CliError::Usage("--n is required for --family complete".into()))?;
            complete_graph_space(n)?
        }
        FamilyArg::Sphere => {
            let dim = args
                .dim
                .ok_or_else(|| CliError::Usage("--dim is required for --family sphere".into()))?;
            sphere_empirical(dim, args.count, seed)?
        }
        FamilyArg::RandomGraph => {
            let n = args.n.ok_or_else(|| {
                CliError::Usage("--n is required for --family random-graph".into())
            })?;
            let p = args.p.ok_or_else(|| {
                CliError::Usage("--p is required for --family random-graph".into())
            })?;
            random_graph_space(n, p, seed)?
        }
    };
    let repr = FileRepr::from(&Space::Mm(space));
    formats::save(&args.out, &repr).map_err(|e| CliError::internal(e.to_string()))?;
    RunManifest::new("generate", argv, seed, &[]).write_next_to(&args.out)
}

#[derive(Serialize)]
struct SepOutput<'a> {
    invariant: &'a str,
    space: String,
    kappas: &'a [f64],
    mode: &'a str,
    delta: f64,
    witness: &'a invariants::SeparationWitness,
}

pub fn invariant_sep(args: SepArgs, argv: &[String]) -> Result<(), CliError> {
    let space = formats::load_space(&args.space)?;
    let mode = match args.mode {
        ModeArg::Exact => SearchMode::Exact,
        ModeArg::Heuristic => SearchMode::Heuristic,
    };
    let result = invariants::separation(&space, &args.kappas, mode)?;
    let output = SepOutput {
        invariant: "sep",
        space: args.space.display().to_string(),
        kappas: &args.kappas,
        mode: match args.mode {
            ModeArg::Exact => "exact",
            ModeArg::Heuristic => "heuristic",
        },
        delta: result.delta,
        witness: &result.witness,
    };
    emit(
        &output,
        args.out.as_deref(),
        "invariant sep",
        argv,
        DEFAULT_SEED,
        std::slice::from_ref(&args.space),
    )
}

#[derive(Serialize)]
struct ObsDiamOutput<'a> {
    invariant: &'a str,
    space: String,
    kappa: f64,
    seed: u64,
    budget: ObsDiamBudget,
    value: f64,
    witness: &'a invariants::LipschitzWitness,
}

pub fn invariant_obsdiam(args: ObsDiamArgs, argv: &[String]) -> Result<(), CliError> {
    let space = formats::load_space(&args.space)?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let mut inputs = vec![args.space.clone()];
    let target = if args.target == "interval" {
        TargetSpace::Interval
    } else {
        let path = PathBuf::from(&args.target);
        let target_space = formats::load_space(&path)?;
        inputs.push(path);
        let metric = match &target_space {
            Space::Mm(s) => FiniteMetric::new(s.dist_matrix())?,
            Space::Qmm(q) => FiniteMetric::new(q.lower_matrix())?,
        };
        TargetSpace::Finite { metric }
    };
    let budget = ObsDiamBudget {
        restarts: args.restarts,
        iterations: args.iterations,
    };
    let result = invariants::obs_diam(&space, &target, args.kappa, &budget, seed)?;
    let output = ObsDiamOutput {
        invariant: "obsdiam",
        space: args.space.display().to_string(),
        kappa: args.kappa,
        seed,
        budget,
        value: result.value,
        witness: &result.witness,
    };
    emit(
        &output,
        args.out.as_deref(),
        "invariant obsdiam",
        argv,
        seed,
        &inputs,
    )
}

#[derive(Serialize)]
struct PdiamOutput<'a> {
    invariant: &'a str,
    measure: String,
    kappa: f64,
    value: f64,
    exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

pub fn invariant_pdiam(args: PdiamArgs, argv: &[String]) -> Result<(), CliError> {
    let measure = formats::load_measure(&args.measure)?;
    let result = invariants::partial_diameter(&measure, args.kappa)?;
    let output = PdiamOutput {
        invariant: "pdiam",
        measure: args.measure.display().to_string(),
        kappa: args.kappa,
        value: result.value,
        exact: result.exact,
        note: (!result.exact).then_some("greedy upper bound (carrier above the exact limit)"),
    };
    emit(
        &output,
        args.out.as_deref(),
        "invariant pdiam",
        argv,
        DEFAULT_SEED,
        std::slice::from_ref(&args.measure),
    )
}

#[derive(Serialize)]
struct SampleOutput {
    space: String,
    n: usize,
    seed: u64,
    matrix: sampling::SampleMatrix,
}

pub fn sample(args: SampleArgs, argv: &[String]) -> Result<(), CliError> {
    let space = formats::load_space(&args.space)?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let matrix = sampling::sample_matrix(&space, args.n, seed);
    let output = SampleOutput {
        space: args.space.display().to_string(),
        n: args.n,
        seed,
        matrix,
    };
    emit(
        &output,
        args.out.as_deref(),
        "sample",
        argv,
        seed,
        std::slice::from_ref(&args.space),
    )
}

#[derive(Serialize)]
struct MomentsOutput {
    space: String,
    r_max: usize,
    k_max: u32,
    samples: u64,
    seed: u64,
    mode: &'static str,
    signature: sampling::MomentSignature,
}

pub fn moments(args: MomentsArgs, argv: &[String]) -> Result<(), CliError> {
    let space = formats::load_space(&args.space)?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let exact_cap = if args.exact {
        u64::MAX
    } else if args.mc {
        0
    } else {
        sampling::DEFAULT_EXACT_CAP
    };
    let opts = MomentOptions {
        r_max: args.r,
        k_max: args.k,
        samples: args.samples,
        seed,
        exact_cap,
    };
    let signature = sampling::moment_signature(&space, &opts)?;
    let output = MomentsOutput {
        space: args.space.display().to_string(),
        r_max: args.r,
        k_max: args.k,
        samples: args.samples,
        seed,
        mode: if args.exact {
            "exact"
        } else if args.mc {
            "mc"
        } else {
            "auto"
        },
        signature,
    };
    emit(
        &output,
        args.out.as_deref(),
        "moments",
        argv,
        seed,
        std::slice::from_ref(&args.space),
    )
}

#[derive(Serialize)]
struct Box1Output {
    a: String,
    b: String,
    mode: &'static str,
    seed: u64,
    result: distances::Box1Result,
    #[serde(skip_serializing_if = "Option::is_none")]
    alignment: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<distances::RefinedCell>>,
}

pub fn box1(args: Box1Args, argv: &[String]) -> Result<(), CliError> {
    let a = formats::load_kernel(&args.a)?;
    let b = formats::load_kernel(&args.b)?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let inputs = vec![args.a.clone(), args.b.clone()];
    let output = if args.direct {
        Box1Output {
            a: args.a.display().to_string(),
            b: args.b.display().to_string(),
            mode: "direct",
            seed,
            result: distances::box1(&a, &b)?,
            alignment: None,
            cells: None,
        }
    } else {
        let mode = match args.mode {
            AlignModeArg::Exact => AlignMode::Exact,
            AlignModeArg::Anneal => AlignMode::Anneal,
        };
        let budget = AlignBudget {
            max_cells: args.max_cells,
            iterations: args.iterations,
        };
        let aligned = distances::box1_aligned(&a, &b, mode, &budget, seed)?;
        Box1Output {
            a: args.a.display().to_string(),
            b: args.b.display().to_string(),
            mode: match args.mode {
                AlignModeArg::Exact => "exact",
                AlignModeArg::Anneal => "anneal",
            },
            seed,
            result: aligned.eps,
            alignment: Some(aligned.alignment),
            cells: Some(aligned.cells),
        }
    };
    emit(&output, args.out.as_deref(), "box1", argv, seed, &inputs)
}

fn sequence_spec(args: &SequenceArgs, seed: u64) -> Result<SequenceSpec, CliError> {
    let family = match args.family {
        FamilyArg::Complete => Family::CompleteGraphs,
        FamilyArg::Sphere => Family::Spheres {
            count: args.sphere_count,
        },
        FamilyArg::RandomGraph => Family::RandomGraphs {
            p: args
                .p
                .ok_or_else(|| CliError::Usage("--p is required for random-graph".into()))?,
        },
    };
    Ok(SequenceSpec::new(family, args.indices.clone(), seed)?)
}

pub fn converge(args: ConvergeArgs, argv: &[String]) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let spec = sequence_spec(&args.sequence, seed)?;
    let opts = ConvergeOptions {
        r_max: args.r,
        k_max: args.k,
        samples: args.samples,
        tol: args.tol,
        seed,
        ..ConvergeOptions::default()
    };
    let report = convergence::converge_test(&spec, &opts)?;
    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, report.to_csv()).map_err(CliError::internal)?;
    }
    emit(&report, args.out.as_deref(), "converge", argv, seed, &[])
}

pub fn compare(args: CompareArgs, argv: &[String]) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let seq_a = SequenceArgs {
        family: args.family_a,
        indices: args.indices_a.clone(),
        p: args.p_a,
        sphere_count: args.sphere_count,
    };
    let seq_b = SequenceArgs {
        family: args.family_b,
        indices: args.indices_b.clone(),
        p: args.p_b,
        sphere_count: args.sphere_count,
    };
    let spec_a = sequence_spec(&seq_a, seed)?;
    let spec_b = sequence_spec(&seq_b, seed)?;
    let opts = ConvergeOptions {
        r_max: args.r,
        k_max: args.k,
        samples: args.samples,
        tol: args.tol,
        seed,
        ..ConvergeOptions::default()
    };
    let report = convergence::compare_limits(&spec_a, &spec_b, &opts)?;
    emit(&report, args.out.as_deref(), "compare", argv, seed, &[])
}
