use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qutrit_tomo::ent::{census, EntanglementClass, StructureCensus};
use qutrit_tomo::gates::{
    count_nonlocal, nonlocal_per_row, table_bases, verify_table, Convention, ConventionChoice, DecompositionTable,
    PhaseGate, TableId,
};
use qutrit_tomo::gf::FieldSpec;
use qutrit_tomo::io::{read_density_matrix, write_json, write_mub_set};
use qutrit_tomo::mub::{build_field_mubs, verify_unbiased, Basis};
use qutrit_tomo::tomo::{
    gellmann_measurement_count, mub_measurement_count, reconstruct_gellmann, run_experiment, seeded_density_matrix,
    DensityMatrix, Shots, TomographyResult,
};

/// Mutually unbiased measurements and state tomography for qutrit registers.
#[derive(Parser)]
#[command(name = "qutrit-tomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the field-construction MUB set for n qutrits.
    MubGen(MubGenArgs),
    /// Check that the bases of a decomposition table are mutually unbiased.
    VerifyTable(VerifyTableArgs),
    /// Count the two-qutrit gates of a decomposition table.
    Complexity(ComplexityArgs),
    /// Simulate tomography of a state and report the reconstruction error.
    Tomo(TomoArgs),
    /// Classify every basis of a MUB set by entanglement structure.
    Census(CensusArgs),
}

#[derive(Args)]
struct MubGenArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    qutrits: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GateOptions {
    #[arg(long, value_enum, default_value_t = ConventionArg::Auto)]
    convention: ConventionArg,
    #[arg(long = "phase-gate", value_enum, default_value_t = PhaseArg::Paper)]
    phase_gate: PhaseArg,
}

#[derive(Args)]
struct VerifyTableArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    table: u8,
    #[command(flatten)]
    gates: GateOptions,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    table: u8,
}

#[derive(Args)]
struct TomoArgs {
    /// Number of qutrits; inferred from the state file when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    qutrits: Option<u8>,
    /// Density matrix file. Without it a random state is drawn from --seed.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shots per basis, or "exact".
    #[arg(long, default_value = "exact", value_parser = parse_shots)]
    shots: ShotsArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Mub)]
    method: MethodArg,
    /// Project the linear estimate onto the physical states.
    #[arg(long)]
    project: bool,
}

#[derive(Args)]
struct CensusArgs {
    /// Use the field construction for this many qutrits.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), conflicts_with = "table")]
    qutrits: Option<u8>,
    /// Use the bases of a decomposition table instead.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    table: Option<u8>,
    #[command(flatten)]
    gates: GateOptions,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum ConventionArg {
    Auto,
    LeftFirst,
    LeftLast,
}

impl From<ConventionArg> for ConventionChoice {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Auto => ConventionChoice::Auto,
            ConventionArg::LeftFirst => ConventionChoice::Fixed(Convention::LeftFirst),
            ConventionArg::LeftLast => ConventionChoice::Fixed(Convention::LeftLast),
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum PhaseArg {
    Paper,
    #[value(name = "diag-1-w-w2")]
    Diag1WW2,
}

impl From<PhaseArg> for PhaseGate {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Paper => PhaseGate::Paper,
            PhaseArg::Diag1WW2 => PhaseGate::Linear,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    Mub,
    Gellmann,
}

#[derive(Copy, Clone)]
struct ShotsArg(Shots);

fn parse_shots(s: &str) -> Result<ShotsArg, String> {
    if s.eq_ignore_ascii_case("exact") {
        return Ok(ShotsArg(Shots::Exact));
    }
    match s.parse::<u64>() {
        Ok(0) => Err("shots must be at least 1".into()),
        Ok(n) => Ok(ShotsArg(Shots::PerBasis(n))),
        Err(_) => Err(format!("expected a positive integer or \"exact\", got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::MubGen(args) => mub_gen(&args),
        Command::VerifyTable(args) => verify(&args),
        Command::Complexity(args) => complexity(&args),
        Command::Tomo(args) => tomo(&args),
        Command::Census(args) => run_census(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dim_of(n: u8) -> usize {
    3usize.pow(u32::from(n))
}

fn write_out<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    if let Some(path) = out {
        write_json(path, value).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn mub_gen(args: &MubGenArgs) -> Result<bool> {
    let set = build_field_mubs(&FieldSpec::for_qutrits(usize::from(args.qutrits))?);
    let report = verify_unbiased(&set);
    if let Some(path) = &args.out {
        write_mub_set(path, &set).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    println!("{} bases, max deviation {:.3e}", set.len(), report.max_deviation);
    Ok(report.pass)
}

fn load_table(number: u8) -> Result<DecompositionTable> {
    Ok(DecompositionTable::load(TableId::from_number(usize::from(number))?))
}

fn verify(args: &VerifyTableArgs) -> Result<bool> {
    let table = load_table(args.table)?;
    let phase = PhaseGate::from(args.gates.phase_gate);
    let report = verify_table(&table, args.gates.convention.into(), phase)?;
    write_out(args.out.as_deref(), &report)?;

    println!(
        "table {}: {} bases, convention {}, phase gate {}",
        args.table,
        report.bases_checked,
        report.convention_used.name(),
        phase.name()
    );
    for score in &report.convention_scores {
        println!("  {}: {} pairs unbiased", score.convention.name(), score.pairs_passed);
    }
    println!(
        "pairs {}/{} unbiased, max deviation {:.3e}",
        report.pairs_passed, report.pairs_checked, report.max_deviation
    );
    for row in &report.per_row {
        let worst = row.worst_pair.as_deref().unwrap_or("-");
        println!(
            "  {:>8} {} worst {:>8} deviation {:.3e}",
            row.label,
            if row.unbiased_vs_all { "ok  " } else { "FAIL" },
            worst,
            row.deviation
        );
    }
    if let Some(std) = &report.standard_vs_rows {
        println!(
            "standard basis vs rows: {} (deviation {:.3e})",
            if std.unbiased_vs_all { "unbiased" } else { "biased" },
            std.deviation
        );
    }
    println!("{}", if report.all_unbiased { "PASS" } else { "FAIL" });
    Ok(report.all_unbiased)
}

fn complexity(args: &ComplexityArgs) -> Result<bool> {
    let table = load_table(args.table)?;
    println!("{}", count_nonlocal(&table));
    for (label, count) in nonlocal_per_row(&table) {
        println!("  {label}: {count}");
    }
    Ok(true)
}

fn tomo(args: &TomoArgs) -> Result<bool> {
    let rho = match &args.state {
        Some(path) => read_density_matrix(path).with_context(|| format!("invalid state file {}", path.display()))?,
        None => {
            let n = args.qutrits.context("--qutrits is required without --state")?;
            seeded_density_matrix(dim_of(n), args.seed)
        }
    };
    let n = match args.qutrits {
        Some(n) => {
            if rho.dim() != dim_of(n) {
                bail!("state has dimension {} but --qutrits {n} needs {}", rho.dim(), dim_of(n));
            }
            n
        }
        None => qutrits_for(rho.dim())?,
    };

    let result = match args.method {
        MethodArg::Mub => {
            let set = build_field_mubs(&FieldSpec::for_qutrits(usize::from(n))?);
            run_experiment(&rho, &set, args.shots.0, args.seed, args.project)?
        }
        MethodArg::Gellmann => {
            if !matches!(args.shots.0, Shots::Exact) || args.project {
                eprintln!("note: the Gell-Mann baseline is exact; --shots and --project are ignored");
            }
            reconstruct_gellmann(&rho, usize::from(n))?
        }
    };
    write_out(args.out.as_deref(), &result)?;
    print_tomo_summary(&rho, n, &result);
    Ok(true)
}

fn qutrits_for(dim: usize) -> Result<u8> {
    (1..=3u8)
        .find(|&n| dim_of(n) == dim)
        .with_context(|| format!("dimension {dim} is not 3, 9 or 27"))
}

fn print_tomo_summary(rho: &DensityMatrix, n: u8, result: &TomographyResult) {
    let d = rho.dim();
    println!(
        "{} vs {} measurements (mub vs gellmann)",
        mub_measurement_count(d),
        gellmann_measurement_count(usize::from(n))
    );
    let method = match result.method {
        qutrit_tomo::tomo::Method::Mub => "mub",
        qutrit_tomo::tomo::Method::Gellmann => "gellmann",
    };
    println!("method {method}: {} measurements", result.measurement_count);
    println!("frobenius error {:.3e}", result.metrics.frobenius_error);
    if result.projected_estimate.is_some() {
        println!("linear estimate error {:.3e}", result.metrics.raw_frobenius_error);
    }
    if let Some(f) = result.metrics.pure_state_fidelity {
        println!("fidelity {f:.12}");
    }
}

fn triple(c: &StructureCensus) -> String {
    let parts: Vec<String> = c.structure.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

const THREE_QUTRIT_STRUCTURES: [[usize; 3]; 3] = [[0, 12, 16], [1, 9, 18], [2, 6, 20]];

fn print_census(name: &str, c: &StructureCensus) {
    println!("{name}: {}", triple(c));
    for b in &c.per_basis {
        println!(
            "  {:>8} {}{}",
            b.label,
            class_name(c.n_qutrits, b.class),
            if b.uniform { "" } else { " (mixed vectors)" }
        );
    }
}

fn class_name(n_qutrits: usize, class: EntanglementClass) -> &'static str {
    match (n_qutrits, class) {
        (_, EntanglementClass::FullySeparable) => "separable",
        (2, _) => "entangled",
        (_, EntanglementClass::Biseparable) => "biseparable",
        (_, EntanglementClass::GenuinelyEntangled) => "genuinely entangled",
    }
}

fn run_census(args: &CensusArgs) -> Result<bool> {
    match (args.qutrits, args.table) {
        (Some(n), None) => {
            if n == 1 {
                bail!("census needs at least 2 qutrits: a single qutrit has no bipartition");
            }
            let set = build_field_mubs(&FieldSpec::for_qutrits(usize::from(n))?);
            let c = census(&set.bases, usize::from(n))?;
            write_out(args.out.as_deref(), &c)?;
            print_census("field construction", &c);
            if n == 2 {
                println!("reference (4,6): {}", verdict(c.structure == [4, 6]));
            } else {
                let listed = THREE_QUTRIT_STRUCTURES.iter().any(|s| c.structure == s);
                println!("among listed structures (0,12,16) (1,9,18) (2,6,20): {}", verdict(listed));
            }
            Ok(true)
        }
        (None, Some(t)) => table_census(t, &args.gates, args.out.as_deref()),
        _ => bail!("give either --qutrits or --table"),
    }
}

fn table_census(number: u8, gates: &GateOptions, out: Option<&Path>) -> Result<bool> {
    let table = load_table(number)?;
    let n = table.n_qutrits;
    if n < 2 {
        bail!("census needs at least 2 qutrits: table {number} acts on a single qutrit");
    }
    let phase = PhaseGate::from(gates.phase_gate);
    let convention = match ConventionChoice::from(gates.convention) {
        ConventionChoice::Fixed(c) => c,
        ConventionChoice::Auto => verify_table(&table, ConventionChoice::Auto, phase)?.convention_used,
    };
    eprintln!("building table {number} bases with convention {}", convention.name());

    if table.table_id.includes_standard_basis() {
        let bases = table_bases(&table, convention, phase, true)?;
        let c = census(&bases, n)?;
        write_out(out, &c)?;
        print_census(&format!("table {number}"), &c);
        if n == 2 {
            println!("reference (4,6): {}", verdict(c.structure == [4, 6]));
        }
        return Ok(true);
    }

    let rows: Vec<Basis> = table_bases(&table, convention, phase, false)?;
    let with_std: Vec<Basis> = table_bases(&table, convention, phase, true)?;
    let rows_only = census(&rows, n)?;
    let extended = census(&with_std, n)?;
    let reference = [0usize, 12, 16];
    let report = json!({
        "convention": convention,
        "phase_gate": phase,
        "reference": reference,
        "rows_only": rows_only,
        "rows_plus_standard": extended,
        "rows_only_matches": rows_only.structure == reference,
        "rows_plus_standard_matches": extended.structure == reference,
    });
    write_out(out, &report)?;
    print_census(&format!("table {number} rows only"), &rows_only);
    println!("reference (0,12,16): {}", verdict(rows_only.structure == reference));
    println!("table {number} rows plus standard basis: {}", triple(&extended));
    println!("reference (0,12,16): {}", verdict(extended.structure == reference));
    Ok(true)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "match"
    } else {
        "differs"
    }
}
