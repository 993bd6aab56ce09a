//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line, even when all of them pass.

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64 as C64;

use qutrit_tomo::cxla::ComplexMatrix;
use qutrit_tomo::ent::census;
use qutrit_tomo::gates::{
    count_nonlocal, gate_unitary, table_bases, verify_set, verify_table, Convention, ConventionChoice,
    DecompositionTable, GateToken, PhaseGate, TableId, TableReport,
};
use qutrit_tomo::gf::{FieldElement, FieldSpec};
use qutrit_tomo::mub::{build_field_mubs, match_sets, projectors, qutrit_fixtures, verify_unbiased, MubSet};
use qutrit_tomo::tomo::{
    median, probabilities, project_physical, reconstruct_gellmann, reconstruct_mub, run_trials, sample,
    seeded_density_matrix, DensityMatrix,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn field_set(n: usize) -> MubSet {
    build_field_mubs(&FieldSpec::for_qutrits(n).expect("field spec"))
}

fn c1_construction() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for n in 1..=3 {
        let d = 3usize.pow(n as u32);
        let start = Instant::now();
        let set = field_set(n);
        let elapsed = start.elapsed().as_secs_f64();
        let report = verify_unbiased(&set);
        let ok = set.len() == d + 1 && report.pass && report.max_deviation < 1e-10;
        let ok = ok && (d != 27 || elapsed < 5.0);
        pass &= ok;
        details.push(format!(
            "d={d}: {} bases, dev {:.1e}, {:.3}s",
            set.len(),
            report.max_deviation,
            elapsed
        ));
    }
    outcome(pass, details.join("; "))
}

fn c2_fixtures() -> Outcome {
    let set = field_set(1);
    match match_sets(&set.bases, &qutrit_fixtures(), 1e-12) {
        Some((mapping, dev)) => outcome(dev < 1e-12, format!("mapping {mapping:?}, dev {dev:.1e}")),
        None => outcome(false, "no phase/permutation match within 1e-12"),
    }
}

fn c3_exact_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let set = field_set(n);
        for seed in 0..100u64 {
            let rho = seeded_density_matrix(set.dim, seed);
            let table = probabilities(&rho, &set).expect("probabilities");
            let est = reconstruct_mub(&table, &set).expect("reconstruct");
            worst = worst.max(est.frobenius_distance(rho.matrix()));
        }
    }
    outcome(worst < 1e-10, format!("300 states, max error {worst:.1e}"))
}

fn c4_trivial_cases() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let set = field_set(n);
        let d = set.dim;
        let mut ket = vec![C64::new(0.0, 0.0); d];
        ket[0] = C64::new(1.0, 0.0);
        let states = [DensityMatrix::maximally_mixed(d), DensityMatrix::pure(&ket).expect("pure")];
        for rho in &states {
            let table = probabilities(rho, &set).expect("probabilities");
            let est = reconstruct_mub(&table, &set).expect("reconstruct");
            worst = worst.max(est.frobenius_distance(rho.matrix()));
        }
    }
    outcome(worst < 1e-12, format!("I/d and |0><0| at d=3,9,27, max error {worst:.1e}"))
}

fn run_cli(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qutrit-tomo"))
        .args(args)
        .output()
        .expect("run qutrit-tomo");
    (out.status.success(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn c5_measurement_counts() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (n, expected) in [("1", "4 vs 8 measurements"), ("2", "10 vs 80 measurements")] {
        let (ok, stdout) = run_cli(&["tomo", "--qutrits", n]);
        let line = stdout.lines().next().unwrap_or("").to_string();
        pass &= ok && line.starts_with(expected);
        details.push(format!("n={n}: \"{line}\""));
    }
    outcome(pass, details.join("; "))
}

fn c6_gellmann_agreement() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let set = field_set(n);
        for seed in 0..20u64 {
            let rho = seeded_density_matrix(set.dim, 1000 + seed);
            let mub = reconstruct_mub(&probabilities(&rho, &set).expect("p"), &set).expect("mub");
            let gm = reconstruct_gellmann(&rho, n).expect("gell-mann");
            worst = worst.max(gm.raw_estimate.frobenius_distance(&mub));
        }
    }
    outcome(worst < 1e-9, format!("40 states, max difference {worst:.1e}"))
}

fn c7_complexity() -> Outcome {
    let counts: Vec<usize> = TableId::ALL
        .iter()
        .map(|&t| count_nonlocal(&DecompositionTable::load(t)))
        .collect();
    outcome(
        counts[1] == 6 && counts[2] == 44,
        format!("table I {}, table II {}, table III {}", counts[0], counts[1], counts[2]),
    )
}

fn report_json(r: &TableReport) -> String {
    serde_json::to_string(r).expect("serialize report")
}

fn c8_table_verification() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let mut table_one_ok = false;
    for id in TableId::ALL {
        let table = DecompositionTable::load(id);
        let expected_rows = match id {
            TableId::I => 3,
            TableId::II => 9,
            TableId::III => 28,
        };
        for phase in PhaseGate::ALL {
            for conv in Convention::ALL {
                let first = verify_table(&table, ConventionChoice::Fixed(conv), phase).expect("verify");
                let second = verify_table(&table, ConventionChoice::Fixed(conv), phase).expect("verify");
                let table_rows = first.per_row.iter().filter(|r| r.source == "table").count();
                let stable = report_json(&first) == report_json(&second);
                pass &= stable && table_rows == expected_rows;
                if id == TableId::I && first.all_unbiased && first.bases_checked == 4 && first.max_deviation < 1e-10 {
                    table_one_ok = true;
                }
                details.push(format!(
                    "{id:?}/{}/{}: {}/{}",
                    phase.name(),
                    conv.name(),
                    first.pairs_passed,
                    first.pairs_checked
                ));
            }
        }
    }
    pass &= table_one_ok;

    for n in 1..=3 {
        let verdict = verify_set(&field_set(n), Some("0"));
        let rows_ok = verdict.per_row.iter().all(|r| r.unbiased_vs_all);
        pass &= verdict.all_unbiased && rows_ok;
        details.push(format!(
            "field n={n}: {}/{}",
            verdict.pairs_passed, verdict.pairs_checked
        ));
    }
    outcome(pass, details.join("; "))
}

fn c9_census() -> Outcome {
    let field = census(&field_set(2).bases, 2).expect("census");
    let table = DecompositionTable::load(TableId::III);
    let conv = Convention::LeftFirst;
    let rows = table_bases(&table, conv, PhaseGate::Paper, false).expect("rows");
    let with_std = table_bases(&table, conv, PhaseGate::Paper, true).expect("rows + standard");
    let rows_only = census(&rows, 3).expect("census");
    let extended = census(&with_std, 3).expect("census");
    let reference = [0usize, 12, 16];
    let complete = rows_only.per_basis.len() == 28 && extended.per_basis.len() == 29;
    let pass = field.structure == [4, 6] && complete && rows_only.structure == reference;
    outcome(
        pass,
        format!(
            "field n=2 {:?}; table III rows only {:?} ({}), rows + standard {:?} ({}), reference (0,12,16)",
            field.structure,
            rows_only.structure,
            if rows_only.structure == reference { "match" } else { "differs" },
            extended.structure,
            if extended.structure == reference { "match" } else { "differs" },
        ),
    )
}

fn c10_scaling(suite_start: Instant) -> Outcome {
    let set = field_set(1);
    let rho = seeded_density_matrix(3, 42);
    let low = median(&run_trials(&rho, &set, 1_000, 7, 50).expect("trials"));
    let high = median(&run_trials(&rho, &set, 100_000, 7, 50).expect("trials"));
    let ratio = low / high;
    let elapsed = suite_start.elapsed().as_secs_f64();
    outcome(
        (5.0..=20.0).contains(&ratio) && elapsed < 60.0,
        format!("median errors {low:.3e} / {high:.3e}, ratio {ratio:.2}, suite so far {elapsed:.1}s"),
    )
}

fn field_axioms_hold(spec: &FieldSpec) -> bool {
    let els = spec.elements().to_vec();
    let zero = FieldElement::zero(spec.order()).expect("zero");
    let one = FieldElement::one(spec.order()).expect("one");
    let add = |a, b| spec.add(a, b).expect("add");
    let mul = |a, b| spec.mul(a, b).expect("mul");
    for &a in &els {
        if add(a, zero) != a || mul(a, one) != a || add(a, spec.neg(a).expect("neg")) != zero {
            return false;
        }
        if a != zero && spec.inv(a).expect("inv").is_none_or(|i| mul(a, i) != one) {
            return false;
        }
        for &b in &els {
            if add(a, b) != add(b, a) || mul(a, b) != mul(b, a) {
                return false;
            }
            for &c in &els {
                if add(add(a, b), c) != add(a, add(b, c))
                    || mul(mul(a, b), c) != mul(a, mul(b, c))
                    || mul(a, add(b, c)) != add(mul(a, b), mul(a, c))
                {
                    return false;
                }
            }
        }
    }
    true
}

fn c11_invariants() -> Outcome {
    let mut failures = Vec::new();

    for order in [9, 27] {
        if !field_axioms_hold(&FieldSpec::standard(order).expect("spec")) {
            failures.push(format!("field axioms GF({order})"));
        }
    }

    let mut worst_unitary: f64 = 0.0;
    let mut worst_cube: f64 = 0.0;
    for n in 1..=3usize {
        let mut tokens = Vec::new();
        for q in 1..=n {
            tokens.push(GateToken::fourier(q));
            tokens.push(GateToken::phase(q));
            for t in (1..=n).filter(|&t| t != q) {
                tokens.push(GateToken::shift(q, t));
            }
        }
        let with_inverses: Vec<GateToken> = tokens.iter().flat_map(|&t| [t, t.inverted()]).collect();
        for phase in PhaseGate::ALL {
            for tok in &with_inverses {
                let u = gate_unitary(tok, n, phase).expect("gate");
                worst_unitary = worst_unitary.max(u.unitarity_error());
                if tok.is_nonlocal() {
                    let cube = &(&u * &u) * &u;
                    let id = ComplexMatrix::identity(u.rows());
                    worst_cube = worst_cube.max(cube.max_abs_diff(&id));
                }
            }
        }
    }
    if worst_unitary > 1e-10 {
        failures.push(format!("gate unitarity {worst_unitary:.1e}"));
    }
    if worst_cube > 1e-10 {
        failures.push(format!("X^3 = I {worst_cube:.1e}"));
    }

    let mut worst_completeness: f64 = 0.0;
    for n in 1..=3 {
        let set = field_set(n);
        let id = ComplexMatrix::identity(set.dim);
        for basis in &set.bases {
            let sum = projectors(basis)
                .expect("projectors")
                .iter()
                .fold(ComplexMatrix::zeros(set.dim, set.dim), |acc, p| &acc + p);
            worst_completeness = worst_completeness.max(sum.max_abs_diff(&id));
        }
    }
    if worst_completeness > 1e-10 {
        failures.push(format!("projector completeness {worst_completeness:.1e}"));
    }

    let mut worst_idem: f64 = 0.0;
    for n in 1..=2 {
        let set = field_set(n);
        for seed in 0..20u64 {
            let rho = seeded_density_matrix(set.dim, seed);
            let noisy = sample(&probabilities(&rho, &set).expect("p"), 50, seed).expect("sample");
            let raw = reconstruct_mub(&noisy, &set).expect("reconstruct");
            let once = project_physical(&raw).expect("project");
            let twice = project_physical(once.matrix()).expect("project");
            worst_idem = worst_idem.max(twice.matrix().max_abs_diff(once.matrix()));
        }
    }
    if worst_idem > 1e-10 {
        failures.push(format!("projection idempotence {worst_idem:.1e}"));
    }

    if failures.is_empty() {
        outcome(
            true,
            format!(
                "field axioms GF(9)/GF(27); unitarity {worst_unitary:.1e}; X^3 {worst_cube:.1e}; \
                 completeness {worst_completeness:.1e}; idempotence {worst_idem:.1e}"
            ),
        )
    } else {
        outcome(false, failures.join("; "))
    }
}

type Check = Box<dyn Fn() -> Outcome>;

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: Vec<(&str, Check)> = vec![
        ("MUB construction d=3,9,27", Box::new(c1_construction)),
        ("single-qutrit fixtures", Box::new(c2_fixtures)),
        ("exact round trip", Box::new(c3_exact_round_trip)),
        ("trivial states", Box::new(c4_trivial_cases)),
        ("measurement counts", Box::new(c5_measurement_counts)),
        ("Gell-Mann baseline", Box::new(c6_gellmann_agreement)),
        ("complexity counts", Box::new(c7_complexity)),
        ("table verification", Box::new(c8_table_verification)),
        ("entanglement census", Box::new(c9_census)),
        ("statistical scaling", Box::new(move || c10_scaling(start))),
        ("invariant suites", Box::new(c11_invariants)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
