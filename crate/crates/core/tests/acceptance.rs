//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion that is expected to hold fails.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use macrocoh::bosonic::{characteristic_function, standard_state, FockSpace, StateRecipe, DEFAULT_FOCK_DIM};
use macrocoh::channels::{ancilla_replacement_channel, apply_to_state, fuzz_case, monotonicity_report, Monotone};
use macrocoh::dynamics::{evolve, phase_space_generator, purity_rate};
use macrocoh::experiments::{copy_equivalence, ghz_state, il_formula, qfi_formula, scaling_table};
use macrocoh::linalg::{random_hermitian, ComplexVector};
use macrocoh::macroscopicity::{
    grid_search_oracle, m4_ordering_check, nf_quadratures, nf_qubits, nlj_closed_form, nlj_integral, nlj_tilde,
    qfi_quadratic_form, LocalBasis, NljGrid, Ordering, SearchConfig,
};
use macrocoh::measures::{
    convex_roof_search, il_measure, qfi, skew_information, variance, ConvexRoofConfig, MeasureId,
};
use macrocoh::modes::gap_set;
use macrocoh::state::{
    random_density, random_pure_state, tensor_states, DensityMatrix, HermitianObservable, PureState,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_observable(dim: usize, seed: u64) -> HermitianObservable {
    HermitianObservable::new(random_hermitian(&mut rng(seed), dim)).unwrap()
}

fn fock() -> FockSpace {
    FockSpace::single_mode(DEFAULT_FOCK_DIM).unwrap()
}

fn bosonic_suite() -> Vec<(&'static str, DensityMatrix)> {
    let f = fock();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    [
        ("vacuum", StateRecipe::Number { n: 0 }),
        ("fock 1", StateRecipe::Number { n: 1 }),
        ("coherent", StateRecipe::Coherent { alpha: c(1.0, 0.5) }),
        ("cat", StateRecipe::Cat { alpha: c(1.5, 0.0) }),
        ("squeezed", StateRecipe::Squeezed { xi: c(0.4, 0.0), alpha: c(0.5, 0.0) }),
    ]
    .into_iter()
    .map(|(name, r)| (name, standard_state(&r, &f).unwrap().density()))
    .collect()
}

fn exact_scaling() -> Verdict {
    let start = Instant::now();
    let ns = [2, 4, 6, 8, 10, 12];
    let rows = scaling_table(&ns).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = rows
        .iter()
        .map(|r| {
            ((r.qfi_value - r.qfi_formula).abs() / r.qfi_formula).max((r.il_value - r.il_formula).abs() / r.il_formula)
        })
        .fold(0.0, f64::max);
    let spots = (rows[0].qfi_value - 16.0).abs() < 1e-8 * 16.0
        && (rows[0].il_value - 4.0).abs() < 1e-8 * 4.0
        && (rows[1].qfi_value - 40.0).abs() < 1e-8 * 40.0
        && (rows[1].il_value - 5.0).abs() < 1e-8 * 5.0;
    let formulas = qfi_formula(2) == 16.0 && il_formula(4) == 5.0;
    verdict(
        worst <= 1e-8 && spots && formulas && elapsed < 30.0,
        format!("N = 2..12, worst relative error {worst:.1e}, {elapsed:.2} s"),
    )
}

fn pure_state_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    for k in 0..100u64 {
        let dim = 2 + (k as usize % 15);
        let psi = random_pure_state(dim, 1000 + k);
        let a = random_observable(dim, 2000 + k);
        worst = worst.max((qfi(&psi.density(), &a).unwrap() - 4.0 * variance(&psi, &a).unwrap()).abs());
    }
    verdict(worst <= 1e-9, format!("100 states, dims 2..16, max |F − 4V| = {worst:.1e}"))
}

fn gap_law() -> Verdict {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = r.random_range(2..=8);
        let values: Vec<f64> = (0..dim).map(|_| r.random_range(-5.0..5.0)).collect();
        let i = r.random_range(0..dim);
        let j = (i + r.random_range(1..dim)) % dim;
        let a = HermitianObservable::diagonal(values.clone());
        let v = variance(&PureState::equal_superposition(dim, i, j).unwrap(), &a).unwrap();
        worst = worst.max((v - 0.25 * (values[i] - values[j]).powi(2)).abs());
    }
    verdict(worst <= 1e-10, format!("50 diagonal observables, max deviation {worst:.1e}"))
}

/// Returns the verdict for the consistent form `I_sk ≤ F/4 ≤ 2 I_sk` with
/// `I_L ≤ F/4`, and separately the literal `I_sk ≤ F ≤ 2 I_sk`.
fn sandwich() -> (Verdict, Verdict) {
    let slack = 1e-9;
    let mut consistent = true;
    let mut literal = true;
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, 0.0f64);
    for k in 0..200u64 {
        let dim = 4 + (k as usize % 9);
        let rank = 2 + (k as usize % (dim - 1));
        let rho = random_density(dim, rank, 3000 + k).unwrap();
        let a = random_observable(dim, 4000 + k);
        let f = qfi(&rho, &a).unwrap();
        let sk = skew_information(&rho, &a).unwrap();
        let il = il_measure(&rho, &a).unwrap();
        consistent &= sk <= f / 4.0 + slack && f / 4.0 <= 2.0 * sk + slack && il <= f / 4.0 + slack;
        literal &= sk <= f + slack && f <= 2.0 * sk + slack && il <= f / 4.0 + slack;
        min_ratio = min_ratio.min(f / sk);
        max_ratio = max_ratio.max(f / sk);
    }
    (
        verdict(consistent, format!("200 mixed states, dims 4..12, F/I_sk in [{min_ratio:.3}, {max_ratio:.3}]")),
        verdict(literal, format!("F ≤ 2 I_sk needs F/I_sk ≤ 2, measured min {min_ratio:.3}")),
    )
}

fn monotonicity_fuzz() -> Verdict {
    let start = Instant::now();
    let dim = 6;
    let channels = 500u64;
    let mut failures = Vec::new();
    let mut delta_checks = 0;
    for case in 0..channels {
        let (a, rho, channel) = fuzz_case(dim, false, 5000 + case).unwrap();
        let mut monotones = vec![Monotone::Measure(MeasureId::Qfi), Monotone::Measure(MeasureId::RelEnt)];
        let gaps = gap_set(&a, None).unwrap();
        monotones.extend(gaps.gaps().iter().filter(|&&g| g > 0.0).map(|&g| Monotone::DeltaNorm(g)));
        delta_checks += monotones.len() - 2;
        for m in monotones {
            let r = monotonicity_report(m, &rho, &a, &channel).unwrap();
            if r.m2a != Some(true) || !r.m2b {
                failures.push((case, m));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        failures.is_empty() && elapsed < 300.0,
        format!(
            "{channels} channels, qfi + rel_ent + {delta_checks} δ-norm checks, {} failures, {elapsed:.1} s",
            failures.len()
        ),
    )
}

fn observation_two() -> Verdict {
    let mut worst: f64 = 0.0;
    for k in 0..10u64 {
        let rho = random_density(3, 2, 6000 + k).unwrap();
        let a = random_observable(3, 6100 + k);
        let sigma = random_density(2, 2, 6200 + k).unwrap();
        let big = il_measure(&tensor_states(&rho, &sigma).unwrap(), &a.extend_identity(2).unwrap()).unwrap();
        worst = worst.max((big - il_measure(&rho, &a).unwrap() * sigma.purity()).abs());
    }
    let rho = random_density(3, 2, 6300).unwrap();
    let a = random_observable(3, 6301).extend_identity(2).unwrap();
    let joint = tensor_states(&rho, &DensityMatrix::maximally_mixed(2)).unwrap();
    let channel = ancilla_replacement_channel(3, &PureState::basis(2, 0));
    let after = apply_to_state(&channel, &joint).unwrap();
    let ratio = il_measure(&after, &a).unwrap() / il_measure(&joint, &a).unwrap();
    verdict(
        worst <= 1e-9 && (ratio - 2.0).abs() <= 1e-9,
        format!("product rule max deviation {worst:.1e}; ancilla re-preparation multiplies I_L by {ratio:.12}"),
    )
}

fn convex_roof() -> Verdict {
    let z = HermitianObservable::collective_z(2);
    let mut floor_ok = true;
    let mut worst_gap: f64 = 0.0;
    for k in 0..10u64 {
        let rho = random_density(4, 2, 7000 + k).unwrap();
        let a = if k % 2 == 0 { z.clone() } else { random_observable(4, 7100 + k) };
        let target = qfi(&rho, &a).unwrap() / 4.0;
        let cfg = ConvexRoofConfig::for_state(4, 2, 7200 + k);
        let res = convex_roof_search(&rho, &a, &cfg).unwrap();
        floor_ok &= res.sample_values.iter().all(|&v| v >= target - 1e-8);
        worst_gap = worst_gap.max((res.upper_bound - target) / target);
    }
    verdict(
        floor_ok && worst_gap <= 0.05,
        format!("10 rank-2 two-qubit states, every sample ≥ F/4, best of 2000 within {:.2}% of F/4", 100.0 * worst_gap),
    )
}

fn purity_rate_identity() -> Verdict {
    let f = fock();
    let g = phase_space_generator(&f).unwrap();
    let (mut worst_closed, mut worst_fd): (f64, f64) = (0.0, 0.0);
    for (_, rho) in bosonic_suite() {
        worst_closed = worst_closed.max((purity_rate(&rho, &g).unwrap() - nlj_closed_form(&rho, &f).unwrap()).abs());
        let h = 1e-4;
        let traj = evolve(&rho, &g, 4.0 * h, 4).unwrap();
        let slope = -0.5 * (traj[3].purity - traj[1].purity) / (2.0 * h);
        worst_fd = worst_fd.max((slope - purity_rate(&traj[2].state, &g).unwrap()).abs());
    }
    verdict(
        worst_closed <= 1e-8 && worst_fd <= 1e-5,
        format!("5 states at fock dim 40: closed form {worst_closed:.1e}, finite difference {worst_fd:.1e}"),
    )
}

fn phase_space_integral() -> Verdict {
    let f = fock();
    let mut worst: f64 = 0.0;
    let mut chi0: f64 = 0.0;
    for (_, rho) in bosonic_suite() {
        let closed = nlj_closed_form(&rho, &f).unwrap();
        let integral = nlj_integral(&rho, &f, &NljGrid::default()).unwrap().value;
        worst = worst.max((integral - closed).abs() / 1e-3f64.max(0.01 * closed.abs()));
        chi0 = chi0.max((characteristic_function(&rho, &[Complex64::new(0.0, 0.0)], &f).unwrap() - 1.0).norm());
    }
    verdict(
        worst <= 1.0 && chi0 <= 1e-10,
        format!("5 states, worst error {worst:.2e} of the allowance, |χ(0) − 1| = {chi0:.1e}"),
    )
}

fn quadrature_facts() -> Verdict {
    let f = fock();
    let x = HermitianObservable::new(f.operators().x.clone()).unwrap();
    let mut worst_v: f64 = 0.0;
    for alpha in
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(-2.0, 0.5), Complex64::new(0.0, 3.0)]
    {
        let psi = standard_state(&StateRecipe::Coherent { alpha }, &f).unwrap();
        worst_v = worst_v.max((variance(&psi, &x).unwrap() - 0.5).abs());
    }
    let cfg = SearchConfig { seed: 9, ..SearchConfig::default() };
    let mut states = bosonic_suite();
    let mix = |p: f64, a: &DensityMatrix, b: &DensityMatrix| {
        DensityMatrix::from_matrix(a.matrix().scale(p) + b.matrix().scale(1.0 - p)).unwrap()
    };
    let mixed = [
        ("cat + fock 1", mix(0.5, &states[3].1, &states[1].1)),
        ("coherent + squeezed", mix(0.3, &states[2].1, &states[4].1)),
    ];
    let n_pure = states.len();
    states.extend(mixed);
    let (mut order_ok, mut worst_eq): (bool, f64) = (true, 0.0);
    for (k, (_, rho)) in states.iter().enumerate() {
        let tilde = nlj_tilde(rho, &f, &cfg).unwrap().value;
        let nf = nf_quadratures(rho, &f, &cfg).unwrap().value;
        order_ok &= tilde <= nf + 1e-9;
        if k < n_pure {
            worst_eq = worst_eq.max((tilde - nf).abs());
        }
    }
    verdict(
        worst_v <= 1e-4 && order_ok && worst_eq <= 1e-8,
        format!("max |V(α, x) − 1/2| = {worst_v:.1e}; refined ≤ N_F on 7 states; pure-state gap {worst_eq:.1e}"),
    )
}

fn m4_ordering() -> Verdict {
    let mut r = rng(11);
    let mut ok = true;
    let mut cases = 0;
    for _ in 0..10 {
        let mut values: Vec<f64> = (0..4).map(|_| r.random_range(-3.0..3.0)).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        let a = HermitianObservable::diagonal(values);
        for id in [MeasureId::Qfi, MeasureId::Variance, MeasureId::Skew] {
            ok &= m4_ordering_check(id, &a, (0, 3), (1, 2)).unwrap().ordering == Ordering::Greater;
            cases += 1;
        }
        ok &= m4_ordering_check(MeasureId::RelEnt, &a, (0, 3), (1, 2)).unwrap().ordering == Ordering::Equal;
        cases += 1;
    }
    verdict(ok, format!("{cases} comparisons on 10 random spectra; relative entropy equal on every pair"))
}

fn optimizer_vs_grid() -> Verdict {
    let mut worst_grid: f64 = 0.0;
    let mut worst_n: f64 = 0.0;
    for n in 1..=4 {
        let rho = ghz_state(n).unwrap().density();
        let form = qfi_quadratic_form(&rho, &LocalBasis::pauli(n)).unwrap();
        let (grid_best, _) = grid_search_oracle(&form, 10.0, true);
        let ascent = nf_qubits(&rho, &SearchConfig::default()).unwrap().value;
        worst_grid = worst_grid.max((grid_best / (4.0 * n as f64) - ascent).abs());
        worst_n = worst_n.max((ascent - n as f64).abs());
    }
    verdict(
        worst_grid <= 1e-6 && worst_n <= 1e-6,
        format!("GHZ N = 1..4: ascent vs grid {worst_grid:.1e}, ascent vs N {worst_n:.1e}"),
    )
}

fn copy_convergence() -> Verdict {
    let start = Instant::now();
    let a = HermitianObservable::pauli_z();
    let qubit = |p0: f64| {
        PureState::new(ComplexVector::from_vec(vec![
            Complex64::new(p0.sqrt(), 0.0),
            Complex64::new((1.0 - p0).sqrt(), 0.0),
        ]))
        .unwrap()
    };
    let mut identity_zero = true;
    for n in [4, 6, 8, 10] {
        for p0 in [0.5, 0.7, 0.76] {
            identity_zero &= copy_equivalence(&qubit(p0), &a, &qubit(p0), n).unwrap().profile_distance == 0.0;
        }
    }
    let mut trend_ok = true;
    let mut traces = Vec::new();
    for p0 in [0.76, 0.7] {
        let d: Vec<f64> = [4, 6, 8, 10]
            .iter()
            .map(|&n| copy_equivalence(&qubit(0.5), &a, &qubit(p0), n).unwrap().profile_distance)
            .collect();
        trend_ok &= d.windows(2).all(|w| w[1] <= 1.1 * w[0]) && d[3] < d[0];
        traces.push(format!("p0={p0}: {}", d.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" > ")));
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        identity_zero && trend_ok && elapsed < 180.0,
        format!("ψ = φ gives 0; |+⟩ against {}; {elapsed:.2} s", traces.join(", ")),
    )
}

fn main() -> ExitCode {
    let (sandwich_consistent, sandwich_literal) = sandwich();
    // (label, verdict, expected to hold)
    let results: Vec<(&str, Verdict, bool)> = vec![
        ("1  exact ρ_N scaling", exact_scaling(), true),
        ("2  F = 4V on pure states", pure_state_identity(), true),
        ("3  two-level gap law", gap_law(), true),
        ("4  I_sk ≤ F/4 ≤ 2 I_sk and I_L ≤ F/4", sandwich_consistent, true),
        ("4  literal I_sk ≤ F ≤ 2 I_sk", sandwich_literal, false),
        ("5  monotonicity under free channels", monotonicity_fuzz(), true),
        ("6  ancilla counterexample for I_L", observation_two(), true),
        ("7  convex roof of the variance", convex_roof(), true),
        ("8  purity rate equals N_LJ", purity_rate_identity(), true),
        ("9  phase-space integral equals N_LJ", phase_space_integral(), true),
        ("10 quadrature facts", quadrature_facts(), true),
        ("11 gap ordering", m4_ordering(), true),
        ("12 N_F optimizer against grid search", optimizer_vs_grid(), true),
        ("13 many-copy profile convergence", copy_convergence(), true),
    ];
    let mut unexpected = 0;
    for (label, v, expected) in &results {
        let status = match (v.pass, expected) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (known)",
        };
        println!("criterion {label:<42} {status:<12} {}", v.detail);
        if !v.pass && *expected {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    }
}
