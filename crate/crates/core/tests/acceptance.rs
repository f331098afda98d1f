//! Acceptance criteria, one line each. Runs without the libtest harness so every
//! criterion is printed even when an earlier one fails.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use linrec_core::blockshift::{
    block_power, coord12_bound_check, Block2, BlockConfig, BlockParams, MSchedule, EXCLUSION_EPS,
};
use linrec_core::cyclicity::{
    diag_cyclic_test, diagonalize, eigen_span_check, krylov_rank, real_cyclic_test,
    realified_krylov_rank, TriMatrix,
};
use linrec_core::density::{
    longest_ap, lower_density, max_gap, max_window_count, upper_banach_window, upper_density,
    ReturnSet,
};
use linrec_core::rigidity::{RigidityOperator, Time};
use linrec_core::seqspace::{Field, SpaceConfig, SparseVector};

const SEED: u64 = 20_240_601;

type Check<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rand_c<R: Rng>(rng: &mut R) -> Complex64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn timed<F: FnOnce() -> Verdict>(limit: Option<Duration>, f: F) -> Verdict {
    let start = Instant::now();
    let v = f();
    let took = start.elapsed();
    match limit {
        Some(l) => verdict(
            v.passed && took <= l,
            format!(
                "{} ({:.2} s, limit {} s)",
                v.detail,
                took.as_secs_f64(),
                l.as_secs()
            ),
        ),
        None => verdict(
            v.passed,
            format!("{} ({:.2} s)", v.detail, took.as_secs_f64()),
        ),
    }
}

fn closed_form_oracle(op: &RigidityOperator) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let k_max = op.k_max();
    let mut worst: f64 = 0.0;
    let mut cases = 0u64;
    for _ in 0..200 {
        let support = rng.random_range(1..=8usize);
        let entries: Vec<_> = (0..support)
            .map(|_| (rng.random_range(1..=k_max), rand_c(&mut rng)))
            .collect();
        let x = SparseVector::from_entries(entries).unwrap();
        let mut y = x.clone();
        for n in 1..=64u64 {
            y = op.apply_t(&y, k_max).unwrap().0;
            for k in 1..=k_max {
                worst = worst.max((op.power_coeff(&x, n, k) - y.get(k)).norm());
                cases += 1;
            }
        }
    }
    verdict(
        worst <= 1e-9,
        format!("worst |closed form - iterate| {worst:.2e} over {cases} coordinates"),
    )
}

fn lambda_sweep(op: &RigidityOperator) -> Verdict {
    let p = &op.params;
    let k_max = op.k_max();
    let j_max = p.cfg.j_max;
    let mut bad = Vec::new();
    let mut worst_i = f64::NEG_INFINITY;
    for k in 3..=k_max {
        for n in 1..=10_000u64 {
            let e = op.lambda_kn(k, n).norm() - n as f64;
            worst_i = worst_i.max(e);
            if e > 1e-9 {
                bad.push(format!("(i) k={k} n={n}"));
            }
        }
    }
    let mut worst_ii: f64 = 0.0;
    for n in 3..=j_max {
        for k in 3..=n {
            let v = op.lambda_kn_at(k, Time::multiple(1, n)).norm();
            worst_ii = worst_ii.max(v);
            if v > 1e-9 {
                bad.push(format!("(ii) k={k} n={n}"));
            }
        }
    }
    let mut worst_iii = f64::INFINITY;
    for n in 1..=10_000u64 {
        let Some(k) = (3..=k_max).find(|&j| 2.0 * n as f64 <= p.m(j)) else {
            bad.push(format!("(iii) no level for n={n}"));
            continue;
        };
        let margin = op.lambda_kn(k, n).norm() - 2.0 / PI * n as f64;
        worst_iii = worst_iii.min(margin);
        if margin < -1e-6 {
            bad.push(format!("(iii) n={n}"));
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "max |l|-n {worst_i:.2e}, max |l(k,m_n)| {worst_ii:.2e}, min |l|-2n/pi {worst_iii:.2e}, {} violations",
            bad.len()
        ),
    )
}

fn recurrence_certificates(op: &RigidityOperator) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut found = 0;
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    for i in 0..10 {
        let x = op.random_x0(&mut rng, 8);
        for eps in [1e-2, 1e-4] {
            match op.recurrence_certificate(&x, eps) {
                Ok(cert)
                    if cert.bracket.upper < eps && cert.time == Time::multiple(1, cert.k_j - 1) =>
                {
                    found += 1;
                    worst = worst.max(cert.bracket.upper / eps);
                }
                Ok(cert) => problems.push(format!(
                    "vector {i} eps {eps}: upper {:.2e}",
                    cert.bracket.upper
                )),
                Err(e) => problems.push(format!("vector {i} eps {eps}: {e}")),
            }
        }
    }
    verdict(
        problems.is_empty(),
        format!(
            "{found}/20 certificates, worst upper/eps {worst:.2e}{}",
            problems.iter().map(|p| format!(" {p}")).collect::<String>()
        ),
    )
}

fn nonrecurrence_floor(op: &RigidityOperator) -> Verdict {
    let j_max = op.params.cfg.j_max;
    let horizon = Time::multiple(1, j_max - 1);
    let vectors = [
        op.params.z.clone(),
        op.z_fiber(&[(9, c(1e-3, 0.0))]).unwrap(),
        op.z_fiber(&[(3, c(1e-3, 0.0)), (15, c(0.0, 1e-3))])
            .unwrap(),
    ];
    let target = 1.0 / PI - 0.02;
    let mut floors = Vec::new();
    let mut ok = true;
    for x in &vectors {
        match op.nonrecurrence_floor(x, horizon, 1 << 20) {
            Ok(f) => {
                ok &= f.floor >= target;
                floors.push(format!("{:.4}", f.floor));
            }
            Err(e) => {
                ok = false;
                floors.push(e.to_string());
            }
        }
    }
    verdict(
        ok,
        format!(
            "floors [{}] over n <= {} against {target:.4}",
            floors.join(", "),
            op.params.describe(horizon)
        ),
    )
}

fn ap_recurrence(op: &RigidityOperator) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut problems = Vec::new();
    let mut shortest = usize::MAX;
    for i in 0..10 {
        let x = op.random_x0(&mut rng, 8);
        match op.ap_witness(&x, 1e-3, 5) {
            Ok(w) => {
                if w.uppers.len() != 5 || !w.uppers.iter().all(|u| *u < 1e-3) {
                    problems.push(format!("vector {i}: unverified"));
                }
                let l = longest_ap(&w.return_set);
                shortest = shortest.min(l);
                if l < 5 {
                    problems.push(format!("vector {i}: longest_ap {l}"));
                }
            }
            Err(e) => problems.push(format!("vector {i}: {e}")),
        }
    }
    verdict(
        problems.is_empty(),
        format!(
            "10 witnesses, shortest longest_ap {shortest}{}",
            problems.iter().map(|p| format!(" {p}")).collect::<String>()
        ),
    )
}

fn mat_dev(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> f64 {
    (0..4)
        .map(|i| (a[i / 2][i % 2] - b[i / 2][i % 2]).norm())
        .fold(0.0, f64::max)
}

fn mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut r = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn omegas() -> [Complex64; 4] {
    [c(1.0, 0.0), c(0.9, 0.0), c(-0.3, 0.7), c(0.0, 2.5)]
}

fn block_power_oracle() -> Verdict {
    let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    let mut worst: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    for m in 3..=8u64 {
        for w in omegas() {
            let b = Block2::new(m, w);
            let a = b.matrix();
            let mut acc = id;
            for n in 0..=2 * m * m {
                worst = worst.max(mat_dev(&block_power(&b, n), &acc));
                acc = mul(&acc, &a);
            }
            worst_id = worst_id.max(mat_dev(&block_power(&b, m * m), &id));
        }
    }
    verdict(
        worst <= 1e-9 && worst_id <= 1e-9,
        format!("worst vs product {worst:.2e}, worst at period vs identity {worst_id:.2e}"),
    )
}

fn corner_bound() -> Verdict {
    let mut exceptions = 0;
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for m in 3..=6u64 {
        let q = m * m;
        for w in omegas() {
            let b = Block2::new(m, w);
            let a = b.matrix();
            let mut acc = a;
            for n in 1..=3 * q {
                let k = n % q;
                let in_window = m <= k && k <= q - m;
                let rep = coord12_bound_check(&b, n);
                if rep.in_window != in_window {
                    exceptions += 1;
                }
                if in_window {
                    checked += 1;
                    // brute force value from the repeated product
                    let value = acc[0][1].norm();
                    let bound = 2.0 * m as f64 * w.norm() / PI;
                    min_margin = min_margin.min(value - bound);
                    if value < bound - 1e-9 || rep.value < bound - 1e-9 {
                        exceptions += 1;
                    }
                }
                acc = mul(&acc, &a);
            }
        }
    }
    verdict(
        exceptions == 0,
        format!("{checked} window times, {exceptions} exceptions, min margin {min_margin:.3e}"),
    )
}

fn exclusion() -> Verdict {
    let bp = BlockParams::with_defaults(Field::Complex).unwrap();
    let k = bp.space.k;
    let mut lines = Vec::new();
    let mut ok = true;
    let mut bounds = Vec::new();
    for j in 4..=8 {
        let m = bp.m_j(j);
        let q = m * m;
        let horizon = 3 * q;
        let x = bp.g_witness(&[j], 2.0).unwrap();
        let hits: Vec<bool> = (1..=horizon)
            .into_par_iter()
            .map(|n| bp.orbit_distance(&x, n).unwrap() < EXCLUSION_EPS / k)
            .collect();
        // exhaustive sliding window over every start in [1, 2q + 1]
        let mut count = hits[..q as usize].iter().filter(|h| **h).count() as u64;
        let mut max_count = count;
        for s in 1..=(horizon - q) as usize {
            count = count + hits[s + q as usize - 1] as u64 - hits[s - 1] as u64;
            max_count = max_count.max(count);
        }
        let times: Vec<u128> = (1..=horizon as u128)
            .filter(|&n| hits[n as usize - 1])
            .collect();
        let set = ReturnSet::new(times, horizon as u128).unwrap();
        let ubd = upper_banach_window(&set, q as u128).unwrap();
        let bound = 2.0 * m as f64 / q as f64;
        let module_count = max_window_count(&set, q as u128).unwrap();
        ok &= max_count <= 2 * m && ubd <= bound && module_count == max_count;
        bounds.push(bound);
        lines.push(format!("j={j}: {max_count}/{}", 2 * m));
    }
    let decreasing = bounds.windows(2).all(|w| w[1] < w[0]);
    verdict(
        ok && decreasing,
        format!(
            "window counts [{}], bounds strictly decreasing: {decreasing}",
            lines.join(", ")
        ),
    )
}

fn periodicity() -> Verdict {
    let bp = BlockParams::with_defaults(Field::Complex).unwrap();
    let mut worst_period: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for j in 1..=bp.j_max() {
        let q = bp.m_j(j) * bp.m_j(j);
        for (lambda, x) in bp.unimodular_eigenvectors(j).unwrap() {
            let tx = bp.apply_op(&x, 1).unwrap();
            worst_res = worst_res.max((&tx - &x.scale(lambda)).norm(&bp.space));
            worst_period = worst_period.max(bp.orbit_distance(&x, q).unwrap());
        }
    }
    verdict(
        worst_period <= 1e-9 && worst_res <= 1e-12,
        format!("worst period error {worst_period:.2e}, worst residual {worst_res:.2e}"),
    )
}

fn random_tri<R: Rng>(rng: &mut R, n: usize) -> TriMatrix {
    let shift: f64 = rng.random_range(0.0..1.0);
    let mut a = DMatrix::from_element(n, n, c(0.0, 0.0));
    for r in 0..n {
        a[(r, r)] = Complex64::from_polar(
            rng.random_range(0.5..1.0),
            2.0 * PI * (r as f64 + 0.5 * shift) / n as f64,
        );
        for col in r + 1..n {
            a[(r, col)] = rand_c(rng) * 0.5;
        }
    }
    TriMatrix::new(a).unwrap()
}

fn cyclicity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let mut trials = 0;
    let mut disagree = 0;
    let mut no_span = 0;
    let mut bad_residual = 0;
    for n in 1..=8usize {
        for _ in 0..3 {
            let t = random_tri(&mut rng, n);
            let diag = diagonalize(&t).unwrap();
            if diag.residual > 1e-8 * diag.scale {
                bad_residual += 1;
            }
            if !eigen_span_check(&t).unwrap().spans {
                no_span += 1;
            }
            // every zero pattern of the eigenbasis coordinates
            for pattern in 0u32..(1 << n) {
                let y: Vec<Complex64> = (0..n)
                    .map(|i| {
                        if pattern >> i & 1 == 1 {
                            c(0.0, 0.0)
                        } else {
                            Complex64::from_polar(
                                rng.random_range(0.5..1.0),
                                rng.random_range(0.0..2.0 * PI),
                            )
                        }
                    })
                    .collect();
                let x = &diag.l * DVector::from_vec(y.clone());
                let cyclic = diag_cyclic_test(&diag.d, &y).unwrap();
                let full = krylov_rank(&t, x.as_slice()).unwrap() == n;
                trials += 1;
                if cyclic != full {
                    disagree += 1;
                }
            }
        }
    }
    verdict(
        disagree == 0 && no_span == 0 && bad_residual == 0,
        format!("{trials} vectors, {disagree} disagreements, {no_span} span failures, {bad_residual} residual failures"),
    )
}

fn real_conjugacy() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let bp = BlockParams::with_defaults(Field::Real).unwrap();
    let samples: Vec<[f64; 4]> = (0..16)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
        .collect();
    let mut worst: f64 = 0.0;
    for j in 1..=6 {
        let q = bp.m_j(j) * bp.m_j(j);
        for n in [0, 1, 7, q] {
            worst = worst.max(bp.conjugacy_check(j, n, &samples).unwrap());
        }
    }
    let lambdas = bp.lambdas();
    let mut disagree = 0;
    for j in 1..=3 {
        let d = &lambdas[..2 * j];
        for t in 0..50 {
            let x: Vec<Complex64> = (0..2 * j)
                .map(|_| {
                    if t % 2 == 1 && rng.random_bool(0.3) {
                        c(0.0, 0.0)
                    } else {
                        rand_c(&mut rng)
                    }
                })
                .collect();
            let cyclic = real_cyclic_test(d, &x).unwrap();
            let full = realified_krylov_rank(d, &x).unwrap() == 4 * j;
            if cyclic != full {
                disagree += 1;
            }
        }
    }
    let mut m = bp.m.clone();
    m[0] = 2;
    let direct = BlockParams::new(
        Field::Real,
        bp.v.clone(),
        bp.omega.clone(),
        m.clone(),
        bp.space,
    );
    let generated = BlockParams::generate(
        &BlockConfig {
            field: Field::Real,
            m_schedule: MSchedule::List(m),
            ..BlockConfig::default()
        },
        SpaceConfig::default(),
    );
    let rejected = direct.is_err() && generated.is_err();
    verdict(
        worst <= 1e-9 && disagree == 0 && rejected,
        format!("worst conjugacy {worst:.2e}, {disagree}/150 cyclic disagreements, m_1 = 2 rejected: {rejected}"),
    )
}

fn brute_longest_ap(times: &[u128]) -> usize {
    let set: HashSet<u128> = times.iter().copied().collect();
    let mut best = times.len().min(1);
    for (i, &a) in times.iter().enumerate() {
        for &b in &times[i + 1..] {
            let d = b - a;
            let mut len = 2;
            while set.contains(&(a + len as u128 * d)) {
                len += 1;
            }
            best = best.max(len);
        }
    }
    best
}

fn density_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 12);
    let h = 500u128;
    let mut mismatches = Vec::new();
    for trial in 0..100 {
        let p: f64 = if trial < 2 {
            trial as f64 * 0.002
        } else {
            rng.random_range(0.0..0.6)
        };
        let times: Vec<u128> = (1..=h).filter(|_| rng.random_bool(p)).collect();
        let member: Vec<bool> = (0..=h).map(|n| times.binary_search(&n).is_ok()).collect();
        let s = ReturnSet::new(times.clone(), h).unwrap();
        for w in [1u128, 2, 7, 50, 123, 250, 500, rng.random_range(1..=h)] {
            let brute = (1..=h - w + 1)
                .map(|start| (start..start + w).filter(|&n| member[n as usize]).count())
                .max()
                .unwrap() as f64
                / w as f64;
            if upper_banach_window(&s, w).unwrap() != brute {
                mismatches.push(format!("trial {trial} banach w={w}"));
            }
        }
        let ratios: Vec<f64> = [500u128, 250, 125]
            .iter()
            .map(|&n| (1..=n).filter(|&k| member[k as usize]).count() as f64 / n as f64)
            .collect();
        let up = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        if upper_density(&s).value != up || lower_density(&s).value != lo {
            mismatches.push(format!("trial {trial} density"));
        }
        let gap = if times.is_empty() {
            None
        } else {
            let mut pts = vec![0u128];
            pts.extend(&times);
            pts.push(h);
            pts.windows(2).map(|w| w[1] - w[0]).max()
        };
        if max_gap(&s).ok() != gap {
            mismatches.push(format!("trial {trial} max_gap"));
        }
        if longest_ap(&s) != brute_longest_ap(&times) {
            mismatches.push(format!("trial {trial} longest_ap"));
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "100 subsets of [1, 500], {} mismatches{}",
            mismatches.len(),
            mismatches
                .iter()
                .map(|p| format!(" {p}"))
                .collect::<String>()
        ),
    )
}

fn main() {
    let op = RigidityOperator::with_defaults().expect("default rigidity parameters");
    let criteria: Vec<Check> = vec![
        (
            "closed-form powers match iterated application",
            Box::new(|| timed(Some(Duration::from_secs(30)), || closed_form_oracle(&op))),
        ),
        (
            "geometric sums: upper, vanishing and lower bounds",
            Box::new(|| timed(Some(Duration::from_secs(10)), || lambda_sweep(&op))),
        ),
        (
            "recurrence certificates for X_0 vectors",
            Box::new(|| timed(None, || recurrence_certificates(&op))),
        ),
        (
            "non-recurrence floor on P^-1(z)",
            Box::new(|| timed(None, || nonrecurrence_floor(&op))),
        ),
        (
            "arithmetic-progression recurrence",
            Box::new(|| timed(None, || ap_recurrence(&op))),
        ),
        (
            "block powers match repeated products",
            Box::new(|| timed(None, block_power_oracle)),
        ),
        (
            "corner bound on every window time",
            Box::new(|| timed(None, corner_bound)),
        ),
        (
            "window-count exclusion of reiterative recurrence",
            Box::new(|| timed(None, exclusion)),
        ),
        (
            "unimodular eigenvectors are periodic",
            Box::new(|| timed(None, periodicity)),
        ),
        (
            "cyclic vectors of triangular matrices",
            Box::new(|| timed(None, cyclicity)),
        ),
        (
            "real model conjugacy and cyclicity",
            Box::new(|| timed(None, real_conjugacy)),
        ),
        (
            "density toolkit against brute force",
            Box::new(|| timed(None, density_oracles)),
        ),
    ];
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("AC{:02} {tag} {name}: {}", i + 1, v.detail);
        passed += v.passed as usize;
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
