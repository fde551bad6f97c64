//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit status if
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use arrivals::lattice_walk::{triangular_msd, StepLaw, TriangularKind};
use arrivals::montecarlo::{
    histograms_csv, ks_one_sample, ks_two_sample, rescaled_endpoints, run_replicas, sample_stopped_path,
    sample_walk_endpoints, stopped_histograms, Observation, SimConfig,
};
use arrivals::ness::{rescaling_parameter, stable_density, NessKind};
use arrivals::renewal::{count_moments, limit_state_law, state_table};
use arrivals::stopped::{
    auxiliary_kernel, auxiliary_state_poly, closed_form_asymptotics, first_event_kernel, geometric_stop_asymptotics,
    renewal_equation_rhs, stopped_moments, stopped_pmf_table, stopped_state_poly, ClosedFormCase, DbpStopsBernoulli,
};
use arrivals::stopped::StoppedSpec;
use arrivals::{Result, WaitingLaw};
use num_complex::Complex64;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn geometric(p: f64) -> WaitingLaw {
    WaitingLaw::geometric(p).unwrap()
}

fn criterion_1() -> Outcome {
    let inner = geometric(0.7);
    let asym = geometric_stop_asymptotics(&inner, 0.8, 1.0)?;
    let moments = asym.moments.expect("proper stop has moments");
    let closed = closed_form_asymptotics(ClosedFormCase::BernoulliStopsBernoulli { p: 0.7, p_stop: 0.2 })?;
    let mean_err = (moments.mean - 3.5).abs().max((closed.mean - 3.5).abs());
    let var_err = (closed.variance - 10.85).abs().max((moments.variance - 10.85).abs());

    let spec = StoppedSpec::new(inner, geometric(0.2), 0)?;
    let cfg = SimConfig::new(11, 1_000_000, 0);
    let start = Instant::now();
    let counts = run_replicas(&cfg, |rng, _| sample_stopped_path(&spec, u64::MAX, rng).count_at(u64::MAX) as f64)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mc_mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let mc_rel = (mc_mean / 3.5 - 1.0).abs();
    let ok = mean_err < 1e-9 && var_err < 1e-2 && mc_rel < 0.01 && elapsed < 10.0;
    Ok((
        ok,
        format!(
            "E M(inf) err {mean_err:.1e}, Var M(inf) = {:.6} (err {var_err:.1e}), MC mean {mc_mean:.5} (rel {mc_rel:.1e}) in {elapsed:.2}s",
            closed.variance
        ),
    ))
}

fn criterion_2() -> Outcome {
    let pairs = [
        (geometric(0.7), geometric(0.2)),
        (geometric(0.3), WaitingLaw::defective_geometric(0.25, 0.2)?),
        (WaitingLaw::sibuya(0.5)?, geometric(0.1)),
        (WaitingLaw::shifted_poisson(2.0)?, WaitingLaw::defective_sibuya(0.5, 0.6)?),
        (WaitingLaw::tabulated(vec![0.0, 0.2, 0.5, 0.3])?, WaitingLaw::sibuya(0.4)?),
        (geometric(0.5), WaitingLaw::defective_geometric(0.75, 0.05)?),
        (WaitingLaw::sibuya(0.3)?, WaitingLaw::defective_geometric(0.0, 0.5)?),
    ];
    let mut finite_err: f64 = 0.0;
    for (inner, stop) in &pairs {
        let table = stopped_pmf_table(&StoppedSpec::new(inner.clone(), stop.clone(), 512)?);
        for s in table.column_sums() {
            finite_err = finite_err.max((s - 1.0).abs());
        }
    }

    // limit mass of the frozen branch, by the closed form and by summing the
    // frozen contributions of a long finite table
    let mut limit_err: f64 = 0.0;
    let cases = [(geometric(0.7), 0.8, 1.0), (geometric(0.3), 0.8, 0.25), (WaitingLaw::sibuya(0.5)?, 0.7, 0.6), (WaitingLaw::shifted_poisson(1.5)?, 0.9, 0.75)];
    for (inner, q, mass_s) in &cases {
        let asym = geometric_stop_asymptotics(inner, *q, *mass_s)?;
        limit_err = limit_err.max((asym.total_mass() - mass_s).abs());
        let horizon = 512;
        let stop = WaitingLaw::defective_geometric(*mass_s, 1.0 - q)?.pmf_vector(horizon);
        let table = state_table(inner, horizon);
        let frozen: Vec<f64> = table
            .rows()
            .iter()
            .map(|row| row.iter().zip(stop.coeffs()).map(|(a, b)| a * b).sum())
            .collect();
        limit_err = limit_err.max((frozen.iter().sum::<f64>() - mass_s).abs());
        for (m, p) in asym.p_inf.iter().enumerate() {
            limit_err = limit_err.max((p - frozen.get(m).copied().unwrap_or(0.0)).abs());
        }
    }
    Ok((
        finite_err < 1e-10 && limit_err < 1e-9,
        format!("{} pairs, max |sum_m P_m(t) - 1| = {finite_err:.1e} (t <= 512), max limit error = {limit_err:.1e}", pairs.len()),
    ))
}

fn criterion_3() -> Outcome {
    let pairs = [
        (geometric(0.7), geometric(0.2)),
        (geometric(0.4), WaitingLaw::defective_geometric(0.5, 0.3)?),
        (WaitingLaw::sibuya(0.6)?, WaitingLaw::defective_sibuya(0.7, 0.4)?),
        (WaitingLaw::shifted_poisson(1.2)?, WaitingLaw::sibuya(0.3)?),
        (WaitingLaw::tabulated(vec![0.0, 0.1, 0.6, 0.0, 0.3])?, WaitingLaw::defective_geometric(0.0, 0.5)?),
    ];
    let start = Instant::now();
    let mut err: f64 = 0.0;
    for horizon in [1usize, 5, 12] {
        for (inner, stop) in &pairs {
            let table = stopped_pmf_table(&StoppedSpec::new(inner.clone(), stop.clone(), horizon)?);
            let oracle = common::brute_force_stopped(inner, stop, horizon);
            for (m, row) in oracle.iter().enumerate() {
                for (t, v) in row.iter().enumerate() {
                    err = err.max((table.get(m, t) - v).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((err < 1e-9 && elapsed < 5.0, format!("max |table - enumeration| = {err:.1e} for T in {{1, 5, 12}}, {elapsed:.2}s")))
}

fn criterion_4() -> Outcome {
    let (mass, p) = (0.6, 0.3);
    let big_p = 1.0 - mass;
    let dbp = WaitingLaw::defective_geometric(mass, p)?;
    let (first, _) = count_moments(&dbp, 512)?;
    let dbp_err = (0..=512).fold(0.0f64, |m, t| {
        m.max((first.get(t) - mass / big_p * (1.0 - (1.0 - p * big_p).powi(t as i32))).abs())
    });

    let (mass_s, mu) = (0.5, 0.6);
    let ps = 1.0 - mass_s;
    let dsp = WaitingLaw::defective_sibuya(mass_s, mu)?;
    let (first, _) = count_moments(&dsp, 512)?;
    let t = 512.0f64;
    let ratio = (mass_s / ps - first.get(512)) * t.powf(mu) * statrs::function::gamma::gamma(1.0 - mu) * ps * ps / mass_s;

    let mut limit_err: f64 = 0.0;
    let column = state_table(&dbp, 4096).column(4096);
    for law in [&dbp, &dsp] {
        let q = law.defect_mass();
        let scaled = |n: usize| (1.0 - law.gf(1.0).unwrap()) * law.gf(1.0).unwrap().powi(n as i32);
        for (n, v) in limit_state_law(law, 40).probs.iter().enumerate() {
            let target = (1.0 - q) * q.powi(n as i32);
            limit_err = limit_err.max((v - target).abs()).max((scaled(n) - target).abs());
        }
    }
    for (n, v) in column.iter().take(40).enumerate() {
        limit_err = limit_err.max((v - (1.0 - mass) * mass.powi(n as i32)).abs());
    }
    Ok((
        dbp_err < 1e-10 && (ratio - 1.0).abs() < 0.1 && limit_err < 1e-9,
        format!("DBP E N err {dbp_err:.1e}, DSP tail ratio at t=512 = {ratio:.4}, limit law err {limit_err:.1e}"),
    ))
}

fn criterion_5() -> Outcome {
    let lam_max = DbpStopsBernoulli::new(0.7, 0.8, 0.5)?.lambda_max(1000)?;
    let t = 1_000_000u64;
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut asym_err: f64 = 0.0;
    for &qs in &grid {
        let model = DbpStopsBernoulli::new(0.7, 0.8, qs)?;
        let ratio = model.variance(t) / (t as f64 * t as f64);
        asym_err = asym_err.max((ratio - model.lambda_m() * qs * 0.49).abs());
        if ratio > best.0 {
            best = (ratio, qs);
        }
    }
    // closed-form variance against the series route
    let model = DbpStopsBernoulli::new(0.7, 0.8, 0.5)?;
    let spec = model.spec(200)?;
    let m1 = stopped_moments(&spec, 1)?;
    let m2 = stopped_moments(&spec, 2)?;
    let route_err = (0..=200).fold(0.0f64, |m, t| {
        let var = m2.get(t) - m1.get(t) * m1.get(t);
        m.max((var - model.variance(t as u64)).abs() / (1.0 + var))
    });
    Ok((
        (lam_max - 0.5).abs() < 0.01 && (best.1 - 0.5).abs() < 1e-12 && asym_err < 1e-4 && route_err < 1e-9,
        format!(
            "Lambda_max(1000) = {lam_max:.5}, argmax Var/t^2 at Q_S = {}, |Var/t^2 - Lambda Q_S p0^2| <= {asym_err:.1e}, closed form vs series {route_err:.1e}",
            best.1
        ),
    ))
}

fn criterion_6() -> Outcome {
    let model = DbpStopsBernoulli::new(0.7, 0.8, 0.5)?;
    let horizon = 2000;
    let start = Instant::now();
    let spec = model.spec(horizon)?;
    let m1 = stopped_moments(&spec, 1)?;
    let m2 = stopped_moments(&spec, 2)?;
    let biased = triangular_msd(TriangularKind::Biased, &m1, &m2)?;
    let unbiased = triangular_msd(TriangularKind::Unbiased, &m1, &m2)?;
    let exact_time = start.elapsed().as_secs_f64();
    let t = horizon as f64;
    let lam = model.lambda_m();
    let biased_rel = (biased.get(horizon) / (t * t) / (3.0 / 16.0 * lam * 0.49) - 1.0).abs();
    let unbiased_rel = (unbiased.get(horizon) / t / (lam * 0.7) - 1.0).abs();

    let mut mc_rel: f64 = 0.0;
    for (seed, step, exact) in [(61u64, StepLaw::triangular_biased(), &biased), (62, StepLaw::triangular_unbiased(), &unbiased)] {
        let cfg = SimConfig::new(seed, 100_000, horizon);
        let sample = sample_walk_endpoints(&step, &spec, &cfg, Observation::At(horizon as u64))?;
        let msd = sample
            .positions
            .iter()
            .map(|x| step.embedding().cartesian(x).iter().map(|c| c * c).sum::<f64>())
            .sum::<f64>()
            / sample.positions.len() as f64;
        mc_rel = mc_rel.max((msd / exact.get(horizon) - 1.0).abs());
    }
    Ok((
        biased_rel < 0.02 && unbiased_rel < 0.02 && mc_rel < 0.05 && exact_time < 1.0,
        format!(
            "biased MSD/t^2 rel err {biased_rel:.2e}, unbiased MSD/t rel err {unbiased_rel:.2e} (exact series {exact_time:.2}s), MC rel err {mc_rel:.2e}"
        ),
    ))
}

fn frozen_cap(p: f64) -> u64 {
    ((1e-7f64).ln() / (1.0 - p).ln()).ceil() as u64
}

fn rescaled(inner: &WaitingLaw, step: &StepLaw, p: f64, biased: bool) -> Result<Vec<f64>> {
    let spec = StoppedSpec::new(inner.clone(), geometric(p), 0)?;
    let cfg = SimConfig::new(2024, 100_000, 0);
    let sample = sample_walk_endpoints(step, &spec, &cfg, Observation::Frozen { cap: frozen_cap(p) })?;
    let lambda = rescaling_parameter(inner, 1.0 - p)?;
    let scale = if biased { lambda } else { lambda.sqrt() };
    Ok(rescaled_endpoints(&sample, scale, 7))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let inners = [geometric(0.7), WaitingLaw::shifted_poisson(1.0)?];
    let walks = [
        (StepLaw::one_sided_unit(), true, NessKind::OneSidedExp { a: 1.0 }),
        (StepLaw::symmetric_pm1(), false, NessKind::Laplace { b: 1.0 }),
    ];
    let mut ok = true;
    let mut report = Vec::new();
    for (step, biased, target) in &walks {
        let mut finals = Vec::new();
        for (i, inner) in inners.iter().enumerate() {
            let mut series = Vec::new();
            let mut last = Vec::new();
            for p in [0.05, 0.02, 0.01] {
                let y = rescaled(inner, step, p, *biased)?;
                series.push(ks_one_sample(&y, |v| target.cdf(v).unwrap())?);
                last = y;
            }
            let monotone = series.windows(2).all(|w| w[1] < w[0]);
            ok &= monotone && series[2] < 0.02;
            report.push(format!(
                "{} inner {}: KS {:.4}/{:.4}/{:.4}",
                target.label(),
                i + 1,
                series[0],
                series[1],
                series[2]
            ));
            finals.push(last);
        }
        let two = ks_two_sample(&finals[0], &finals[1])?;
        ok &= two < 0.01;
        report.push(format!("two-sample {two:.4}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    Ok((ok, format!("{} ({elapsed:.1}s)", report.join("; "))))
}

fn criterion_8() -> Outcome {
    let mut err: f64 = 0.0;
    for i in 0..=80 {
        let y = -10.0 + 0.25 * i as f64;
        let gauss = (-y * y / 4.0).exp() / (2.0 * PI.sqrt());
        let cauchy = 1.0 / (PI * (1.0 + y * y));
        err = err.max((stable_density(2.0, 0.0, y)? - gauss).abs());
        err = err.max((stable_density(1.0, 0.0, y)? - cauchy).abs());
    }
    for i in 1..=80 {
        let y = 0.25 * i as f64;
        let levy = y.powf(-1.5) * (-1.0 / (4.0 * y)).exp() / (2.0 * PI.sqrt());
        err = err.max((stable_density(0.5, 1.0, y)? - levy).abs());
    }
    let mixture = NessKind::StableMixture { alpha: 2.0, theta: 0.0, scale: std::f64::consts::FRAC_1_SQRT_2 };
    let laplace = NessKind::Laplace { b: 1.0 };
    let mut mix_err: f64 = 0.0;
    for i in 0..=200 {
        let y = -10.0 + 0.1 * i as f64;
        mix_err = mix_err.max((mixture.density(y)? - laplace.density(y)?).abs());
    }
    Ok((
        err < 1e-6 && mix_err < 1e-6,
        format!("presets sup err {err:.1e}, alpha=2 mixture vs Laplace sup err {mix_err:.1e}"),
    ))
}

fn criterion_9() -> Outcome {
    let inner = geometric(0.7);
    let q = 0.8;
    let horizon = 64;
    let mut aux_err: f64 = 0.0;
    for v in [Complex64::new(0.5, 0.0), Complex64::new(-0.3, 0.4), Complex64::new(1.0, 0.0)] {
        let poly = auxiliary_state_poly(&inner, q, v, horizon)?;
        let rhs = renewal_equation_rhs(&auxiliary_kernel(&inner, q, horizon), &poly, v);
        for (a, b) in poly.iter().zip(&rhs) {
            aux_err = aux_err.max((a - b).norm());
        }
    }
    let v = Complex64::new(0.5, 0.0);
    let spec = StoppedSpec::new(inner.clone(), geometric(1.0 - q), horizon)?;
    let poly = stopped_state_poly(&stopped_pmf_table(&spec), v);
    let rhs = renewal_equation_rhs(&first_event_kernel(&inner, q, horizon), &poly, v);
    let gap = (poly[2] - rhs[2]).norm();
    Ok((
        aux_err < 1e-9 && gap > 1e-6,
        format!(
            "R_q residual {aux_err:.1e}; M at (v=0.5, t=2): Pi = {:.6}, renewal right-hand side = {:.6}, gap {gap:.2e}",
            poly[2].re, rhs[2].re
        ),
    ))
}

fn mc_suite_csv(workers: usize) -> Result<String> {
    let spec = StoppedSpec::new(geometric(0.7), WaitingLaw::defective_geometric(0.75, 0.2)?, 100)?;
    let times = [1u64, 5, 20, 100];
    let cfg = SimConfig::new(99, 20_000, 100).with_workers(workers);
    let mut out = histograms_csv(&times, &stopped_histograms(&spec, &cfg, &times)?);
    let sample = sample_walk_endpoints(&StepLaw::symmetric_pm1(), &spec, &cfg, Observation::At(50))?;
    out.push_str("replica,x\n");
    for (i, x) in sample.positions.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", x[0]));
    }
    Ok(out)
}

fn criterion_10() -> Outcome {
    let a = mc_suite_csv(1)?;
    let b = mc_suite_csv(4)?;
    let c = mc_suite_csv(4)?;
    let dir = std::env::temp_dir().join(format!("arrivals-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| arrivals::Error::Parameter(e.to_string()))?;
    let mut bytes = Vec::new();
    for (name, body) in [("w1.csv", &a), ("w4.csv", &b), ("w4b.csv", &c)] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| arrivals::Error::Parameter(e.to_string()))?;
        bytes.push(std::fs::read(&path).map_err(|e| arrivals::Error::Parameter(e.to_string()))?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    let same = bytes[0] == bytes[1] && bytes[1] == bytes[2];
    Ok((same, format!("{} bytes per run, workers 1/4/4 identical: {same}", bytes[0].len())))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("geometric-stop closed forms", criterion_1),
        ("normalization", criterion_2),
        ("brute-force enumeration", criterion_3),
        ("defective Bernoulli/Sibuya laws", criterion_4),
        ("variance maximiser", criterion_5),
        ("triangular lattice", criterion_6),
        ("steady-state universality", criterion_7),
        ("stable densities", criterion_8),
        ("renewal equation and non-Markov", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!("criterion {} [{}] {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    if failures > 0 {
        eprintln!("{failures} criteria failed");
        std::process::exit(1);
    }
}
