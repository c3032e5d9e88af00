//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{ikeda, ikeda_x, ikeda_xy, noise_problem, random_problem, Uniform};
use nlnoise::dataset::mean_std;
use nlnoise::estimator::direct_variance_with_workers;
use nlnoise::pairgrid::{accumulate_pairs_with_workers, max_norm};
use nlnoise::scan::DEFAULT_STOP_THRESHOLD;
use nlnoise::{
    accumulate_pairs, analyze, build_lag_problem, embedding_scan, gen_henon, gen_lorenz, moment,
    variance_integral, AnalysisOptions, AnalysisReport, Dataset, EmbeddingSpec, GridConfig,
    HenonConfig, LorenzConfig, ProbabilityCurve, RegressionProblem,
};

/// Seed of the noisy Ikeda run. Iterative noise can kick the map onto its
/// coexisting period-orbit attractor near x = 6; this seed stays on the
/// chaotic attractor, which criterion 3 verifies through the noise fraction.
const NOISY_SEED: u64 = 1;
const NOISE: f64 = 0.02;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn opts() -> AnalysisOptions {
    AnalysisOptions::default()
}

fn run(p: &RegressionProblem) -> AnalysisReport {
    analyze(p, &opts()).expect("analysis failed")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

struct Noisy {
    fraction: f64,
    xy: AnalysisReport,
    x: AnalysisReport,
}

fn noisy_ikeda() -> Noisy {
    let series = ikeda(NOISE, NOISY_SEED);
    let (_, sx) = mean_std(series.column("x").unwrap());
    Noisy {
        fraction: NOISE / sx,
        xy: run(&ikeda_xy(&series)),
        x: run(&ikeda_x(&series)),
    }
}

fn c1_unconditional() -> Outcome {
    let sets: Vec<(&str, Dataset)> = vec![
        ("ikeda", ikeda(0.0, 0)),
        ("ikeda-noisy", ikeda(NOISE, NOISY_SEED)),
        ("henon", gen_henon(&HenonConfig::default()).unwrap()),
        ("lorenz", gen_lorenz(&LorenzConfig::default()).unwrap()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, series) in &sets {
        let series = truncate(series, 2000);
        let p = build_lag_problem(&series, &EmbeddingSpec::delay("x", 0)).unwrap();
        let (r, t) = timed(|| run(&p));
        let nl = r.sigma_nl_fractional();
        ok &= (0.97..=1.03).contains(&nl) && t < Duration::from_secs(5);
        parts.push(format!("{name} {nl:.4} ({:.2}s)", t.as_secs_f64()));
    }
    check(ok, parts.join(", "))
}

fn truncate(series: &Dataset, n: usize) -> Dataset {
    let cols = series
        .columns()
        .iter()
        .map(|c| c[..n.min(c.len())].to_vec())
        .collect();
    Dataset::new(series.names().to_vec(), cols).unwrap()
}

fn c2_nonlinearity() -> Outcome {
    let r = run(&ikeda_xy(&ikeda(0.0, 0)));
    let (lr, nl) = (r.sigma_lr_fractional(), r.sigma_nl_fractional());
    check(
        (lr - 0.887).abs() <= 0.03 && nl <= 0.02 && lr - nl > 0.8,
        format!("LR {lr:.4}, NL {nl:.4}, gap {:.4}", lr - nl),
    )
}

fn c3_noise_recovery(n: &Noisy) -> Outcome {
    let nl = n.xy.sigma_nl_fractional();
    let sigma = n.xy.estimate.erf_sigma.unwrap_or(f64::NAN);
    let misfit = n.xy.estimate.erf_rms_misfit.unwrap_or(f64::NAN);
    let misfit4 = n.x.estimate.erf_rms_misfit.unwrap_or(f64::NAN);
    check(
        (0.040..=0.045).contains(&n.fraction)
            && (0.03..=0.06).contains(&nl)
            && (0.035..=0.06).contains(&sigma)
            && misfit < 2.0 * misfit4,
        format!(
            "noise fraction {:.4}, NL {nl:.4}, erf sigma {sigma:.4}, misfit {misfit:.4} (vs {misfit4:.4})",
            n.fraction
        ),
    )
}

fn c4_non_gaussian(n: &Noisy) -> Outcome {
    let m3 = n.xy.estimate.erf_rms_misfit.unwrap_or(f64::NAN);
    let m4 = n.x.estimate.erf_rms_misfit.unwrap_or(f64::NAN);
    let sigma = n.x.estimate.erf_sigma.unwrap_or(f64::NAN);
    check(
        m4 >= 3.0 * m3 && (0.6..=0.85).contains(&sigma),
        format!("misfit {m4:.4} = {:.2}x, erf sigma {sigma:.4}", m4 / m3),
    )
}

fn nl_column(series: &Dataset) -> (nlnoise::ScanReport, Vec<f64>) {
    let r = embedding_scan(series, "x", 5, DEFAULT_STOP_THRESHOLD, &opts()).unwrap();
    let nl = r
        .rows
        .iter()
        .map(|r| r.sigma_nl_fractional.unwrap_or(f64::NAN))
        .collect();
    (r, nl)
}

fn fmt(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn c5_ikeda_embedding() -> Outcome {
    let (r, nl) = nl_column(&ikeda(0.0, 0));
    check(
        r.chosen_de == Some(5) && nl[4] <= 0.06 && nl[4] - nl[5] <= DEFAULT_STOP_THRESHOLD,
        format!("NL {}, d_E {:?}", fmt(&nl), r.chosen_de),
    )
}

fn c6_lorenz_embedding() -> Outcome {
    let (r, nl) = nl_column(&gen_lorenz(&LorenzConfig::default()).unwrap());
    let lr3 = r.rows[3].sigma_lr_fractional.unwrap_or(f64::NAN);
    check(
        r.chosen_de == Some(4) && nl[3] <= 0.05 && (0.58..=0.70).contains(&lr3),
        format!("NL {}, LR(k=3) {lr3:.4}, d_E {:?}", fmt(&nl), r.chosen_de),
    )
}

fn c7_oracle() -> Outcome {
    let mut u = Uniform::new(2024);
    let mut mismatches = 0;
    for inst in 0..20 {
        let d = [0, 1, 3][inst % 3];
        let n = 2 + u.below(199);
        let p = random_problem(n, d, 0.1, 500 + inst as u64);
        let g = accumulate_pairs(&p, &GridConfig::default()).unwrap();
        let (eps, delta) = (g.eps_edges(), g.delta_edges());
        let mut joint = vec![0u64; eps.len() * delta.len()];
        for a in 0..n {
            for b in a + 1..n {
                let dy = (p.y()[a] - p.y()[b]).abs();
                let dx = max_norm(p.row(a), p.row(b));
                for (i, &e) in eps.iter().enumerate() {
                    for (j, &dl) in delta.iter().enumerate() {
                        if dy <= e && dx <= dl {
                            joint[i * delta.len() + j] += 1;
                        }
                    }
                }
            }
        }
        let same = (0..eps.len())
            .all(|i| (0..delta.len()).all(|j| g.joint(i, j) == joint[i * delta.len() + j]));
        if !same {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("20 instances, {mismatches} mismatches"),
    )
}

fn c8_quadrature() -> Outcome {
    let mut worst = 0.0f64;
    let mut identity = true;
    for sigma in [0.05, 0.5, 2.0] {
        let n = 400;
        let (lo, hi) = ((sigma * 1e-3f64).ln(), (sigma * 20.0f64).ln());
        let eps: Vec<f64> = (0..n)
            .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
            .collect();
        let p = eps.iter().map(|e| libm::erf(e / (2.0 * sigma))).collect();
        let c = ProbabilityCurve::from_samples(eps, p);
        let v = variance_integral(&c);
        worst = worst.max(((v - sigma * sigma) / (sigma * sigma)).abs());
        identity &= moment(&c, 2) == 2.0 * v;
    }
    check(
        worst < 1e-3 && identity,
        format!("worst relative error {worst:.2e}, moment(2) identity {identity}"),
    )
}

fn c9_cross_check() -> Outcome {
    let o = AnalysisOptions {
        standardize: false,
        ..opts()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, sigma) in [0.01, 0.1, 1.0].into_iter().enumerate() {
        let p = noise_problem(2000, sigma, 900 + k as u64);
        let e = analyze(&p, &o).unwrap().estimate;
        let direct = e.sigma2_direct.unwrap();
        let se = (e.sigma2_nl_stderr.powi(2) + e.sigma2_direct_stderr.unwrap().powi(2)).sqrt();
        let z = (direct - e.sigma2_nl).abs() / se;
        ok &= z <= 2.0;
        parts.push(format!("sigma {sigma}: {z:.3} se"));
    }
    check(ok, parts.join(", "))
}

fn c10_determinism() -> Outcome {
    let p = ikeda_xy(&ikeda(0.0, 0)).standardize().unwrap();
    let grids: Vec<_> = [1, 2, 8]
        .iter()
        .map(|&w| accumulate_pairs_with_workers(&p, &GridConfig::default(), w).unwrap())
        .collect();
    let direct: Vec<_> = [1, 2, 8]
        .iter()
        .map(|&w| direct_variance_with_workers(&p, &grids[0], 50, w).unwrap())
        .collect();
    let same_grid = grids.iter().all(|g| *g == grids[0]);
    let same_direct = direct
        .iter()
        .all(|d| d.sigma2.to_bits() == direct[0].sigma2.to_bits());
    check(
        same_grid && same_direct,
        format!("grids identical {same_grid}, direct estimate identical {same_direct}"),
    )
}

fn c11_performance() -> Outcome {
    let p = ikeda_xy(&ikeda(0.0, 0));
    let o = AnalysisOptions {
        workers: 1,
        ..opts()
    };
    let (r, t) = timed(|| analyze(&p, &o));
    let complete = r.map(|r| r.estimate.erf_sigma.is_some()).unwrap_or(false);
    check(
        complete && t < Duration::from_secs(10),
        format!("N={} d=2, one worker, {:.2}s", p.len(), t.as_secs_f64()),
    )
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let noisy = noisy_ikeda();
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("unconditional consistency", Box::new(c1_unconditional)),
        ("Ikeda nonlinearity signal", Box::new(c2_nonlinearity)),
        (
            "Ikeda noise recovery",
            Box::new(|| c3_noise_recovery(&noisy)),
        ),
        (
            "non-Gaussian residual signal",
            Box::new(|| c4_non_gaussian(&noisy)),
        ),
        ("Ikeda embedding dimension", Box::new(c5_ikeda_embedding)),
        ("Lorenz embedding dimension", Box::new(c6_lorenz_embedding)),
        ("pair-count oracle equivalence", Box::new(c7_oracle)),
        ("analytic quadrature", Box::new(c8_quadrature)),
        ("estimator cross-check", Box::new(c9_cross_check)),
        ("parallel determinism", Box::new(c10_determinism)),
        ("performance", Box::new(c11_performance)),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
