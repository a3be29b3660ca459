//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pbam_cli::{run_to_dir, Command, ScenarioConfig};
use pbam_core::algebra::{operator_norm, CMat};
use pbam_core::asymptotic::{compression_family, pbam_check, perturbed_hom, uniform_times, PbamConfig, SamplingGrid};
use pbam_core::composition::{operation_difference_margins, product_shift_margin};
use pbam_core::funcalc::{quasi_polar, theta, theta_taylor, verify_inverse_sqrt};
use pbam_core::random::{random_element, random_hermitian, stream_rng};
use pbam_core::{Algebra, Element, SqrtDomain, C64};
use rand::Rng;
use serde_json::Value;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Verdict {
    passed: bool,
    detail: String,
}

/// Collects named measurements against their limits.
#[derive(Default)]
struct Ledger {
    items: Vec<(String, bool)>,
}

impl Ledger {
    fn at_most(&mut self, what: &str, value: f64, limit: f64) {
        self.items.push((format!("{what} {value:.2e} <= {limit:.0e}"), value <= limit));
    }

    fn at_least(&mut self, what: &str, value: f64, limit: f64) {
        self.items.push((format!("{what} {value:.2e} >= {limit:.0e}"), value >= limit));
    }

    fn holds(&mut self, what: &str, ok: bool) {
        self.items.push((what.to_string(), ok));
    }

    fn within(&mut self, elapsed: Duration, limit: Duration) {
        self.items.push((format!("{:.1}s < {}s", elapsed.as_secs_f64(), limit.as_secs()), elapsed < limit));
    }

    fn verdict(self) -> Verdict {
        let passed = self.items.iter().all(|(_, ok)| *ok);
        let detail = self
            .items
            .iter()
            .map(|(s, ok)| if *ok { s.clone() } else { format!("{s} [violated]") })
            .collect::<Vec<_>>()
            .join("; ");
        Verdict { passed, detail }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mat(a: &Element) -> &CMat {
    a.as_matrix().expect("matrix element")
}

fn op(m: &CMat) -> f64 {
    operator_norm(m)
}

fn criterion_1() -> Res<Verdict> {
    let start = Instant::now();
    let alg = Algebra::matrix(4)?;
    let id = CMat::identity(4, 4);
    let mut rng = stream_rng(2024, 1);
    let (mut assoc, mut oracle, mut inverse, mut star) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut identity_exact = true;
    for _ in 0..1000 {
        let a = random_element(&alg, &mut rng, 0, 1.0)?;
        let b = random_element(&alg, &mut rng, 0, 1.0)?;
        let x = random_element(&alg, &mut rng, 0, 1.0)?;
        let ab = alg.quasi_product(&a, &b)?;
        let left = alg.quasi_product(&ab, &x)?;
        let right = alg.quasi_product(&a, &alg.quasi_product(&b, &x)?)?;
        assoc = assoc.max(op(&(mat(&left) - mat(&right))) / op(mat(&left)).max(1.0));
        // (1 + a)(1 + b) - 1 in the unitisation
        let unitised = (&id + mat(&a)) * (&id + mat(&b)) - &id;
        oracle = oracle.max(op(&(mat(&ab) - unitised)) / op(mat(&ab)).max(1.0));
        let zero = alg.zero();
        identity_exact &= alg.quasi_product(&a, &zero)?.bits_eq(&a) && alg.quasi_product(&zero, &a)?.bits_eq(&a);
        let small = random_element(&alg, &mut rng, 0, 0.5)?;
        let inv = alg.quasi_inverse(&small)?;
        inverse = inverse
            .max(op(mat(&alg.quasi_product(&small, &inv)?)))
            .max(op(mat(&alg.quasi_product(&inv, &small)?)));
        let rev = alg.quasi_product(&alg.star(&b)?, &alg.star(&a)?)?;
        star = star.max(op(&(mat(&alg.star(&ab)?) - mat(&rev))) / op(mat(&ab)).max(1.0));
    }
    let mut l = Ledger::default();
    l.at_most("associativity", assoc, 1e-12);
    l.at_most("unitisation oracle", oracle, 1e-13);
    l.holds("identity exact", identity_exact);
    l.at_most("|a•a'|_op", inverse, 1e-10);
    l.at_most("star reversal", star, 1e-14);
    l.within(start.elapsed(), Duration::from_secs(10));
    Ok(l.verdict())
}

/// The Hermitian samples shared by criteria 2 and 3.
fn hermitian_samples(alg: &Algebra) -> Res<Vec<Element>> {
    let mut rng = stream_rng(2024, 2);
    let mut out = Vec::with_capacity(500);
    while out.len() < 500 {
        let norm = rng.random_range(0.0..0.45);
        let h = random_hermitian(alg, &mut rng, 0, norm)?;
        if op(mat(&h)) < 0.45 {
            out.push(h);
        }
    }
    Ok(out)
}

/// `(1 + h)^{-1/2} - 1` through the eigendecomposition of `h`.
fn theta_by_eigen(h: &CMat) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|l| c((1.0 + l).powf(-0.5) - 1.0, 0.0));
    &eig.eigenvectors * CMat::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

fn criterion_2() -> Res<Verdict> {
    let start = Instant::now();
    let alg = Algebra::matrix(4)?;
    let dom = SqrtDomain::for_algebra(&alg);
    let (mut inverse_sqrt, mut eigen, mut taylor, mut over_bound) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut all_hold = true;
    for h in hermitian_samples(&alg)? {
        let report = verify_inverse_sqrt(&alg, &h, &dom, 1e-10)?;
        all_hold &= report.all_passed();
        inverse_sqrt = inverse_sqrt.max(report.max_defect());
        let th = theta(&alg, &h, &dom)?;
        eigen = eigen.max(op(&(mat(&th) - theta_by_eigen(mat(&h)))));
        let series = theta_taylor(&alg, &h, 60)?;
        let gap = op(&(mat(&th) - mat(&series.value)));
        taylor = taylor.max(gap);
        over_bound = over_bound.max(gap - series.remainder_bound);
    }
    let one = Algebra::matrix(1)?;
    let one_dom = SqrtDomain::for_algebra(&one);
    let mut rng = stream_rng(2024, 3);
    let mut scalar = 0.0f64;
    for _ in 0..200 {
        // |1 + z|^2 in (0.55, 1.45) keeps z* • z inside V
        let r = rng.random_range(0.55f64..1.45).sqrt();
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let z = C64::from_polar(r, phase) - 1.0;
        let u = quasi_polar(&one, &one.scalar(z), &one_dom)?;
        let want = (1.0 + z) / (1.0 + z).norm();
        scalar = scalar.max((1.0 + mat(&u)[(0, 0)] - want).norm());
    }
    let mut l = Ledger::default();
    l.holds("inverse square root properties hold", all_hold);
    l.at_most("inverse square root defect", inverse_sqrt, 1e-10);
    l.at_most("theta vs eigen oracle", eigen, 1e-12);
    l.at_most("theta vs taylor(60)", taylor, 1e-10);
    // the remainder bound is exact arithmetic; allow rounding of the two evaluations
    l.at_most("taylor gap - remainder bound", over_bound.max(0.0), 1e-13);
    l.at_most("scalar polar oracle", scalar, 1e-12);
    l.within(start.elapsed(), Duration::from_secs(10));
    Ok(l.verdict())
}

fn criterion_3() -> Res<Verdict> {
    let alg = Algebra::matrix(4)?;
    let dom = SqrtDomain::for_algebra(&alg);
    let id = CMat::identity(4, 4);
    let (mut defect, mut polar) = (0.0f64, 0.0f64);
    let mut violations = 0;
    for h in hermitian_samples(&alg)? {
        let b = alg.scale(c(0.25, 1.0), &h)?;
        let u = quasi_polar(&alg, &b, &dom)?;
        let d = alg.is_quasi_unitary(&u, 1e-9)?.defect;
        violations += usize::from(d > 1e-9);
        defect = defect.max(d);
        // unitary factor W V* of the singular value decomposition of 1 + b
        let svd = (&id + mat(&b)).svd(true, true);
        let w = svd.u.expect("u") * svd.v_t.expect("v*");
        polar = polar.max(op(&(&id + mat(&u) - w)));
    }
    let mut l = Ledger::default();
    l.at_most("quasi-unitary defect", defect, 1e-9);
    l.holds(&format!("{violations} violations"), violations == 0);
    l.at_most("1 + u vs SVD polar factor", polar, 1e-10);
    Ok(l.verdict())
}

fn criterion_4() -> Res<Verdict> {
    let start = Instant::now();
    let mut l = Ledger::default();
    for (k, alg) in [Algebra::matrix(4)?.with_levels(6)?, Algebra::smooth_circle(12, 6)?].iter().enumerate() {
        let mut rng = stream_rng(2024, 10 + k as u64);
        let (mut square_diff, mut op_diff, mut product_shift) = (f64::INFINITY, [f64::INFINITY; 4], f64::INFINITY);
        for _ in 0..1000 {
            let x: Vec<Element> = (0..5).map(|_| random_element(alg, &mut rng, 0, 1.0)).collect::<Result<_, _>>()?;
            let lambda = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let mu = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            for n in 0..=3 {
                square_diff = square_diff.min(alg.square_difference_margin(&x[0], &x[1], n)?);
                let m = operation_difference_margins(alg, &x[0], &x[1], &x[2], &x[3], lambda, mu, n)?;
                for (w, v) in op_diff.iter_mut().zip(m) {
                    *w = w.min(v);
                }
                product_shift = product_shift.min(product_shift_margin(alg, &x[0], &x[1], &x[4], n)?);
            }
        }
        let name = alg.id().to_string();
        l.at_least(&format!("{name} square difference"), square_diff, -1e-12);
        for (label, v) in ["star", "scalar", "add", "mul"].iter().zip(op_diff) {
            l.at_least(&format!("{name} operation difference {label}"), v, -1e-12);
        }
        l.at_least(&format!("{name} product shift"), product_shift, -1e-12);
    }
    l.within(start.elapsed(), Duration::from_secs(30));
    Ok(l.verdict())
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn read_csv(path: &Path) -> Res<Vec<BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect());
    }
    Ok(out)
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().expect("numeric column")
}

/// Multiplicative defect of `D_t T_K(·) D_t` on the pair `(z, z̄)` (or
/// `(z̄, z)`) in the normalised trace norm, evaluated directly.
fn toeplitz_mul_oracle(k: usize, t: f64, forward: bool) -> f64 {
    let w: Vec<f64> = (0..k).map(|j| (t - j as f64).clamp(0.0, 1.0)).collect();
    let shift = |down: bool| CMat::from_fn(k, k, |i, j| if (down && i == j + 1) || (!down && j == i + 1) { c(w[i] * w[j], 0.0) } else { c(0.0, 0.0) });
    let unit = CMat::from_fn(k, k, |i, j| if i == j { c(w[i] * w[i], 0.0) } else { c(0.0, 0.0) });
    let (x, y) = if forward { (shift(true), shift(false)) } else { (shift(false), shift(true)) };
    let d = x * y - unit;
    (d.iter().map(|v| v.norm_sqr()).sum::<f64>() / k as f64).sqrt()
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_5(suite: &Suite) -> Res<Verdict> {
    let start = Instant::now();
    let mut l = Ledger::default();

    let m8 = Algebra::matrix(8)?;
    let f = compression_family(&m8, 1.0)?;
    let mut rng = stream_rng(2024, 20);
    let elements = (0..4).map(|_| random_element(&m8, &mut rng, 0, 1.0)).collect::<Result<Vec<_>, _>>()?;
    let grid = SamplingGrid::new(uniform_times(0.5, 16.0)?, elements, (0..m8.levels()).collect())?;
    let report = pbam_check(&*f, &grid, &PbamConfig::default())?;
    let tail: Vec<_> = report.rows.iter().filter(|r| r.t >= 8.0).collect();
    let nonzero = tail
        .iter()
        .filter(|r| r.defect_star != 0.0 || r.defect_scalar != 0.0 || r.defect_add != 0.0 || r.defect_mul != 0.0)
        .count();
    l.holds(&format!("compression(8): {nonzero} of {} rows with t >= 8 nonzero", tail.len()), nonzero == 0 && !tail.is_empty());

    let m4 = Algebra::matrix(4)?;
    let g = perturbed_hom(&m4, 1.0)?;
    let mut rng = stream_rng(2024, 21);
    let elements = (0..4).map(|_| random_element(&m4, &mut rng, 0, 1.0)).collect::<Result<Vec<_>, _>>()?;
    let ts = uniform_times(0.25, 6.0)?.into_iter().filter(|t| *t >= 1.0).collect::<Vec<_>>();
    let grid = SamplingGrid::new(ts.clone(), elements, vec![0])?;
    let report = pbam_check(&*g, &grid, &PbamConfig::default())?;
    let mut worst = 0.0f64;
    for id in &grid.element_ids {
        let logs: Vec<f64> = report.rows.iter().filter(|r| &r.element_id == id).map(|r| r.defect_mul.ln()).collect();
        worst = worst.max((least_squares_slope(&ts, &logs) + 1.0).abs());
    }
    l.at_most("perturbed(1) |slope + 1|", worst, 0.2);

    let base = scenarios_dir().join("baselines");
    let (k16, k64) = (read_csv(&base.join("toeplitz16.csv"))?, read_csv(&base.join("toeplitz64.csv"))?);
    let mut oracle = 0.0f64;
    for (k, rows) in [(16, &k16), (64, &k64)] {
        for r in rows.iter() {
            let forward = r["element_id"] == "a0";
            oracle = oracle.max((num(r, "defect_mul") - toeplitz_mul_oracle(k, num(r, "t"), forward)).abs());
            for col in ["defect_star", "defect_scalar", "defect_add"] {
                oracle = oracle.max(num(r, col).abs());
            }
        }
    }
    l.at_most("frozen toeplitz baselines vs direct evaluation", oracle, 1e-12);
    let mut ratio_ok = k16.len() == k64.len();
    let mut ratio = 0.0f64;
    for (a, b) in k16.iter().zip(&k64) {
        ratio_ok &= a["t"] == b["t"] && a["element_id"] == b["element_id"];
        let (d16, d64) = (num(a, "defect_mul"), num(b, "defect_mul"));
        ratio_ok &= d64 <= 0.5 * d16;
        if d16 > 0.0 {
            ratio = ratio.max(d64 / d16);
        }
    }
    l.holds(&format!("toeplitz order 64 <= 0.5 x order 16 (max ratio {ratio})"), ratio_ok);
    let regenerated = suite
        .report("toeplitz-compression", "pbam")?["checks"]
        .as_array()
        .ok_or("checks")?
        .iter()
        .map(|c| c["baseline"]["max_deviation"].as_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    l.at_most("baselines regenerated", regenerated, 1e-12);
    l.within(start.elapsed() + suite.elapsed("toeplitz-compression", "pbam"), Duration::from_secs(60));
    Ok(l.verdict())
}

fn criterion_6(suite: &Suite) -> Res<Verdict> {
    let mut l = Ledger::default();
    let mut elapsed = Duration::ZERO;
    for scenario in ["exact-chain", "compression-chain"] {
        let r = suite.report(scenario, "retract")?;
        elapsed += suite.elapsed(scenario, "retract");
        for (k, check) in r["checks"].as_array().ok_or("checks")?.iter().enumerate() {
            let family = check["family"].as_str().unwrap_or("?");
            let stem = format!("retract-{k:02}-{family}");
            let reps = read_csv(&suite.dir(scenario).join(format!("{stem}-representatives.csv")))?;
            let sweep = read_csv(&suite.dir(scenario).join(format!("{stem}-alpha-homotopy.csv")))?;
            l.holds(&format!("{scenario}/{family} net of {}", reps.len()), reps.len() == 20);
            l.holds(&format!("{scenario}/{family} p-grid of {}", sweep.len() / reps.len().max(1)), sweep.len() == 20 * 11);
            l.at_most(
                &format!("{scenario}/{family} representative defect"),
                reps.iter().map(|r| num(r, "defect")).fold(0.0, f64::max),
                1e-8,
            );
            l.at_most(
                &format!("{scenario}/{family} alpha homotopy"),
                sweep.iter().map(|r| num(r, "defect")).fold(0.0, f64::max),
                1e-7,
            );
            if !check["pba_homotopy"].is_null() {
                l.holds(&format!("{scenario}/{family} pba homotopy of the compression blend"), check["pba_homotopy"]["passed"] == true);
            }
        }
    }
    l.holds("a pba homotopy was checked", {
        let r = suite.report("compression-chain", "retract")?;
        r["checks"].as_array().ok_or("checks")?.iter().any(|c| !c["pba_homotopy"].is_null())
    });
    l.within(elapsed, Duration::from_secs(60));
    Ok(l.verdict())
}

/// Non-decreasing on the sampled dots and with a non-negative tail.
fn monotone(phi: &Value) -> bool {
    if let Some(pieces) = phi["max_of"].as_array() {
        return pieces.iter().all(monotone);
    }
    let dots = phi["dots"].as_array().map(|d| d.iter().map(|p| (p[0].as_f64(), p[1].as_f64())).collect::<Vec<_>>());
    match dots {
        Some(d) => {
            d.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1) && phi["tail_slope"].as_f64().is_some_and(|s| s >= 0.0)
        }
        None => false,
    }
}

fn criterion_7(suite: &Suite) -> Res<Verdict> {
    let mut l = Ledger::default();
    let mut elapsed = Duration::ZERO;
    for (scenario, endpoint_tol) in [("exact-chain", 1e-8), ("compression-chain", 1e-8), ("perturbed-chain", 1e-4)] {
        elapsed += suite.elapsed(scenario, "compose") + suite.elapsed(scenario, "functoriality");
        for check in suite.report(scenario, "compose")?["checks"].as_array().ok_or("checks")? {
            let name = check["check"].as_str().unwrap_or("?");
            l.holds(&format!("{scenario} {name} search succeeded"), check["search_error"].is_null() && check["passed"] == true);
            l.holds(&format!("{scenario} {name} phi monotone"), monotone(&check["phi"]));
        }
        if scenario == "perturbed-chain" {
            let cfg = ScenarioConfig::load(&scenarios_dir().join("perturbed-chain.json"))?;
            l.holds(&format!("perturbed horizon {}", cfg.grid.horizon), cfg.grid.horizon == 20.0);
        }
        for check in suite.report(scenario, "functoriality")?["checks"].as_array().ok_or("checks")? {
            let name = check["check"].as_str().unwrap_or("?");
            l.holds(&format!("{scenario} {name} junctions exact"), check["junctions_exact"] == true);
            let gap = check["max_start_gap"].as_f64().unwrap_or(f64::INFINITY).max(check["max_end_gap"].as_f64().unwrap_or(f64::INFINITY));
            l.at_most(&format!("{scenario} {name} endpoints"), gap, endpoint_tol);
            l.holds(&format!("{scenario} {name} chain passed"), check["passed"] == true);
        }
    }
    l.within(elapsed, Duration::from_secs(180));
    Ok(l.verdict())
}

fn criterion_8(first: &Suite) -> Res<Verdict> {
    let second = Suite::run()?;
    let a = first.files()?;
    let b = second.files()?;
    let mut l = Ledger::default();
    l.holds(&format!("{} files in both runs", a.len()), a.len() == b.len() && !a.is_empty());
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k).collect();
    l.holds(&format!("{} files differ", differing.len()), differing.is_empty() && a.keys().eq(b.keys()));
    Ok(l.verdict())
}

/// One run of every command on every bundled scenario.
struct Suite {
    root: tempfile::TempDir,
    timings: BTreeMap<(String, String), Duration>,
    failures: Vec<String>,
}

impl Suite {
    fn run() -> Res<Self> {
        let root = tempfile::tempdir()?;
        let mut timings = BTreeMap::new();
        let mut failures = Vec::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(scenarios_dir())?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
        paths.sort();
        for path in paths {
            let name = path.file_stem().and_then(|s| s.to_str()).ok_or("scenario name")?.to_string();
            let cfg = ScenarioConfig::load(&path)?;
            for command in Command::ALL {
                let start = Instant::now();
                let outcome = run_to_dir(command, &cfg, &root.path().join(&name))?;
                timings.insert((name.clone(), command.name().to_string()), start.elapsed());
                if !outcome.passed {
                    failures.push(format!("{name}/{}", command.name()));
                }
            }
        }
        Ok(Self { root, timings, failures })
    }

    fn dir(&self, scenario: &str) -> PathBuf {
        self.root.path().join(scenario)
    }

    fn report(&self, scenario: &str, command: &str) -> Res<Value> {
        Ok(serde_json::from_slice(&fs::read(self.dir(scenario).join(format!("{command}.json")))?)?)
    }

    fn elapsed(&self, scenario: &str, command: &str) -> Duration {
        self.timings[&(scenario.to_string(), command.to_string())]
    }

    fn files(&self) -> Res<BTreeMap<String, Vec<u8>>> {
        let mut out = BTreeMap::new();
        for scenario in fs::read_dir(self.root.path())? {
            let scenario = scenario?;
            for file in fs::read_dir(scenario.path())? {
                let file = file?;
                let key = format!("{}/{}", scenario.file_name().to_string_lossy(), file.file_name().to_string_lossy());
                out.insert(key, fs::read(file.path())?);
            }
        }
        Ok(out)
    }
}

fn main() {
    let suite = match Suite::run() {
        Ok(s) => s,
        Err(e) => {
            println!("acceptance: bundled scenarios could not run: {e}");
            std::process::exit(1);
        }
    };
    if !suite.failures.is_empty() {
        println!("acceptance: failing scenario commands: {}", suite.failures.join(", "));
    }
    let criteria: Vec<(&str, Res<Verdict>)> = vec![
        ("quasi-group suite", criterion_1()),
        ("functional calculus", criterion_2()),
        ("quasi-polar retraction", criterion_3()),
        ("inequality suites", criterion_4()),
        ("PBAM evidence", criterion_5(&suite)),
        ("representatives and homotopies", criterion_6(&suite)),
        ("composition and functoriality", criterion_7(&suite)),
        ("determinism", criterion_8(&suite)),
    ];
    let mut all = suite.failures.is_empty();
    for (k, (title, verdict)) in criteria.into_iter().enumerate() {
        let (passed, detail) = match verdict {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= passed;
        println!("criterion {} {:<31} {}  {detail}", k + 1, title, if passed { "PASS" } else { "FAIL" });
    }
    if !all {
        std::process::exit(1);
    }
}
