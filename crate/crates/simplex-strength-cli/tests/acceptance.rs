//! Acceptance suite: every release-gating check at full scale, one test per
//! criterion. Each test prints a PASS line (visible with `--nocapture`):
//!
//! ```text
//! cargo test -p simplex-strength-cli --test acceptance -- --nocapture
//! ```

use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use simplex_strength::verify::{fd_gradient, flat_triangle, random_simplex};
use simplex_strength::{
    c_n_bound, lambda_bound, rencontre, run_lemma_suite, run_lipschitz_suite, signed_strength,
    squared_volume, strength_from_distances, triangle_strength_heron, PointCloudSimplex,
    TrialConfig,
};

fn simplex(vertices: &[&[f64]]) -> PointCloudSimplex {
    PointCloudSimplex::new(vertices.iter().map(|v| v.to_vec()).collect()).unwrap()
}

fn assert_rel(value: f64, expected: f64, rel: f64, what: &str) {
    let err = (value - expected).abs();
    assert!(
        err <= rel * expected.abs().max(value.abs()),
        "{what}: got {value}, expected {expected} (relative error {:.3e} > {rel:.1e})",
        err / expected.abs().max(1e-300)
    );
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simplex-strength"))
}

/// Closed-form spot checks at 1e-12 relative tolerance.
#[test]
fn criterion_1_closed_form_spot_checks() {
    // Unit segment: sigma = 2, signed = +/-2 with vertex order.
    let fwd = signed_strength(&simplex(&[&[0.0], &[1.0]])).unwrap();
    assert_rel(fwd.sigma, 2.0, 1e-12, "unit segment sigma");
    assert_rel(fwd.signed, 2.0, 1e-12, "unit segment signed");
    let rev = signed_strength(&simplex(&[&[1.0], &[0.0]])).unwrap();
    assert_rel(rev.signed, -2.0, 1e-12, "reversed segment signed");

    // Equilateral triangles of side a at three scales: sigma = a / 18.
    for a in [1.0, 1e-3, 1e3] {
        let h = a * 3f64.sqrt() / 2.0;
        let r = signed_strength(&simplex(&[&[0.0, 0.0], &[a, 0.0], &[a / 2.0, h]])).unwrap();
        assert_rel(r.sigma, a / 18.0, 1e-12, &format!("equilateral a={a}"));
    }

    // 3-4-5 right triangle: sigma = 1/6.
    let r = signed_strength(&simplex(&[&[0.0, 0.0], &[3.0, 0.0], &[0.0, 4.0]])).unwrap();
    assert_rel(r.sigma, 1.0 / 6.0, 1e-12, "3-4-5 sigma");

    // Regular tetrahedron, side 1: sigma = 1/17496.
    let t = simplex(&[
        &[0.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0],
        &[0.5, 3f64.sqrt() / 2.0, 0.0],
        &[0.5, 3f64.sqrt() / 6.0, 6f64.sqrt() / 3.0],
    ]);
    let r = signed_strength(&t).unwrap();
    assert_rel(r.sigma, 1.0 / 17496.0, 1e-12, "tetrahedron sigma");

    println!("criterion 1 (closed-form spot checks): PASS");
}

/// Squared volume from distances agrees with the coordinate-determinant
/// oracle, and the Heron path agrees with the general path.
#[test]
fn criterion_2_oracle_equivalence() {
    let mut worst_vol: f64 = 0.0;
    for n in 1..=5usize {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + n as u64);
        let factorial: f64 = (2..=n).fold(1.0, |acc, k| acc * k as f64);
        for _ in 0..10_000 {
            let s = random_simplex(n, 1.0, 1.0, &mut rng);
            let oracle = (s.edge_matrix_det() / factorial).powi(2);
            let d = s.pairwise_distances();
            let via_distances = squared_volume(&d).unwrap();
            // Thin simplices make both routes ill-conditioned relative to
            // their own tiny values; the agreement floor is a 1e-10 fraction
            // of the determinant's natural scale.
            let p = d.half_perimeter();
            let scale = (2.0 * p / n as f64).powi(2 * n as i32)
                / (2f64.powi(n as i32) * factorial * factorial);
            let err = (via_distances - oracle).abs()
                / via_distances.abs().max(oracle.abs()).max(1e-2 * scale);
            worst_vol = worst_vol.max(err);
            assert!(
                err <= 1e-8,
                "n={n}: vol^2 routes disagree: {via_distances} vs {oracle}"
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    for _ in 0..10_000 {
        let t = random_simplex(2, 1.0, 1.0, &mut rng);
        let d = t.pairwise_distances();
        let heron = triangle_strength_heron(d.get(0, 1), d.get(0, 2), d.get(1, 2)).unwrap();
        let general = strength_from_distances(&d).unwrap();
        // Needle triangles cap the achievable agreement at an absolute
        // ~u*p floor (the p - c difference rounds in either route).
        let err = (heron - general).abs()
            / heron
                .abs()
                .max(general.abs())
                .max(1e-4 * d.half_perimeter());
        assert!(err <= 1e-10, "heron {heron} vs general {general}");
    }

    println!("criterion 2 (oracle equivalence, worst vol^2 error {worst_vol:.2e}): PASS");
}

/// 1e5 random simplices per dimension produce zero violations of the three
/// determinant/edge bounds; the 1-D determinant ratio is exactly 8.
#[test]
fn criterion_3_lemma_suites() {
    for n in 1..=4usize {
        let cfg = TrialConfig {
            trials: 100_000,
            seed: 300 + n as u64,
            ..TrialConfig::new(n)
        };
        let report = run_lemma_suite(&cfg).unwrap();
        assert!(report.pass, "lemma suite failed for n={n}: {report:?}");
        for check in &report.checks {
            assert_eq!(check.violations, 0, "n={n}, check {}", check.name);
        }
        if n == 1 {
            let det = report.check("det_ratio").unwrap();
            assert_eq!(
                det.max_observed, 8.0,
                "1-D determinant ratio must be exactly 8"
            );
            assert_eq!(det.bound, 8.0);
        }
    }
    println!("criterion 3 (determinant/edge bound suites, 4 x 1e5 trials): PASS");
}

/// Finite-difference gradient norm of the triangle strength never exceeds
/// 2 sqrt(3) + 1e-3 over 10,000 random triangles.
#[test]
fn criterion_4_gradient_bound() {
    let bound = 2.0 * 3f64.sqrt() + 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let mut max_norm: f64 = 0.0;
    let mut skipped = 0u32;
    for _ in 0..10_000 {
        let t = random_simplex(2, 1.0, 1.0, &mut rng);
        let d = t.pairwise_distances();
        let grad = fd_gradient(&d, 1e-6 * d.half_perimeter());
        let mut norm_sq = 0.0;
        for entry in &grad {
            match entry {
                Some(g) => norm_sq += g * g,
                None => skipped += 1,
            }
        }
        let norm = norm_sq.sqrt();
        max_norm = max_norm.max(norm);
        assert!(norm <= bound, "gradient norm {norm} exceeds {bound}");
    }
    // Stencils straddling the realizability boundary are skipped; vol^2 is
    // quadratic in thinness, so the skip region has width ~sqrt(h) ~ 1e-3 of
    // shape space. Cap well above the expected ~0.2% of entries.
    assert!(
        skipped <= 150,
        "too many skipped finite-difference entries: {skipped}"
    );
    println!("criterion 4 (gradient norm <= 2*sqrt(3)+1e-3, max observed {max_norm:.6}): PASS");
}

/// 1e5 perturbation pairs per dimension satisfy both Lipschitz inequalities
/// with the stated constants; the near-degenerate fraction is at least 20%
/// and sign crossings are exercised. Differences in the (2, 4] lambda-eps
/// band are flagged, never silently failed.
#[test]
fn criterion_5_lipschitz_bounds() {
    assert_eq!(lambda_bound(1), 2.0);
    assert_eq!(lambda_bound(2), 3f64.sqrt());
    assert!((lambda_bound(3) - 0.209513).abs() <= 1e-6);

    for n in 1..=3usize {
        let cfg = TrialConfig {
            trials: 100_000,
            seed: 500 + n as u64,
            near_degenerate_fraction: 0.25,
            ..TrialConfig::new(n)
        };
        let report = run_lipschitz_suite(&cfg).unwrap();
        assert!(report.pass, "lipschitz suite failed for n={n}");
        let sigma = report.check("sigma_lipschitz").unwrap();
        let signed = report.check("signed_lipschitz").unwrap();
        assert_eq!(sigma.violations, 0, "n={n}");
        assert_eq!(signed.violations, 0, "n={n}");
        assert_eq!(sigma.bound, lambda_bound(n));

        let near = report.counter("near_degenerate_trials");
        assert!(near >= 20_000, "n={n}: only {near} near-degenerate trials");
        let crossings = report.counter("sign_crossings");
        assert!(crossings >= 5_000, "n={n}: only {crossings} sign crossings");

        // Flags are surfaced in the report and do not fail the run.
        let flagged = report.counter("flagged_signed_band");
        println!(
            "  n={n}: max sigma ratio {:.4e} vs lambda {:.4e}, {crossings} crossings, \
             {flagged} flagged",
            sigma.max_observed, sigma.bound
        );
    }
    println!("criterion 5 (Lipschitz perturbation suites, 3 x 1e5 pairs): PASS");
}

/// The wide flat triangle family: strength stays below eps/2 at every
/// sample, while the signed area changes at the unbounded rate l.
#[test]
fn criterion_6_adversarial_family() {
    for l in [1.0, 1e3, 1e6] {
        for k in 0..50 {
            // 50 log-spaced heights in (0, l], from 1e-8 l up to l.
            let eps = l * 10f64.powf(-8.0 + 8.0 * k as f64 / 49.0);
            let r = signed_strength(&flat_triangle(l, eps)).unwrap();
            assert!(
                r.sigma <= eps / 2.0 * (1.0 + 1e-12),
                "sigma {} exceeds eps/2 = {} at l={l}, eps={eps}",
                r.sigma,
                eps / 2.0
            );
        }

        // Negative result for the raw area: its change rate equals l, so no
        // constant bounds it uniformly in l — the reason the area itself is
        // not Lipschitz while the strength is.
        let eps = 1e-9 * l;
        let area = |s: &PointCloudSimplex| s.edge_matrix_det() / 2.0;
        let rate = (area(&flat_triangle(l, eps)) - area(&flat_triangle(l, 0.0).clone())) / eps;
        assert_rel(rate, l, 1e-12, "area change rate");
    }
    let rate_at_large_l = {
        let l = 1e6;
        let eps = 1e-3;
        (flat_triangle(l, eps).edge_matrix_det() / 2.0) / eps
    };
    assert!(
        rate_at_large_l >= 1e5,
        "area rate should grow without bound"
    );
    println!("criterion 6 (flat-triangle family, area rate {rate_at_large_l:.1e}): PASS");
}

/// Rencontre values, the nearest-integer property, the c_n < b_n chain, and
/// the dimension-3 constant below 0.37.
#[test]
fn criterion_7_bound_table() {
    assert_eq!(
        (2..=5u32)
            .map(|n| rencontre(n).unwrap())
            .collect::<Vec<_>>(),
        vec![1, 2, 9, 44]
    );
    for n in 1..=12u32 {
        let factorial: f64 = (2..=n).fold(1.0, |acc, k| acc * f64::from(k));
        let nearest = (factorial / std::f64::consts::E).round() as u128;
        assert_eq!(
            rencontre(n).unwrap(),
            nearest,
            "nearest-integer property at n={n}"
        );
    }
    for n in 3..=10usize {
        assert!(
            c_n_bound(n).unwrap() < lambda_bound(n),
            "c_n >= b_n at n={n}"
        );
    }
    assert!(lambda_bound(3) < 0.37);
    println!("criterion 7 (bound table): PASS");
}

/// Grid output peaks at the (1, 0) cell with value 1/18; curve endpoints
/// match the closed-form sections.
#[test]
fn criterion_8_figure_reproduction() {
    let dir = TempDir::new().unwrap();

    let grid = dir.path().join("grid.csv");
    let out = bin()
        .args([
            "grid",
            "--resolution",
            "200",
            "--output",
            grid.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for line in std::fs::read_to_string(&grid).unwrap().lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        let (x, y, sigma) = (v[0], v[1], v[2]);
        assert!(
            x >= y && x + y <= 1.0 + 1e-12,
            "cell outside region: {line}"
        );
        assert!(sigma >= 0.0);
        if sigma > best.0 {
            best = (sigma, x, y);
        }
    }
    assert_eq!(
        (best.1, best.2),
        (1.0, 0.0),
        "maximum not at the equilateral corner"
    );
    assert!(
        (best.0 - 1.0 / 18.0).abs() <= 1e-6,
        "corner value {} differs from 1/18",
        best.0
    );

    let parse_curve = |name: &str, section: &str, samples: &str| -> Vec<(f64, f64)> {
        let path = dir.path().join(name);
        let out = bin()
            .args([
                "curves",
                "--section",
                section,
                "--samples",
                samples,
                "--output",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let v: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
                (v[0], v[1])
            })
            .collect()
    };

    // 101 samples over [0, 1] puts lattice points exactly at 0.5 and 1.
    let bc = parse_curve("bc.csv", "b-eq-c", "101");
    assert_eq!(bc.len(), 101);
    let at = |curve: &[(f64, f64)], x: f64| -> f64 {
        curve
            .iter()
            .find(|(cx, _)| *cx == x)
            .unwrap_or_else(|| panic!("no sample at x={x}"))
            .1
    };
    assert_rel(at(&bc, 1.0), 1.0 / 18.0, 1e-12, "b-eq-c endpoint");
    assert_eq!(at(&bc, 0.5), 0.03, "b-eq-c at 0.5 is exactly 0.03");

    let ab = parse_curve("ab.csv", "a-eq-b", "101");
    assert_eq!(at(&ab, 0.5), 0.0, "a-eq-b starts at the degenerate zero");
    assert_rel(at(&ab, 1.0), 1.0 / 18.0, 1e-12, "a-eq-b endpoint");

    println!("criterion 8 (figure data reproduction): PASS");
}

/// Two verify runs with identical flags produce byte-identical reports,
/// with parallel trial execution enabled (the default build).
#[test]
fn criterion_9_determinism() {
    let dir = TempDir::new().unwrap();
    let mut contents = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let out = bin()
            .args([
                "verify",
                "--dim",
                "2",
                "--trials",
                "20000",
                "--seed",
                "7",
                "--scale",
                "1.0",
                "--eps",
                "1e-6:1e-1",
                "--near-degenerate-fraction",
                "0.25",
                "--report",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "verify run failed");
        contents.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(
        contents[0], contents[1],
        "reports differ between identical runs"
    );
    println!("criterion 9 (byte-identical reports): PASS");
}
