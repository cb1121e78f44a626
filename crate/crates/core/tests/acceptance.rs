//! One pass/fail line per acceptance criterion. Each check uses its own
//! oracle computation rather than the library's derived fields.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schottky_core::certificate::{disjoint_pair, random_loxodromic, verify_certificate};
use schottky_core::dimension::{critical_lower_bound, lower_bound_from_displacements, partner_bound, series_estimate};
use schottky_core::gaps::generator_with_centers;
use schottky_core::hyperbolic::{apply_halfspace, plane_from_sphere, to_ball, BallPoint};
use schottky_core::marking::{random_marking, scaled_template, template_marking};
use schottky_core::normalize::{
    annulus_powers, gamma_pass, group_preservation_error, max_distance, random_conjugator, scramble, search_classical,
    AnnulusConvention, SearchOptions, SearchStatus,
};
use schottky_core::words::{enumerate_words, word_to_map, DEFAULT_WORD_BUDGET};
use schottky_core::{ExtComplex, GroupFile, HalfSpacePoint, Marking, MoebiusMap, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn with_fixed_points(p: C64, q: C64, lambda: C64) -> MoebiusMap {
    // sends p -> 0, q -> infinity
    let s = MoebiusMap::new(c(1.0, 0.0), -p, c(1.0, 0.0), -q).unwrap();
    MoebiusMap::diagonal(lambda).unwrap().conjugate_by(&s.inverse())
}

fn certificate_formula() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_formula, mut worst_gap, mut failures) = (0.0f64, f64::INFINITY, 0usize);
    for _ in 0..1000 {
        let g = random_loxodromic(&mut rng, (0.1, 5.0), (2.05, 50.0));
        let cert = disjoint_pair(&g).unwrap();
        // oracle: multiplier and fixed points straight from the matrix
        let tr = g.trace();
        let s = (tr * tr - 4.0).sqrt();
        let l = ((tr + s) / 2.0).norm().max(((tr - s) / 2.0).norm());
        let amd = g.a() - g.d();
        let (p, q) = ((amd + s) / (2.0 * g.c()), (amd - s) / (2.0 * g.c()));
        let expected = (p - q).norm() * 2.0 * l / (l * l - 1.0);
        let sum = cert.repelling.radius + cert.attracting.radius;
        worst_formula = worst_formula.max((sum - expected).abs() / expected);
        let gap = (cert.repelling.center - cert.attracting.center).norm() - sum;
        worst_gap = worst_gap.min(gap / sum);
        // oracle mapping probe: boundary of the repelling circle lands on the attracting circle
        let mut ok = gap > 0.0 && verify_certificate(&cert, 64).verified;
        for k in 0..64 {
            let z = cert.repelling.center + C64::from_polar(cert.repelling.radius, k as f64 * TAU / 64.0);
            let w = g.apply(ExtComplex::Finite(z)).finite().unwrap();
            let off = ((w - cert.attracting.center).norm() - cert.attracting.radius).abs();
            ok &= off <= 1e-8 * (1.0 + cert.attracting.radius + cert.attracting.center.norm());
        }
        if !ok || (sum - expected).abs() > 1e-9 * expected {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs <= 5.0,
        format!(
            "1000 maps, worst relative formula residual {worst_formula:.2e}, smallest relative gap {worst_gap:.3e}, failures {failures}, {secs:.2}s"
        ),
    )
}

fn template_numbers() -> Outcome {
    let g = with_fixed_points(c(1.0, 0.0), c(-1.0, 0.0), c(2.0, 0.0));
    let cert = disjoint_pair(&g).unwrap();
    let r = (cert.repelling.radius - 4.0 / 3.0).abs().max((cert.attracting.radius - 4.0 / 3.0).abs());
    let sep = (cert.repelling.center - cert.attracting.center).norm();
    let e = r.max((sep - 10.0 / 3.0).abs());
    outcome(
        e <= 1e-12,
        format!(
            "radii {:.15}, {:.15}, separation {sep:.15}, max error {e:.1e}",
            cert.repelling.radius, cert.attracting.radius
        ),
    )
}

fn lower_bound_equalities() -> Outcome {
    let d2 = lower_bound_from_displacements(&[3f64.ln(), 3f64.ln()]).unwrap().d_low;
    let d3 = lower_bound_from_displacements(&[5f64.ln(); 3]).unwrap().d_low;
    let mut worst: f64 = 0.0;
    for &(dim, d) in &[(0.2, 1.0), (0.5, 3.0), (1.0, 3f64.ln()), (1.3, 0.4), (1.9, 7.0)] {
        let x: f64 = dim * d;
        let rank_two = ((x.exp() + 3.0) / (x.exp() - 1.0)).ln() / dim;
        worst = worst.max((partner_bound(dim, d, 2).unwrap() - rank_two).abs());
    }
    let pass = (d2 - 1.0).abs() <= 1e-10 && (d3 - 1.0).abs() <= 1e-10 && worst <= 1e-12;
    outcome(pass, format!("k=2: {d2:.13}, k=3: {d3:.13}, partner bound vs rank-2 form {worst:.1e}"))
}

fn suite_markings() -> Vec<Marking> {
    (0..20u64)
        .map(|i| {
            let k = 2 + (i % 3) as usize;
            let radius = [0.3, 0.6, 1.0, 1.5][(i % 4) as usize];
            random_marking(k, 100 + i, radius).unwrap()
        })
        .collect()
}

fn bound_ordering() -> Outcome {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut bad = 0;
    let mut unverified = 0;
    for mk in suite_markings() {
        if !mk.verify(1e-9).unwrap().verified {
            unverified += 1;
        }
        let x = HalfSpacePoint::j();
        let low = critical_lower_bound(&mk.generators, &x).unwrap().d_low;
        let est = series_estimate(&mk.generators, &x, 10, DEFAULT_WORD_BUDGET).unwrap();
        worst = worst.max(low - est.d_series);
        if low > est.d_series + 0.05 {
            bad += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad == 0 && unverified == 0 && secs <= 60.0,
        format!("20 markings (ranks 2-4), max D_low - D_series = {worst:.4}, violations {bad}, unverified {unverified}, {secs:.1}s"),
    )
}

fn containment() -> Outcome {
    let mut markings = vec![template_marking(), scaled_template(0.5).unwrap(), scaled_template(0.1).unwrap()];
    markings.extend(suite_markings());
    let (mut checked, mut violations, mut words) = (0, 0, 0u64);
    for mk in markings.iter().filter(|m| m.verify(1e-9).unwrap().verified) {
        checked += 1;
        for w in enumerate_words(mk.rank(), 5, DEFAULT_WORD_BUDGET).unwrap() {
            let m = word_to_map(&w, &mk.generators).unwrap();
            // oracle: attracting fixed point from the eigenvector of the larger eigenvalue
            let tr = m.trace();
            let s = (tr * tr - 4.0).sqrt();
            let mu = if ((tr + s) / 2.0).norm() >= ((tr - s) / 2.0).norm() { (tr + s) / 2.0 } else { (tr - s) / 2.0 };
            let z = if m.c().norm() > 1e-300 {
                ExtComplex::Finite((mu - m.d()) / m.c())
            } else if (m.a() - mu).norm() < 1e-12 * mu.norm() {
                ExtComplex::Infinity
            } else {
                ExtComplex::Finite(m.b() / (mu - m.a()))
            };
            words += 1;
            if !mk.union_contains(z) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && checked == markings.len(),
        format!("{checked} markings, {words} words, {violations} violations"),
    )
}

fn ball_projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let lambda = C64::from_polar(rng.gen_range(1.2..5.0), rng.gen_range(0.0..TAU));
        let spin = MoebiusMap::diagonal(C64::from_polar(1.0, rng.gen_range(0.0..TAU))).unwrap();
        let g = MoebiusMap::diagonal(lambda).unwrap().conjugate_by(&spin);
        for (map, expected) in [(g, 1.0 / lambda.norm()), (g.inverse(), lambda.norm())] {
            // isometric sphere = bisector of the origin and map^{-1}(origin)
            let p = to_ball(&apply_halfspace(&map.inverse(), &HalfSpacePoint::j()));
            let pn = p.norm_sqr().sqrt();
            let axis = [p.x / pn, p.y / pn, p.z / pn];
            let cn = 1.0 / pn;
            let height = 1.0 / cn;
            let ring = (1.0 - height * height).sqrt();
            let u = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dot = u[0] * axis[0] + u[1] * axis[1] + u[2] * axis[2];
            let mut e1 = [u[0] - dot * axis[0], u[1] - dot * axis[1], u[2] - dot * axis[2]];
            let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
            e1.iter_mut().for_each(|v| *v /= n1);
            let e2 = [
                axis[1] * e1[2] - axis[2] * e1[1],
                axis[2] * e1[0] - axis[0] * e1[2],
                axis[0] * e1[1] - axis[1] * e1[0],
            ];
            for k in 0..32 {
                let (s, co) = (k as f64 * TAU / 32.0).sin_cos();
                let xi = BallPoint {
                    x: height * axis[0] + ring * (co * e1[0] + s * e2[0]),
                    y: height * axis[1] + ring * (co * e1[1] + s * e2[1]),
                    z: height * axis[2] + ring * (co * e1[2] + s * e2[2]),
                };
                let r = plane_from_sphere(&xi).modulus();
                worst = worst.max((r - expected).abs() / expected);
            }
        }
    }
    outcome(worst <= 1e-9, format!("20 maps x 2 spheres x 32 points, worst relative radius error {worst:.1e}"))
}

fn normalization_postconditions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut placement_failures, mut worst_replay, mut worst_words) = (0, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let lambda = C64::from_polar(rng.gen_range(1.1..6.0), rng.gen_range(0.0..TAU));
        let zeta = C64::from_polar(rng.gen_range(-6.0f64..6.0).exp(), rng.gen_range(0.0..TAU));
        let eta = C64::from_polar(rng.gen_range(-6.0f64..6.0).exp(), rng.gen_range(0.0..TAU));
        let tr = C64::from_polar(rng.gen_range(2.5..40.0), rng.gen_range(0.0..TAU));
        let Ok(beta) = generator_with_centers(zeta, eta, tr) else { continue };
        let (k, l) = annulus_powers(lambda, &beta, AnnulusConvention::Sec7).unwrap();
        let la = lambda.norm();
        let zm = zeta.norm() * la.powi(2 * k as i32);
        let em = eta.norm() * la.powi(-2 * l as i32);
        if !(1.0..la * la).contains(&zm) || !(1.0..la * la).contains(&em) {
            placement_failures += 1;
        }
        let alpha = MoebiusMap::diagonal(lambda).unwrap();
        let gens = [alpha, beta];
        let (out, trace) = gamma_pass(&gens, AnnulusConvention::Sec7).unwrap();
        worst_replay = worst_replay.max(max_distance(&trace.replay(&gens), &out));
        worst_words = worst_words.max(group_preservation_error(&gens, &out, &trace, 5, 6, &mut rng).unwrap());
    }
    outcome(
        placement_failures == 0 && worst_replay <= 1e-9 && worst_words <= 1e-8,
        format!("1000 pairs, placement failures {placement_failures}, replay {worst_replay:.1e}, word maps {worst_words:.1e}"),
    )
}

fn search_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut found, mut max_moves) = (0, 0);
    for _ in 0..50 {
        let h = random_conjugator(&mut rng);
        let base: Vec<MoebiusMap> = template_marking().generators.iter().map(|g| g.conjugate_by(&h)).collect();
        let n = rng.gen_range(0..=3);
        let (gens, _) = scramble(&base, n, &mut rng);
        let out = search_classical(&gens, SearchOptions::default()).unwrap();
        if out.status != SearchStatus::ClassicalFound || out.moves > 200 {
            continue;
        }
        // the verify path of the command line: serialize, parse, verify
        let text = out.marking.as_ref().unwrap().to_group_file().to_json();
        let mk = Marking::from_group_file(&GroupFile::from_json(&text).unwrap()).unwrap();
        if mk.verify(1e-9).unwrap().verified {
            found += 1;
            max_moves = max_moves.max(out.moves);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(found == 50 && secs <= 30.0, format!("{found}/50 recovered, max moves {max_moves}, {secs:.1}s"))
}

fn estimator_sanity() -> Outcome {
    let x = HalfSpacePoint::j();
    let g = MoebiusMap::diagonal(c(2.0, 0.3)).unwrap();
    let rank_one = series_estimate(&[g], &x, 12, DEFAULT_WORD_BUDGET).unwrap().d_series;
    let big = series_estimate(&scaled_template(0.5).unwrap().generators, &x, 10, DEFAULT_WORD_BUDGET).unwrap().d_series;
    let small =
        series_estimate(&scaled_template(0.25).unwrap().generators, &x, 10, DEFAULT_WORD_BUDGET).unwrap().d_series;
    outcome(
        rank_one <= 0.02 && small + 0.05 <= big,
        format!("rank one {rank_one:.4}; radius 0.5 -> {big:.4}, radius 0.25 -> {small:.4}"),
    )
}

type Check = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let checks: [Check; 9] = [
        ("certificate radius-sum formula, disjointness and probes", certificate_formula),
        ("template certificate radii and separation", template_numbers),
        ("lower-bound equality cases", lower_bound_equalities),
        ("lower bound below series estimate", bound_ordering),
        ("fixed points inside the disks", containment),
        ("isometric spheres project to circles of radii 1/|lambda|, |lambda|", ball_projection),
        ("annulus placement, replay and word equality", normalization_postconditions),
        ("classical marking recovery", search_recovery),
        ("estimator sanity", estimator_sanity),
    ];
    let mut failed = Vec::new();
    println!();
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        println!("AC{} {} {}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
