//! Planner math against independent reference computations.

use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wisprkit::planner::{
    fit_price_model, link_cost, max_capacity_redesign, min_cost_redesign, multiplicity_cost, optimal_multiplicity,
    read_candidates_csv, read_price_csv, topology_cost, PriceModel, PricePoint, SpectrumBudget,
};
use wisprkit::topo::{load_topology, network_capacity};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// Least squares through the 3x3 normal equations, solved by Gaussian
/// elimination with partial pivoting on x scaled to thousands.
fn normal_equations_fit(points: &[(f64, f64)]) -> [f64; 3] {
    let s = 1000.0;
    let mut m = [[0.0f64; 4]; 3];
    for &(c, y) in points {
        let x = c / s;
        let row = [x * x, x, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * y;
        }
    }
    for col in 0..3 {
        let p = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, p);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                let pivot = m[col];
                for (k, v) in m[r].iter_mut().enumerate().skip(col) {
                    *v -= f * pivot[k];
                }
            }
        }
    }
    let sol = [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]];
    [sol[0] / (s * s), sol[1] / s, sol[2]]
}

fn horner(m: &PriceModel, c: f64) -> f64 {
    (m.alpha * c + m.beta) * c + m.gamma
}

fn points(rows: &[(f64, f64)]) -> Vec<PricePoint> {
    rows.iter().map(|&(c, y)| PricePoint { vendor: "t".into(), model: format!("m{c}"), capacity: c, cost: y }).collect()
}

#[test]
fn bundled_fit_matches_normal_equations() {
    let pts = read_price_csv(data("prices.csv")).unwrap();
    let m = fit_price_model(&pts).unwrap();
    let rows: Vec<(f64, f64)> = pts.iter().map(|p| (p.capacity, p.cost)).collect();
    let [a, b, g] = normal_equations_fit(&rows);
    assert!((m.alpha - a).abs() <= 1e-9 * a.abs().max(1e-12), "{} vs {a}", m.alpha);
    assert!((m.beta - b).abs() <= 1e-7 * b.abs().max(1.0), "{} vs {b}", m.beta);
    assert!((m.gamma - g).abs() <= 1e-7 * g.abs().max(1.0), "{} vs {g}", m.gamma);
    assert!(m.r_squared > 0.99 && m.r_squared <= 1.0);
}

#[test]
fn random_fits_match_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (a, b, g) = (rng.gen_range(0.0001..0.01), rng.gen_range(-1.0..1.0), rng.gen_range(10.0..1000.0));
        let rows: Vec<(f64, f64)> = (0..rng.gen_range(3..40))
            .map(|i| {
                let c = 50.0 * (i + 1) as f64 + rng.gen_range(0.0..40.0);
                (c, a * c * c + b * c + g + rng.gen_range(-50.0..50.0))
            })
            .collect();
        let m = fit_price_model(&points(&rows)).unwrap();
        let want = normal_equations_fit(&rows);
        for c in [100.0, 1000.0, 3000.0] {
            let (got, exp) = (horner(&m, c), want[0] * c * c + want[1] * c + want[2]);
            assert!((got - exp).abs() <= 1e-7 * exp.abs().max(1.0), "C={c}: {got} vs {exp}");
        }
    }
}

#[test]
fn link_cost_is_horner() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let m = PriceModel::new(rng.gen_range(-0.01..0.01), rng.gen_range(-5.0..5.0), rng.gen_range(-500.0..500.0));
        let c = rng.gen_range(1.0..10_000.0);
        let got = link_cost(&m, c).unwrap();
        assert!((got - horner(&m, c)).abs() <= 1e-9 * got.abs().max(1.0));
    }
}

/// Smallest argmin of `n * cost(C / n)` over `1..=n_max`.
fn brute_force_multiplicity(m: &PriceModel, c: f64, n_max: u32) -> (u32, f64) {
    (1..=n_max).map(|n| (n, n as f64 * horner(m, c / n as f64))).fold((0, f64::INFINITY), |best, (n, v)| {
        if v < best.1 {
            (n, v)
        } else {
            best
        }
    })
}

#[test]
fn optimal_multiplicity_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for i in 0..1000 {
        // mostly realistic convex models, plus every sign combination
        let m = if i % 4 == 0 {
            PriceModel::new(rng.gen_range(-0.01..0.01), rng.gen_range(-5.0..5.0), rng.gen_range(-500.0..500.0))
        } else {
            PriceModel::new(rng.gen_range(1e-5..0.01), rng.gen_range(-1.0..5.0), rng.gen_range(1.0..2000.0))
        };
        let c = rng.gen_range(10.0..20_000.0);
        let n_max = rng.gen_range(1..64);
        let got = optimal_multiplicity(&m, c, n_max).unwrap();
        let (want, best) = brute_force_multiplicity(&m, c, n_max);
        let got_cost = multiplicity_cost(&m, c, got).unwrap();
        assert!(
            got == want || (got_cost - best).abs() <= 1e-9 * best.abs().max(1.0),
            "model {m:?} C={c} n_max={n_max}: {got} vs {want}"
        );
    }
}

#[test]
fn bundled_model_prefers_several_links() {
    let m = fit_price_model(&read_price_csv(data("prices.csv")).unwrap()).unwrap();
    for c in [1000.0, 1500.0, 2000.0, 3000.0, 5000.0] {
        assert!(multiplicity_cost(&m, c, 4).unwrap() < multiplicity_cost(&m, c, 1).unwrap(), "C={c}");
    }
}

#[test]
fn max_capacity_strictly_increases_on_bundled_tree() {
    let m = fit_price_model(&read_price_csv(data("prices.csv")).unwrap()).unwrap();
    let t = load_topology(data("tree64.json")).unwrap();
    let cands = read_candidates_csv(data("tree64-candidates.csv")).unwrap();
    let ceiling = topology_cost(&m, &t) * 1.5;
    let plan = max_capacity_redesign(&m, &t, &SpectrumBudget::default(), ceiling, &cands, 100.0).unwrap();
    assert!(plan.iterations.len() >= 3);
    let mut prev = plan.capacity_before;
    let mut cur = t.clone();
    for step in &plan.iterations {
        cur = cur.with_link(wisprkit::topo::Link::new(&step.a, &step.b, 100.0)).unwrap();
        let oracle = network_capacity(&cur).unwrap();
        assert_eq!(step.capacity_mbps, oracle);
        assert!(step.capacity_mbps > prev);
        assert!(step.total_cost <= ceiling);
        prev = step.capacity_mbps;
    }
    assert_eq!(plan.capacity, prev);
}

#[test]
fn zero_headroom_adds_nothing() {
    let m = fit_price_model(&read_price_csv(data("prices.csv")).unwrap()).unwrap();
    let t = load_topology(data("tree64.json")).unwrap();
    let cands = read_candidates_csv(data("tree64-candidates.csv")).unwrap();
    let plan = max_capacity_redesign(&m, &t, &SpectrumBudget::default(), topology_cost(&m, &t), &cands, 100.0).unwrap();
    assert_eq!(plan.links_added, 0);
    assert_eq!(plan.capacity, plan.capacity_before);
}

#[test]
fn min_cost_keeps_capacity_and_never_costs_more() {
    let m = fit_price_model(&read_price_csv(data("prices.csv")).unwrap()).unwrap();
    let t = load_topology(data("tree64.json")).unwrap();
    let plan = min_cost_redesign(&m, &t, &SpectrumBudget::default(), 10).unwrap();
    assert!(plan.capacity >= plan.capacity_before - 1e-9);
    assert!(plan.total_cost <= plan.cost_before + 1e-9);
    assert!(plan.links_replaced > 0);
}

proptest! {
    #[test]
    fn multiplicity_cost_at_one_is_link_cost(a in 0.0f64..0.01, b in -2.0f64..2.0, g in 0.0f64..1000.0, c in 1.0f64..1e4) {
        let m = PriceModel::new(a, b, g);
        prop_assert_eq!(multiplicity_cost(&m, c, 1).unwrap(), link_cost(&m, c).unwrap());
    }

    #[test]
    fn optimum_never_loses_to_single_link(a in 1e-6f64..0.01, b in -2.0f64..2.0, g in 1.0f64..1000.0, c in 1.0f64..1e4, n_max in 1u32..40) {
        let m = PriceModel::new(a, b, g);
        let n = optimal_multiplicity(&m, c, n_max).unwrap();
        prop_assert!(n >= 1 && n <= n_max);
        prop_assert!(multiplicity_cost(&m, c, n).unwrap() <= multiplicity_cost(&m, c, 1).unwrap() + 1e-9);
    }
}
