use fpplab_core::bp::{self, DegreeSequence, StopRule};
use fpplab_core::graph::WeightedGraph;
use fpplab_core::{fpp, make_stream, stats, theory};

const LAMBDAS: [f64; 6] = [1.2, 1.5, 2.0, 3.0, 5.0, 10.0];

/// Plain bisection to full double precision; `f(lo)` and `f(hi)` must differ in sign.
fn oracle_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn oracle_extinction(l: f64) -> f64 {
    let delta = (l - 1.0) / (l * l);
    oracle_root(|p| p - (-l * (1.0 - p)).exp(), 0.0, 1.0 - delta)
}

fn oracle_dual(l: f64) -> f64 {
    let target = l * (-l).exp();
    oracle_root(|m| m * (-m).exp() - target, 0.0, 1.0)
}

fn oracle_theta(l: f64) -> f64 {
    oracle_root(|t| t - l + l * (-t).exp(), 1e-9, l)
}

#[test]
fn constants_match_bisection_oracles() {
    for l in LAMBDAS {
        let c = theory::constants(l).unwrap();
        assert!((c.p_lambda - oracle_extinction(l)).abs() < 1e-12, "p at {l}");
        assert!((c.mu_lambda - oracle_dual(l)).abs() < 1e-12, "mu at {l}");
        assert!((c.theta_star - oracle_theta(l)).abs() < 1e-12, "theta at {l}");
        assert!((c.beta - l / (l - 1.0)).abs() < 1e-15);
        assert!((c.gamma - 1.0 / (l - 1.0)).abs() < 1e-15);
    }
}

#[test]
fn defining_equations_hold() {
    for l in LAMBDAS {
        let c = theory::constants(l).unwrap();
        let (p, mu, th) = (c.p_lambda, c.mu_lambda, c.theta_star);
        assert!((p - (-l * (1.0 - p)).exp()).abs() < 1e-12);
        assert!((mu * (-mu).exp() - l * (-l).exp()).abs() < 1e-12);
        assert!((th - l + l * (-th).exp()).abs() < 1e-12);
        // Independent identities linking the three roots.
        assert!((mu - l * p).abs() < 1e-12);
        assert!((th - l * (1.0 - p)).abs() < 1e-12);
        assert_eq!(c.d_lambda - c.c_lambda, 1.0);
    }
}

#[test]
fn lambda_two_values() {
    let c = theory::constants(2.0).unwrap();
    assert!((c.p_lambda - oracle_extinction(2.0)).abs() < 1e-14);
    assert!((c.p_lambda - 0.203_187_869_98).abs() < 1e-10);
    assert!((c.mu_lambda - 0.406_375_739_96).abs() < 1e-10);
    assert!((c.theta_star - 1.593_624_260_04).abs() < 1e-10);
    assert!((c.c_lambda - (1.0 + 2.0 / c.mu_lambda.ln().abs())).abs() < 1e-14);
}

#[test]
fn subcritical_is_rejected() {
    for l in [0.5, 1.0, f64::NAN] {
        assert!(theory::constants(l).is_err());
        assert!(theory::solve_phi(l, &theory::default_phi_grid(), 10).is_err());
    }
}

#[test]
fn dense_centering_discriminant() {
    let r = theory::dense_centering_report(100.0, 1e4).unwrap();
    assert!((r.discriminant - 0.030_655).abs() < 5e-6, "{}", r.discriminant);
    assert!(r.replaceable);
    assert!((r.beta_n - 100.0 / 99.0).abs() < 1e-15);
}

#[test]
fn phi_solves_its_equation_for_all_lambdas() {
    for l in LAMBDAS {
        let g = theory::solve_phi(l, &theory::default_phi_grid(), 1000).unwrap();
        let p = theory::extinction_probability(l).unwrap();
        assert_eq!(g.eval(0.0), 1.0);
        assert!(g.self_consistency_residual() < 1e-8, "residual at {l}");
        assert!(g.phi_values.windows(2).all(|w| w[1] <= w[0]));
        assert!(g.phi_values.iter().all(|&v| v >= p - 1e-12 && v <= 1.0));
        // Mean λ: 1 − φ(t) ≈ λt near the origin, up to a second-moment term.
        let t = g.t_values[1];
        let slope = (1.0 - g.phi_values[1]) / t;
        assert!((slope - l).abs() < 5e-3 * l, "slope {slope} at {l}");
    }
}

#[test]
fn phi_matches_monte_carlo_laplace_transform() {
    let g = theory::solve_phi(2.0, &theory::default_phi_grid(), 1000).unwrap();
    let ws: Vec<f64> = (0..20_000u64)
        .map(|i| bp::estimate_w(2.0, 2_000, &mut make_stream(21, i)).unwrap())
        .collect();
    for t in [0.5, 1.0, 2.0] {
        let mc = stats::mean(&ws.iter().map(|w| (-t * w).exp()).collect::<Vec<_>>());
        assert!((g.eval(t) - mc).abs() < 0.01, "t = {t}: {} vs {mc}", g.eval(t));
    }
    let atom = ws.iter().filter(|&&w| w == 0.0).count() as f64 / ws.len() as f64;
    assert!((atom - theory::extinction_probability(2.0).unwrap()).abs() < 0.015);
}

fn degree_sequences() -> Vec<DegreeSequence> {
    let mut out: Vec<DegreeSequence> = vec![
        vec![2, 2, 2].into(),
        vec![1].into(),
        vec![3].into(),
        vec![1, 1, 1, 1, 1, 1].into(),
        vec![5, 0, 0, 0, 0, 1].into(),
        vec![2, 0, 2, 0, 2, 0].into(),
    ];
    let mut s = make_stream(22, 0);
    while out.len() < 20 {
        let m = 1 + s.below(6) as usize;
        let d: Vec<u64> = (0..m).map(|_| s.below(4)).collect();
        let d = DegreeSequence::new(d);
        if bp::alive_counts(&d).all_positive {
            out.push(d);
        }
    }
    out
}

#[test]
fn generation_formula_matches_enumeration() {
    let d: DegreeSequence = vec![2, 2, 2].into();
    let pmf = bp::discrete_attachment_oracle(&d).unwrap();
    let want = [0.0, 1.0 / 6.0, 0.5, 1.0 / 3.0];
    for (a, b) in pmf.iter().zip(want) {
        assert!((a - b).abs() < 1e-15);
    }
    for d in degree_sequences() {
        let formula = bp::generation_pmf(&d).unwrap();
        let oracle = bp::discrete_attachment_oracle(&d).unwrap();
        assert_eq!(formula.len(), oracle.len());
        for (a, b) in formula.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{:?}", d.as_slice());
        }
    }
}

#[test]
fn sampled_generation_and_split_time() {
    for (k, d) in degree_sequences().into_iter().enumerate().take(8) {
        let pmf = bp::generation_pmf(&d).unwrap();
        let mut s = make_stream(23, k as u64);
        let reps = 100_000;
        let mut counts = vec![0usize; pmf.len()];
        let mut time = 0.0;
        for _ in 0..reps {
            counts[bp::sample_generation(&d, &mut s).unwrap() as usize] += 1;
            time += bp::sample_split_time(&d, &mut s).unwrap();
        }
        let tv: f64 = counts
            .iter()
            .zip(&pmf)
            .map(|(&c, &q)| (c as f64 / reps as f64 - q).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "{:?}: tv {tv}", d.as_slice());
        let s_i = bp::alive_counts(&d).s;
        let mean: f64 = s_i.iter().map(|&x| 1.0 / x as f64).sum();
        assert!((time / reps as f64 - mean).abs() < 0.02 * mean.max(1.0));
    }
}

#[test]
fn oracle_refuses_large_m_and_dead_trees() {
    assert!(bp::discrete_attachment_oracle(&vec![1; 9].into()).is_err());
    assert!(bp::generation_pmf(&vec![0, 1].into()).is_err());
}

#[test]
fn spacings_identity() {
    let r = stats::spacings_identity_check(100, 20_000, &mut make_stream(24, 0)).unwrap();
    let h100: f64 = (1..=100).map(|i| 1.0 / i as f64).sum();
    assert!(r.ks < 0.025);
    assert!((r.mean_max - h100).abs() < 0.05 && (r.mean_spacings - h100).abs() < 0.05);
}

#[test]
fn w_has_mean_lambda_and_atom_at_extinction() {
    let ws: Vec<f64> = (0..20_000u64)
        .map(|i| bp::estimate_w(3.0, 2_000, &mut make_stream(25, i)).unwrap())
        .collect();
    let p = theory::extinction_probability(3.0).unwrap();
    let se = (stats::variance(&ws) / ws.len() as f64).sqrt();
    assert!((stats::mean(&ws) - 3.0).abs() < 4.0 * se);
    let atom = ws.iter().filter(|&&w| w == 0.0).count() as f64 / ws.len() as f64;
    assert!((atom - p).abs() < 0.01);
}

#[test]
fn coupling_marginals_and_disagreement() {
    let c = bp::BinomialPoissonCoupling::new(50, 0.04).unwrap();
    let mut s = make_stream(26, 0);
    let reps = 200_000;
    let (mut sx, mut sd, mut differ) = (0.0, 0.0, 0usize);
    for _ in 0..reps {
        let (x, d) = c.sample(&mut s);
        sx += x as f64;
        sd += d as f64;
        differ += (x != d) as usize;
    }
    let lam = 49.0 * 0.04;
    assert!((sx / reps as f64 - lam).abs() < 0.01);
    assert!((sd / reps as f64 - lam).abs() < 0.01);
    let q = c.disagreement_probability();
    assert!(q > 0.0 && q < 0.04);
    assert!((differ as f64 / reps as f64 - q).abs() < 0.003);
}

/// Hand-built thinned tree for K3 with forced weights; the first unthinned
/// copy of mark 2 must carry the graph's shortest-path weight and hopcount.
#[test]
fn thinned_tree_reproduces_k3_shortest_path() {
    let w01 = 0.3;
    let w02 = 1.0;
    let w12 = 0.4;
    let wg = WeightedGraph::from_weighted_edges(3, &[(0, 1, w01), (0, 2, w02), (1, 2, w12)]).unwrap();
    let r = fpp::pair_result(&wg, 0, 2).unwrap();
    assert!((r.weight - 0.7).abs() < 1e-15);
    assert_eq!(r.hops, 2);

    // Wetting order: root 0 at 0; mark 1 at 0.3 (via 0); mark 2 at 0.7 (via 1);
    // mark 0 at 0.6 (via 1) is a repeat; mark 2 at 1.0 (via 0) is a repeat.
    let events = [
        (0usize, None, 0.0, 0usize),
        (1, Some(0), w01, 1),
        (0, Some(1), w01 + w01, 2),
        (2, Some(1), w01 + w12, 2),
        (2, Some(0), w02, 1),
    ];
    let marks: Vec<usize> = events.iter().map(|e| e.0).collect();
    let parents: Vec<Option<usize>> = events.iter().map(|e| e.1).collect();
    let thinned = bp::thinning_flags(&marks, &parents);
    assert_eq!(thinned, vec![false, false, true, false, true]);
    let j = (0..events.len()).find(|&j| marks[j] == 2 && !thinned[j]).unwrap();
    assert!((events[j].2 - r.weight).abs() < 1e-15);
    assert_eq!(events[j].3, r.hops);
}

#[test]
fn pruned_process_reaches_every_mark_on_complete_graph() {
    let mut s = make_stream(27, 0);
    let tree = bp::Ctmbp::new(6, 1.0)
        .unwrap()
        .with_pruning(true)
        .simulate(&StopRule::UnthinnedMarks(6), &mut s)
        .unwrap();
    assert_eq!(tree.unthinned_count(), 6);
    let mut seen: Vec<usize> = (0..tree.marks.len())
        .filter(|&j| !tree.thinned[j])
        .map(|j| tree.marks[j])
        .collect();
    seen.sort_unstable();
    assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
}
