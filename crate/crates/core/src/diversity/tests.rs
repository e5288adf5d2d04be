use super::*;
use proptest::prelude::*;

fn pm(rows: Vec<Vec<i8>>, labels: Vec<i8>) -> PredictionMatrix {
    PredictionMatrix::from_rows(rows, labels).unwrap()
}

fn third() -> Vec<f64> {
    vec![1.0 / 3.0; 3]
}

fn fig() -> RiskParams {
    RiskParams::new(1.0, 0.01, 200, 0.05).unwrap()
}

#[test]
fn margins_and_loss() {
    assert_eq!(margin_individual(1, 1), 1);
    assert_eq!(margin_individual(-1, 1), -1);
    assert_eq!(margin_individual(-1, -1), 1);
    assert_eq!(err01(-1).unwrap(), 1.0);
    assert_eq!(err01(0).unwrap(), 0.5);
    assert_eq!(err01(1).unwrap(), 0.0);
    assert!(err01(2).is_err());
}

#[test]
fn bar_margin_hand_sums() {
    let m = pm(vec![vec![1], vec![1], vec![-1]], vec![1]);
    assert!((bar_margin(&m, &third(), 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let m = pm(vec![vec![1], vec![1]], vec![1]);
    assert_eq!(bar_margin(&m, &[0.5, 0.5], 0).unwrap(), 1.0);
    let m = pm(vec![vec![1], vec![-1]], vec![1]);
    assert!((bar_margin(&m, &[0.7, 0.3], 0).unwrap() - 0.4).abs() < 1e-15);
    assert!(bar_margin(&m, &[0.7, 0.7], 0).is_err());
    assert!(bar_margin(&m, &[1.0], 0).is_err());
}

#[test]
fn div_hand_computation() {
    let m = pm(vec![vec![1], vec![1], vec![-1]], vec![1]);
    assert_eq!(ensemble_margin(&m, &third(), 0).unwrap(), 1);
    assert!((div_instance(&m, &third(), 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let all_right = pm(vec![vec![1, -1], vec![1, -1]], vec![1, -1]);
    assert_eq!(div_instance(&all_right, &[0.5, 0.5], 0).unwrap(), 0.0);
    assert_eq!(div_instance(&all_right, &[0.5, 0.5], 1).unwrap(), 0.0);
    let single = pm(vec![vec![1, -1, 1]], vec![1, 1, -1]);
    for i in 0..3 {
        assert_eq!(div_instance(&single, &[1.0], i).unwrap(), 0.0);
    }
}

#[test]
fn lambda_cases() {
    assert_eq!(lambda_of(0.25, 1, 1), 1);
    assert_eq!(lambda_of(0.0, 0, 1), 0);
    assert_eq!(lambda_of(-0.25, -1, 1), -1);
    // unanimous at zero diversity
    assert_eq!(lambda_of(0.0, 1, 1), 1);
    assert_eq!(lambda_of(0.0, 1, -1), -1);
}

#[test]
fn decomposition_examples() {
    let m = pm(vec![vec![1], vec![1], vec![-1]], vec![1]);
    let p = decompose(&m, &third()).unwrap();
    assert_eq!(p.g_bar, 0.0);
    assert!((p.a_bar - 1.0 / 3.0).abs() < 1e-15);
    assert!((p.d_bar - 1.0 / 3.0).abs() < 1e-15);

    let same = pm(vec![vec![1, -1, 1], vec![1, -1, 1]], vec![1, 1, -1]);
    let p = decompose(&same, &[0.5, 0.5]).unwrap();
    assert_eq!(p.d_bar, 0.0);
    assert_eq!(p.g_bar, p.a_bar);

    let wrong = pm(vec![vec![-1, 1], vec![-1, 1], vec![-1, 1]], vec![1, -1]);
    let p = decompose(&wrong, &third()).unwrap();
    assert_eq!(p.g_bar, 1.0);
    assert_eq!(p.d_bar, 0.0);
    assert_eq!(p.per_instance_lambda, vec![-1, -1]);
}

#[test]
fn ties_count_half() {
    let m = pm(vec![vec![1, 1], vec![-1, 1]], vec![1, 1]);
    let p = decompose(&m, &[0.5, 0.5]).unwrap();
    assert_eq!(p.tie_count, 1);
    assert_eq!(p.per_instance_vote_margin, vec![0, 1]);
    assert_eq!(p.per_instance_lambda[0], 0);
    assert_eq!(p.g_bar, 0.25);
}

#[test]
fn gamma_examples() {
    let eps0 = RiskParams::new(1.0, 0.0, 10, 0.05).unwrap();
    let m = pm(vec![vec![1, -1, 1], vec![1, -1, 1]], vec![1, -1, 1]);
    let g = gamma_margin(&m, &[0.5, 0.5], &eps0).unwrap();
    assert_eq!(g.gamma, 1.0);
    assert_eq!(g.argmin_index, 0);

    // weights (0.9, 0.1), one dissenter: bar margin 0.8, div 0.1
    let m = pm(vec![vec![1], vec![-1]], vec![1]);
    let g = gamma_margin(&m, &[0.9, 0.1], &fig()).unwrap();
    assert!((g.div_at_argmin - 0.1).abs() < 1e-15);
    assert_eq!(g.lambda_at_argmin, 1);
    assert!((g.gamma - 0.98 * 0.8).abs() < 1e-12);
    assert!((g.gamma - 0.784).abs() < 1e-12);
}

#[test]
fn gamma_skips_ties_and_breaks_ties_low() {
    let m = pm(
        vec![vec![1, -1, 1, 1], vec![-1, -1, 1, 1]],
        vec![1, 1, 1, 1],
    );
    let g = gamma_margin(&m, &[0.5, 0.5], &fig()).unwrap();
    assert_eq!(g.ties_excluded, 1);
    assert_eq!(g.argmin_index, 1);
    let all_ties = pm(vec![vec![1], vec![-1]], vec![1]);
    assert!(gamma_margin(&all_ties, &[0.5, 0.5], &fig()).is_err());
}

#[test]
fn kappa_examples() {
    assert_eq!(kappa_of(0.784, 1.0).unwrap(), 105);
    assert_eq!(kappa_of(8.0, 1.0).unwrap(), 1);
    assert_eq!(kappa_of(4.0, 1.0).unwrap(), 4);
    assert_eq!(kappa_of(2.0, 0.25).unwrap(), 1);
    assert!(kappa_of(0.0, 1.0).is_err());
    assert!(kappa_of(-0.5, 1.0).is_err());
}

#[test]
fn bound_threshold_and_shape() {
    let p = fig();
    assert!((margin_threshold(&p) - 0.4).abs() < 1e-15);
    assert!(risk_bound(0.4, &p).is_err());
    assert!(risk_bound(0.3, &p).is_err());
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let gamma = 0.41 + 0.015 * f64::from(k);
        let b = risk_bound(gamma, &p).unwrap();
        assert!(b >= 0.0);
        assert!(b <= prev + 1e-12, "bound rose at gamma {gamma}");
        prev = b;
    }
}

/// Second implementation of the estimator, written in terms of
/// u = (gamma / 8 delta)^2: R = log2(8 e |S| u) / u.
fn risk_oracle(div: f64, lambda: f64, p: &RiskParams) -> f64 {
    let gamma = (1.0 - 2.0 * p.epsilon) * (lambda - 2.0 * div);
    let u = (gamma / (8.0 * p.delta)).powi(2);
    (8.0 * std::f64::consts::E * p.sample_size as f64 * u).log2() / u
}

#[test]
fn estimated_risk_reference_value() {
    let r = estimated_risk(0.1, 1, &fig()).unwrap();
    // arbitrary-precision evaluation: 560.641644061842
    assert!((r - 560.641_644_061_842).abs() < 1e-9, "{r}");
    assert!((r - 560.7).abs() < 0.5);
    assert!((r - risk_oracle(0.1, 1.0, &fig())).abs() < 1e-9);
}

#[test]
fn estimated_risk_is_mirror_symmetric() {
    for d in [0.02, 0.1, 0.2, 0.33, 0.45, 0.49] {
        let a = estimated_risk(d, 1, &fig()).unwrap();
        let b = estimated_risk(-d, -1, &fig()).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{d}: {a} vs {b}");
    }
}

#[test]
fn estimated_risk_near_singularity() {
    let p = fig();
    let near = estimated_risk(0.49, 1, &p).unwrap();
    let mid = estimated_risk(0.3, 1, &p).unwrap();
    // arbitrary-precision references: -876210.552304 and 1409.580321
    assert!((near + 876_210.552_304).abs() < 1e-4);
    assert!((mid - 1_409.580_321).abs() < 1e-5);
    assert!(near.abs() > mid.abs());
    // (q2, q3) is a decreasing stretch
    assert!(near < mid);
    assert!(estimated_risk(0.5, 1, &p).is_err());
    assert!(estimated_risk(-0.5, -1, &p).is_err());
    assert!(estimated_risk(0.1, 0, &p).is_err());
}

fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[test]
fn first_derivative_matches_finite_differences() {
    let p = fig();
    for d in [0.05, 0.15, 0.25, 0.35] {
        let closed = risk_first_derivative(d, 1, &p).unwrap();
        let fd = central(|x| risk_oracle(x, 1.0, &p), d, 1e-6);
        assert!(
            (closed - fd).abs() / (1.0 + closed.abs()) < 1e-4,
            "{d}: {closed} vs {fd}"
        );
    }
    assert!(risk_first_derivative(0.2, 1, &p).unwrap() > 0.0);
}

#[test]
fn second_and_third_derivatives_match_finite_differences() {
    let p = fig();
    for d in [-0.4, -0.3, -0.1, 0.05, 0.15, 0.25, 0.35, 0.45] {
        let lam = if d < 0.0 { -1 } else { 1 };
        let d2 = risk_second_derivative(d, lam, &p).unwrap();
        let fd2 = central(|x| risk_first_derivative(x, lam, &p).unwrap(), d, 1e-6);
        assert!(
            (d2 - fd2).abs() / (1.0 + d2.abs()) < 1e-3,
            "{d}: {d2} vs {fd2}"
        );
        let d3 = risk_third_derivative(d, lam, &p).unwrap();
        let fd3 = central(|x| risk_second_derivative(x, lam, &p).unwrap(), d, 1e-6);
        assert!(
            (d3 - fd3).abs() / (1.0 + d3.abs()) < 1e-3,
            "{d}: {d3} vs {fd3}"
        );
    }
}

#[test]
fn curvature_at_high_diversity_is_negative() {
    // the slope falls on (q5, q3), so the second derivative at 0.45 is negative
    assert!(risk_second_derivative(0.45, 1, &fig()).unwrap() < 0.0);
    assert!(risk_second_derivative(0.2, 1, &fig()).unwrap() > 0.0);
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn critical_points_reference_values() {
    let p = fig();
    let cp = critical_points(&p).unwrap();
    // direct evaluation of the closed forms in 30-digit arithmetic
    assert!((cp.q1 - 0.01).abs() < 1e-15);
    assert!((cp.q2 - 0.397_959_183_673_469).abs() < 1e-12);
    assert!((cp.q3 - 0.494_897_959_183_673).abs() < 1e-12);
    assert!((cp.q5 - 0.357_590_568_868_766).abs() < 1e-12);
    assert!((cp.q6 - 0.317_142_670_851_454).abs() < 1e-12);
    assert_eq!(cp.q4, cp.q2);
    assert!(cp.implied_condition_ok);
    assert!(cp.q1 < cp.q2 && cp.q2 < cp.q3);
    assert!(cp.q6 < cp.q5 && cp.q5 < cp.q4);

    // independent route: roots of the derivatives
    let root1 = bisect(|x| risk_first_derivative(x, 1, &p).unwrap(), 0.2, 0.45);
    let root2 = bisect(|x| risk_second_derivative(x, 1, &p).unwrap(), 0.2, 0.39);
    let root3 = bisect(|x| risk_third_derivative(x, 1, &p).unwrap(), 0.2, 0.35);
    assert!((root1 - cp.q2).abs() < 1e-9);
    assert!((root2 - cp.q5).abs() < 1e-9);
    assert!((root3 - cp.q6).abs() < 1e-9);

    let scale = 1.0 + estimated_risk(cp.q2, 1, &p).unwrap().abs();
    assert!(risk_first_derivative(cp.q2, 1, &p).unwrap().abs() < 1e-6 * scale);
    assert!(risk_second_derivative(cp.q5, 1, &p).unwrap().abs() < 1e-6 * scale);
}

#[test]
fn critical_points_noise_free() {
    let p = RiskParams::new(1.0, 0.0, 200, 0.05).unwrap();
    let cp = critical_points(&p).unwrap();
    assert_eq!(cp.q1, 0.0);
    assert_eq!(cp.implied_condition_ok, (8.0f64 / 200.0).sqrt() <= 1.0);
    let tiny = RiskParams::new(1.0, 0.0, 4, 0.05).unwrap();
    assert!(!critical_points(&tiny).unwrap().implied_condition_ok);
}

#[test]
fn critical_points_json_shape() {
    let json = critical_points(&fig()).unwrap().to_json();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["q1", "q2", "q3", "q4", "q5", "q6", "implied_ok"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["q2"].as_f64().unwrap(), 0.397959);
}

#[test]
fn classify_examples() {
    let cp = critical_points(&fig()).unwrap();
    let i = classify_interval(-0.2, &cp).unwrap();
    assert_eq!(i, Interval::NegQ6Q1);
    assert_eq!(i.annotation().risk_trend, Trend::Decreasing);
    assert_eq!(i.annotation().risk_shape, Shape::Concave);
    assert!(i.diversity_helps());
    let i = classify_interval(0.45, &cp).unwrap();
    assert_eq!(i, Interval::Q2Q3);
    assert_eq!(
        (i.annotation().risk_trend, i.annotation().risk_shape),
        (Trend::Decreasing, Shape::Convex)
    );
    let i = classify_interval(0.2, &cp).unwrap();
    assert_eq!(i, Interval::Q1Q6);
    assert_eq!(
        (i.annotation().risk_trend, i.annotation().risk_shape),
        (Trend::Increasing, Shape::Concave)
    );
    assert!(!i.diversity_helps());
    assert!(classify_interval(0.0, &cp).is_err());
    assert!(classify_interval(0.005, &cp).is_err());
    assert!(classify_interval(-0.499, &cp).is_err());
    assert_eq!(classify_interval(cp.q6, &cp).unwrap(), Interval::Q6Q5);
    assert_eq!(classify_interval(-cp.q6, &cp).unwrap(), Interval::NegQ6Q1);
}

#[test]
fn table_pattern_holds_numerically() {
    let p = fig();
    let cp = critical_points(&p).unwrap();
    let sign = |v: f64| if v > 0.0 { 1.0 } else { -1.0 };
    let trend = |t: Trend| if t == Trend::Increasing { 1.0 } else { -1.0 };
    let change = |c: Change| if c == Change::Larger { 1.0 } else { -1.0 };
    for interval in Interval::ALL {
        let (lo, hi) = interval.bounds(&cp);
        let mid = 0.5 * (lo + hi);
        assert_eq!(classify_interval(mid, &cp).unwrap(), interval);
        let lam = if mid < 0.0 { -1 } else { 1 };
        let d1 = risk_first_derivative(mid, lam, &p).unwrap();
        let d2 = risk_second_derivative(mid, lam, &p).unwrap();
        let d3 = risk_third_derivative(mid, lam, &p).unwrap();
        let a = interval.annotation();
        assert_eq!(sign(d1), trend(a.risk_trend), "{interval} risk trend");
        assert_eq!(
            sign(d2),
            a.risk_shape.curvature_sign(),
            "{interval} risk shape"
        );
        assert_eq!(sign(d2), trend(a.slope_trend), "{interval} slope trend");
        assert_eq!(
            sign(d3),
            a.slope_shape.curvature_sign(),
            "{interval} slope shape"
        );
        assert_eq!(sign(d2), change(a.risk_change), "{interval} risk change");
        assert_eq!(sign(d3), change(a.slope_change), "{interval} slope change");
    }
}

#[test]
fn sweep_rows() {
    let p = fig();
    let grid = [0.1, 0.2, 0.3];
    let rows = sweep_curve(&p, &grid, Some(1)).unwrap();
    assert_eq!(rows.len(), 3);
    for (r, &d) in rows.iter().zip(&grid) {
        assert_eq!(r.risk, Some(estimated_risk(d, 1, &p).unwrap()));
        assert_eq!(r.risk_d1, Some(risk_first_derivative(d, 1, &p).unwrap()));
        assert_eq!(r.risk_d2, Some(risk_second_derivative(d, 1, &p).unwrap()));
    }
    let rows = sweep_curve(&p, &[0.25, 0.5], Some(1)).unwrap();
    assert!(!rows[0].is_singular());
    assert!(rows[1].is_singular());
    let rows = sweep_curve(&p, &[-0.3, 0.3], None).unwrap();
    assert_eq!(rows[0].lambda, -1);
    assert!((rows[0].risk.unwrap() - rows[1].risk.unwrap()).abs() < 1e-9);
    assert!(sweep_curve(&p, &[0.1], Some(0)).is_err());

    let mut out = Vec::new();
    write_sweep_csv(&sweep_curve(&p, &[0.2, 0.5, 0.0], None).unwrap(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "div,lambda,risk,risk_d1,risk_d2,interval");
    assert!(lines[1].starts_with("0.200000,1,") && lines[1].ends_with(",(q1,q6)"));
    assert_eq!(lines[2], "0.500000,1,,,,singular");
    assert!(lines[3].ends_with(",outside"));
}

#[test]
fn risk_params_validation() {
    assert!(RiskParams::new(0.0, 0.01, 10, 0.05).is_err());
    assert!(RiskParams::new(1.0, 0.5, 10, 0.05).is_err());
    assert!(RiskParams::new(1.0, -0.1, 10, 0.05).is_err());
    assert!(RiskParams::new(1.0, 0.1, 0, 0.05).is_err());
    assert!(RiskParams::new(1.0, 0.1, 10, 0.0).is_err());
    assert!(RiskParams::new(1.0, 0.1, 10, 1.0).is_ok());
}

fn random_case() -> impl Strategy<Value = (PredictionMatrix, Vec<f64>)> {
    (1usize..=9, 1usize..=50).prop_flat_map(|(k, n)| {
        (
            prop::collection::vec(prop::collection::vec(prop::bool::ANY, n), k),
            prop::collection::vec(prop::bool::ANY, n),
            prop::collection::vec(0.01f64..1.0, k),
        )
            .prop_map(|(rows, labels, w)| {
                let sign = |b: bool| if b { 1 } else { -1 };
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(sign).collect())
                    .collect();
                let labels = labels.into_iter().map(sign).collect();
                let total: f64 = w.iter().sum();
                (pm(rows, labels), w.iter().map(|v| v / total).collect())
            })
    })
}

proptest! {
    #[test]
    fn decomposition_identity((m, w) in random_case()) {
        let p = decompose(&m, &w).unwrap();
        prop_assert!((p.g_bar - (p.a_bar - p.d_bar)).abs() < 1e-12);
        let mean_div = p.per_instance_div.iter().sum::<f64>() / m.n_instances() as f64;
        prop_assert!((p.d_bar - mean_div).abs() < 1e-12);
    }

    #[test]
    fn bar_margin_identity((m, w) in random_case()) {
        let p = decompose(&m, &w).unwrap();
        for i in 0..m.n_instances() {
            let d = p.per_instance_div[i];
            prop_assert!((-0.5..=0.5).contains(&d));
            if p.per_instance_vote_margin[i] != 0 {
                prop_assert!(d.abs() < 0.5);
                let rhs = f64::from(p.per_instance_lambda[i]) - 2.0 * d;
                prop_assert!((p.per_instance_bar_margin[i] - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_consistent(d in -0.48f64..0.48, eps in 0.0f64..0.2, s in 20usize..2000) {
        prop_assume!(d.abs() > 0.01);
        let p = RiskParams::new(1.0, eps, s, 0.05).unwrap();
        let lam = if d < 0.0 { -1 } else { 1 };
        let d1 = risk_first_derivative(d, lam, &p).unwrap();
        let fd1 = central(|x| risk_oracle(x, f64::from(lam), &p), d, 1e-6);
        prop_assert!((d1 - fd1).abs() / (1.0 + d1.abs()) < 1e-4);
        let a = estimated_risk(d, lam, &p).unwrap();
        let b = estimated_risk(-d, -lam, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}
