use proptest::prelude::*;
use stratnet::{PayoffFunction, PayoffProfile, Saturation};

fn quadratic(a: f64, c: f64) -> PayoffFunction {
    PayoffFunction::quadratic(a, c).unwrap()
}

#[test]
fn cumulative_and_density_examples() {
    assert_eq!(quadratic(0.0, 1.0).cumulative(0.5), -0.125);
    assert_eq!(quadratic(5.0, 1.0).cumulative(0.0), 0.0);
    let log = PayoffFunction::log(1.0, 1.0).unwrap();
    assert!((log.cumulative(1.0) - std::f64::consts::LN_2).abs() < 1e-15);

    assert_eq!(quadratic(5.0, 1.0).density(0.0), -5.0);
    assert_eq!(quadratic(0.0, 1.0).density(0.5), -0.5);
    assert_eq!(log.density(0.0), 1.0);
}

#[test]
fn inverse_examples() {
    let f = quadratic(0.0, 1.0);
    let within = f.inverse(-0.3);
    assert!((within.value - 0.3).abs() < 1e-15);
    assert_eq!(within.flag, Saturation::Within);
    let below = f.inverse(0.5);
    assert_eq!((below.value, below.flag), (0.0, Saturation::BelowRange));
    let above = f.inverse(-2.0);
    assert_eq!((above.value, above.flag), (1.0, Saturation::AboveRange));
}

#[test]
fn level_examples() {
    let flat = PayoffProfile::water_tank(&[0.0, 0.0, 0.0]);
    assert!((flat.level_solve(&[0, 1, 2], 1.0).unwrap() + 1.0 / 3.0).abs() < 1e-12);
    let log = PayoffProfile::new(vec![PayoffFunction::log(1.5, 0.7).unwrap()]);
    let eta = log.level_solve(&[0], 0.4).unwrap();
    assert!((eta - 1.5 / 1.1).abs() < 1e-12);
    let pair = PayoffProfile::water_tank(&[1.0, 0.0]);
    assert!((pair.level_solve(&[0, 1], 1.0).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn social_utility_examples() {
    let p = PayoffProfile::water_tank(&[0.0, 5.0, 0.0]);
    assert!((p.social_utility(&[0.5, 0.0, 0.5]) + 0.25).abs() < 1e-15);
    assert!((p.social_utility(&[0.0, 1.0, 0.0]) + 5.5).abs() < 1e-15);
    let q = PayoffProfile::water_tank(&[2.0, 2.0, 0.0]);
    assert!((q.social_utility(&[0.1, 0.1, 0.8]) + 0.73).abs() < 1e-12);
}

fn any_payoff() -> impl Strategy<Value = PayoffFunction> {
    prop_oneof![
        (0.0f64..3.0, 0.5f64..2.0).prop_map(|(a, c)| quadratic(a, c)),
        (0.5f64..2.0, 0.5f64..1.5).prop_map(|(w, s)| PayoffFunction::log(w, s).unwrap()),
        proptest::collection::vec(0.0f64..1.0, 101..=201).prop_map(|steps| {
            let mut v = 2.0;
            let density = steps
                .into_iter()
                .map(|s| {
                    v -= 0.001 + 0.02 * s;
                    v
                })
                .collect();
            PayoffFunction::custom(density).unwrap()
        }),
    ]
}

proptest! {
    #[test]
    fn density_is_decreasing(f in any_payoff(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        prop_assert!(f.density(lo) > f.density(hi));
    }

    #[test]
    fn cumulative_is_integral_of_density(f in any_payoff(), y in 0.01f64..1.0) {
        let n = 2000;
        let h = y / n as f64;
        let mut s = f.density(0.0) + f.density(y);
        for k in 1..n {
            s += f.density(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        prop_assert!((s * h / 3.0 - (f.cumulative(y) - f.cumulative(0.0))).abs() < 1e-6);
    }

    #[test]
    fn inverse_round_trips(f in any_payoff(), y in 0.0f64..1.0) {
        let back = f.inverse(f.density(y));
        prop_assert!((back.value - y).abs() < 1e-9, "{} vs {}", back.value, y);
    }

    #[test]
    fn level_solve_balances_mass(
        fs in proptest::collection::vec(any_payoff(), 1..6),
        mass in 0.01f64..1.0,
    ) {
        let profile = PayoffProfile::new(fs);
        let nodes: Vec<usize> = (0..profile.len()).collect();
        let eta = profile.level_solve(&nodes, mass).unwrap();
        let filled: f64 = nodes.iter().map(|&i| profile.inverse_density(i, eta).value).sum();
        prop_assert!((filled - mass).abs() < 1e-9);
    }
}
