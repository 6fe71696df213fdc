use nncouple::simlab::{self, SimKind, SimSetting, Verdict};
use statrs::function::erf::erfc;

fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / 2f64.sqrt())
}

#[test]
fn max_setting_rate() {
    let setting = SimSetting::new(SimKind::Max, 100_000, 1).with_grid(200);
    let (_, y) = simlab::generate::<f64>(&setting).unwrap();
    let rate = y.codes().iter().filter(|&&c| c == 1).count() as f64 / y.len() as f64;
    let continuous = 2.0 * normal_sf(1.0);
    // discrete monitoring lowers the barrier-crossing probability; the
    // classical correction shifts the barrier by 0.5826 / sqrt(m)
    let corrected = 2.0 * normal_sf(1.0 + 0.5826 / 200f64.sqrt());
    assert!(rate < continuous, "{rate} vs {continuous}");
    assert!((rate - corrected).abs() <= 0.01, "{rate} vs {corrected}");
}

#[test]
fn null_rate_in_every_setting() {
    for kind in [SimKind::Sin, SimKind::Max, SimKind::Mixture, SimKind::Degree] {
        let setting = SimSetting::new(kind, 100, 0);
        let curve = simlab::power_curve(&setting, &[0.0], 2000, 0.05, 17).unwrap();
        let rate = curve.rejections[0];
        assert!((0.03..=0.07).contains(&rate), "{kind:?}: {rate}");
    }
}

#[test]
fn null_statistic_is_chi_squared() {
    let cal = simlab::null_calibration(200, 3, 2, 2000, 0.05, 23).unwrap();
    assert!(cal.ks_distance <= 0.04, "{}", cal.ks_distance);
    let binary = simlab::null_calibration(200, 2, 2, 2000, 0.05, 24).unwrap();
    assert!(binary.ks_distance <= 0.05, "{}", binary.ks_distance);
}

#[test]
fn power_increases_with_signal() {
    let setting = SimSetting::new(SimKind::Sin, 100, 0);
    let curve = simlab::power_curve(&setting, &[0.0, 0.5, 1.0], 500, 0.05, 3).unwrap();
    let r = &curve.rejections;
    assert!(r[2] > r[1] && r[1] > r[0], "{r:?}");
    assert!(curve.rejections.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn functional_settings_have_power() {
    for kind in [SimKind::Max, SimKind::Mixture, SimKind::Degree] {
        let setting = SimSetting::new(kind, 100, 0);
        let curve = simlab::power_curve(&setting, &[0.0, 1.0], 200, 0.05, 5).unwrap();
        assert!(curve.rejections[1] > curve.rejections[0] + 0.2, "{kind:?}: {:?}", curve.rejections);
    }
}

#[test]
fn replications_are_isolated() {
    let setting = SimSetting::new(SimKind::Mixture, 80, 0).with_grid(30);
    let lambdas = [0.0, 0.5, 1.0];
    let curve = simlab::power_curve(&setting, &lambdas, 12, 0.05, 77).unwrap();
    let mut recount = vec![0usize; lambdas.len()];
    for r in (0..12).rev() {
        for (i, v) in simlab::replicate(&setting, &lambdas, 0.05, 77, r).unwrap().into_iter().enumerate() {
            recount[i] += usize::from(v == Verdict::Reject);
        }
    }
    let rates: Vec<f64> = recount.iter().map(|&c| c as f64 / 12.0).collect();
    assert_eq!(rates, curve.rejections);
}

#[test]
fn thread_count_does_not_matter() {
    let setting = SimSetting::new(SimKind::Sin, 60, 0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simlab::power_curve(&setting, &[0.0, 0.7], 40, 0.05, 8).unwrap())
    };
    assert_eq!(run(1), run(4));
}
