use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use pmt_core::synthetic::{Shape, SyntheticBackend, SyntheticProfile};
use pmt_core::{create_sensor, joules, seconds, Config, CounterKind, Error, SamplerConfig, Sensor};

fn synthetic(profile: SyntheticProfile, interval_ms: u64) -> Sensor {
    let backend = SyntheticBackend::new(0, profile).unwrap();
    Sensor::from_backend(
        Box::new(backend),
        SamplerConfig::new(Duration::from_millis(interval_ms)),
    )
    .unwrap()
}

/// ∫₀ᵗ power(s) ds in closed form.
fn exact_energy(p: &SyntheticProfile, t: f64) -> f64 {
    match p.shape {
        Shape::Constant => p.base_watts * t,
        Shape::Ramp => {
            let slope = (p.peak_watts - p.base_watts) / p.duration;
            let ramp_t = t.min(p.duration);
            p.base_watts * ramp_t + 0.5 * slope * ramp_t * ramp_t + p.peak_watts * (t - ramp_t).max(0.0)
        }
        Shape::Square => {
            let half = p.period / 2.0;
            let full = (t / p.period).floor();
            let rest = t - full * p.period;
            full * half * (p.base_watts + p.peak_watts)
                + p.peak_watts * rest.min(half)
                + p.base_watts * (rest - half).max(0.0)
        }
    }
}

#[test]
fn exact_energy_matches_fine_quadrature() {
    // midpoint rule at 1 µs steps as an independent check of the closed forms
    for p in [
        SyntheticProfile::constant(30.0),
        SyntheticProfile::ramp(5.0, 105.0, 0.3),
        SyntheticProfile::square(10.0, 90.0, 0.2),
    ] {
        let t = 0.55;
        let n = 550_000;
        let h = t / n as f64;
        let quad: f64 = (0..n).map(|i| p.power_at((i as f64 + 0.5) * h) * h).sum();
        assert!((quad - exact_energy(&p, t)).abs() < 1e-3, "{p:?}");
    }
}

#[test]
fn create_synthetic_contract() {
    let s = create_sensor("synthetic", 0, &Config::new().with("power_watts", 30)).unwrap();
    assert_eq!(s.descriptor().counter_kind, CounterKind::InstantaneousPower);
    assert_eq!(s.backend_name(), "synthetic");
    let first = s.read().unwrap();
    // at most one tick of accumulation at 30 W and 10 ms
    assert!(first.joules_total() <= 30.0 * 0.01 + 1e-9, "{first:?}");
    assert!(first.timestamp() >= 0.0);
}

#[test]
fn create_rejects_bad_interval_config() {
    let c = Config::new().with("interval_ms", "soon");
    assert!(matches!(create_sensor("synthetic", 0, &c), Err(Error::InvalidConfig(_))));
    let c = Config::new().with("interval_ms", 0);
    assert!(matches!(
        create_sensor("synthetic", 0, &c),
        Err(Error::IntervalTooSmall { .. })
    ));
}

#[test]
fn constant_power_ticks_and_energy() {
    let s = synthetic(SyntheticProfile::constant(30.0), 100);
    let ticks0 = s.ticks();
    let a = s.read().unwrap();
    thread::sleep(Duration::from_secs(1));
    let b = s.read().unwrap();
    let ticks = s.ticks() - ticks0;
    assert!((8..=12).contains(&ticks), "ticks {ticks}");
    let j = joules(&a, &b).unwrap();
    assert!((j - 30.0).abs() <= 2.0 * 0.1 * 30.0, "joules {j}");
}

#[test]
fn integration_error_bound_across_shapes() {
    let cases = [
        (SyntheticProfile::constant(1000.0), 1u64, 0.3),
        (SyntheticProfile::constant(0.0), 5, 0.2),
        (SyntheticProfile::constant(250.0), 50, 0.6),
        (SyntheticProfile::ramp(0.0, 100.0, 0.5), 10, 0.7),
        (SyntheticProfile::square(15.0, 260.0, 0.2), 5, 0.6),
    ];
    let handles: Vec<_> = cases
        .into_iter()
        .map(|(profile, h_ms, duration)| {
            thread::spawn(move || {
                let s = synthetic(profile, h_ms);
                let a = s.read().unwrap();
                thread::sleep(Duration::from_secs_f64(duration));
                let b = s.read().unwrap();
                let measured = joules(&a, &b).unwrap();
                let expected =
                    exact_energy(&profile, b.timestamp()) - exact_energy(&profile, a.timestamp());
                let bound = profile.peak_watts.max(profile.base_watts) * 2.0 * h_ms as f64 / 1000.0;
                assert!(
                    (measured - expected).abs() <= bound + 1e-9,
                    "{profile:?} h={h_ms}ms measured {measured} expected {expected} bound {bound}"
                );
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
}

#[test]
fn read_is_monotonic_under_concurrency() {
    let s = Arc::new(synthetic(SyntheticProfile::square(10.0, 90.0, 0.05), 1));
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let s = Arc::clone(&s);
            thread::spawn(move || {
                let mut states = Vec::new();
                for _ in 0..2000 {
                    states.push(s.read().unwrap());
                }
                states
            })
        })
        .collect();
    let mut all = Vec::new();
    for r in readers {
        let states = r.join().unwrap();
        for w in states.windows(2) {
            assert!(w[1].timestamp() >= w[0].timestamp());
            assert!(w[1].joules_total() >= w[0].joules_total());
        }
        all.extend(states);
    }
    for st in &all {
        let sum: f64 = st.joules_per_channel().iter().sum();
        assert!((sum - st.joules_total()).abs() <= 1e-9 * sum.max(1.0));
        assert!(st.joules_total() >= 0.0);
    }
    all.sort_by(|a, b| a.timestamp().total_cmp(&b.timestamp()));
    for w in all.windows(2) {
        assert!(w[1].joules_total() >= w[0].joules_total());
    }
}

#[test]
fn sensors_are_independent() {
    let low = synthetic(SyntheticProfile::constant(10.0), 5);
    let high = synthetic(SyntheticProfile::constant(200.0), 5);
    let (l0, h0) = (low.read().unwrap(), high.read().unwrap());
    for _ in 0..20 {
        let _ = low.read().unwrap();
        thread::sleep(Duration::from_millis(10));
        let _ = high.read().unwrap();
    }
    let (l1, h1) = (low.read().unwrap(), high.read().unwrap());
    // constant power integrates exactly over the snapshot interval
    let lw = joules(&l0, &l1).unwrap() / seconds(&l0, &l1).unwrap();
    let hw = joules(&h0, &h1).unwrap() / seconds(&h0, &h1).unwrap();
    assert!((lw - 10.0).abs() < 1e-6, "{lw}");
    assert!((hw - 200.0).abs() < 1e-6, "{hw}");
}

#[test]
fn stop_is_prompt_and_keeps_final_state() {
    let mut s = synthetic(SyntheticProfile::constant(30.0), 200);
    thread::sleep(Duration::from_millis(250));
    let before = Instant::now();
    s.stop();
    assert!(before.elapsed() <= Duration::from_millis(400));
    assert!(!s.is_running());
    let last = s.read().unwrap();
    s.stop();
    assert_eq!(s.read().unwrap(), last);
    // the final tick happened at stop time
    assert!(last.timestamp() >= 0.25);
}

#[test]
fn states_outlive_the_sensor() {
    let s = synthetic(SyntheticProfile::constant(30.0), 5);
    let a = s.read().unwrap();
    thread::sleep(Duration::from_millis(20));
    let b = s.read().unwrap();
    drop(s);
    assert!(joules(&a, &b).unwrap() >= 0.0);
}

#[test]
fn measure_wraps_a_closure() {
    let s = synthetic(SyntheticProfile::constant(50.0), 2);
    let (out, m) = s
        .measure(|| {
            thread::sleep(Duration::from_millis(200));
            7
        })
        .unwrap();
    assert_eq!(out, 7);
    assert_eq!(m.backend_name, "synthetic");
    assert!((m.seconds - 0.2).abs() < 0.05, "{m:?}");
    assert!((m.watts - 50.0).abs() < 1e-6, "{m:?}");
}
