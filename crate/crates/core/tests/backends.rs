use std::thread;
use std::time::Duration;

use pmt_core::fixture::FakeSysfs;
use pmt_core::gpu::scripted::{GpuCall, ScriptedReader};
use pmt_core::gpu::GpuBackend;
use pmt_core::{create_sensor, joules, list_backends, Config, CounterKind, Error, SamplerConfig, Sensor};

fn tree() -> (tempfile::TempDir, FakeSysfs) {
    let dir = tempfile::tempdir().unwrap();
    let fake = FakeSysfs::new(dir.path()).unwrap();
    (dir, fake)
}

fn wait_ticks(sensor: &Sensor, n: u64) {
    let target = sensor.ticks() + n;
    while sensor.ticks() < target {
        thread::sleep(Duration::from_millis(5));
    }
}

#[test]
fn rapl_sensor_lists_package_channel() {
    let (_d, fake) = tree();
    fake.add_rapl_zone("intel-rapl:0", "package-0", 0, 262_143_328_850).unwrap();
    let s = create_sensor("rapl", 0, &fake.config()).unwrap();
    assert_eq!(s.descriptor().channel_names().collect::<Vec<_>>(), ["package-0"]);
    assert_eq!(s.descriptor().counter_kind, CounterKind::CumulativeEnergy);
    assert_eq!(s.interval(), Duration::from_millis(100));
}

#[test]
fn rapl_microjoule_delta_becomes_joules() {
    let (_d, fake) = tree();
    fake.add_rapl_zone("intel-rapl:0", "package-0", 1_000_000, 262_143_328_850).unwrap();
    let s = create_sensor("rapl", 0, &fake.config()).unwrap();
    let a = s.read().unwrap();
    fake.set_energy_uj("intel-rapl:0", 6_000_000).unwrap();
    wait_ticks(&s, 2);
    let b = s.read().unwrap();
    assert_eq!(joules(&a, &b).unwrap(), 5.0);
}

#[test]
fn rapl_subdomains_do_not_double_count() {
    let (_d, fake) = tree();
    fake.add_rapl_zone("intel-rapl:0", "package-0", 0, 1_000_000_000).unwrap();
    fake.add_rapl_zone("intel-rapl:0:0", "core", 0, 1_000_000_000).unwrap();
    let mut s = create_sensor("rapl", 0, &fake.config()).unwrap();
    assert_eq!(s.descriptor().channel_names().collect::<Vec<_>>(), ["package-0", "core"]);
    fake.set_energy_uj("intel-rapl:0", 3_000_000).unwrap();
    fake.set_energy_uj("intel-rapl:0:0", 2_000_000).unwrap();
    s.stop();
    let st = s.read().unwrap();
    assert_eq!(st.joules_per_channel(), [3.0, 2.0]);
    assert_eq!(st.joules_total(), 3.0);
}

#[test]
fn rapl_total_is_sum_of_package_deltas_across_wraps() {
    let (_d, fake) = tree();
    let max = 1_000_000u64;
    fake.add_rapl_zone("intel-rapl:0", "package-0", 900_000, max).unwrap();
    fake.add_rapl_zone("intel-rapl:1", "package-1", 0, max).unwrap();
    let mut s = create_sensor("rapl", 0, &fake.config()).unwrap();
    let (mut p0, mut p1) = (900_000u64, 0u64);
    let mut expected_uj = 0u64;
    for step in [300_000u64, 450_000, 999_999, 10] {
        p0 = (p0 + step) % max;
        p1 = (p1 + step / 2) % max;
        expected_uj += step + step / 2;
        fake.set_energy_uj("intel-rapl:0", p0).unwrap();
        fake.set_energy_uj("intel-rapl:1", p1).unwrap();
        wait_ticks(&s, 2);
    }
    s.stop();
    let total = s.read().unwrap().joules_total();
    let expected = expected_uj as f64 / 1e6;
    assert!((total - expected).abs() <= 1e-9 * expected, "{total} vs {expected}");
}

#[test]
fn rapl_garbage_mid_run_stops_sensor() {
    let (_d, fake) = tree();
    let zone = fake.add_rapl_zone("intel-rapl:0", "package-0", 0, 1000).unwrap();
    let s = create_sensor("rapl", 0, &fake.config()).unwrap();
    pmt_core::fixture::write_atomic(&zone.join("energy_uj"), "garbage").unwrap();
    thread::sleep(Duration::from_millis(350));
    assert!(matches!(s.read(), Err(Error::SensorStopped(_))));
}

#[test]
fn rapl_interval_limits() {
    let (_d, fake) = tree();
    fake.add_rapl_zone("intel-rapl:0", "package-0", 0, 1000).unwrap();
    let c = fake.config().with("interval_ms", 5);
    assert!(matches!(create_sensor("rapl", 0, &c), Err(Error::IntervalTooSmall { .. })));
    assert!(matches!(
        create_sensor("rapl", 1, &fake.config()),
        Err(Error::DeviceUnavailable(_))
    ));
}

#[test]
fn list_reflects_fixture_tree() {
    let (_d, fake) = tree();
    fake.add_rapl_zone("intel-rapl:0", "package-0", 0, 1000).unwrap();
    fake.add_hwmon(0, &[("power1_input", "1000000\n")]).unwrap();
    let list = list_backends(&fake.config());
    let rapl = list.iter().find(|b| b.descriptor.backend_name == "rapl").unwrap();
    assert!(rapl.available);
    assert_eq!(rapl.devices, 1);
    assert_eq!(rapl.descriptor.min_interval, Duration::from_millis(100));
    let hwmon = list.iter().find(|b| b.descriptor.backend_name == "hwmon").unwrap();
    assert!(hwmon.available);
    assert!(list.iter().any(|b| b.descriptor.backend_name == "synthetic" && b.available));
}

#[test]
fn hwmon_constant_power_integrates() {
    let (_d, fake) = tree();
    fake.add_hwmon(0, &[("power1_input", "150000000\n"), ("name", "fpga\n")]).unwrap();
    let s = create_sensor("hwmon", 0, &fake.config()).unwrap();
    assert_eq!(s.descriptor().counter_kind, CounterKind::InstantaneousPower);
    let a = s.read().unwrap();
    thread::sleep(Duration::from_secs(1));
    let b = s.read().unwrap();
    let j = joules(&a, &b).unwrap();
    assert!((150.0 * 0.8..=150.0 * 1.2).contains(&j), "{j}");
}

#[test]
fn hwmon_energy_counter_is_exact() {
    let (_d, fake) = tree();
    fake.add_hwmon(0, &[("energy1_input", "1000\n")]).unwrap();
    let mut s = create_sensor("hwmon", 0, &fake.config()).unwrap();
    assert_eq!(s.descriptor().counter_kind, CounterKind::CumulativeEnergy);
    fake.add_hwmon(0, &[("energy1_input", "2501000\n")]).unwrap();
    s.stop();
    assert_eq!(s.read().unwrap().joules_total(), 2.5);
}

#[test]
fn hwmon_mixed_kinds_rejected_at_create() {
    let (_d, fake) = tree();
    fake.add_hwmon(0, &[("power1_input", "1\n"), ("energy1_input", "1\n")]).unwrap();
    assert!(matches!(
        create_sensor("hwmon", 0, &fake.config()),
        Err(Error::MixedKinds(_))
    ));
}

fn gpu_sensor(reader: ScriptedReader, device: u32, interval_ms: u64) -> pmt_core::Result<Sensor> {
    let backend = GpuBackend::open(Box::new(reader), device)?;
    Sensor::from_backend(
        Box::new(backend),
        SamplerConfig::new(Duration::from_millis(interval_ms)),
    )
}

#[test]
fn gpu_constant_power_for_one_second() {
    let reader = ScriptedReader::constant(1, 250_000);
    let log = reader.call_log();
    let mut s = gpu_sensor(reader, 0, 10).unwrap();
    assert_eq!(s.descriptor().channel_names().collect::<Vec<_>>(), ["gpu0"]);
    let a = s.read().unwrap();
    thread::sleep(Duration::from_secs(1));
    let b = s.read().unwrap();
    let j = joules(&a, &b).unwrap();
    assert!((j - 250.0).abs() <= 250.0 * 2.0 * 0.01 + 250.0 * 0.02, "{j}");
    s.stop();
    drop(s);
    assert_eq!(log.count(GpuCall::Shutdown), 1);
    assert_eq!(log.count(GpuCall::Initialize), 1);
    assert!(log.power_queries() > 50);
    assert!(log.is_well_ordered());
}

#[test]
fn gpu_shutdown_once_when_reads_fail() {
    let reader = ScriptedReader::with_profile(1, |t| if t < 0.05 { Ok(1000) } else { Err(3) });
    let log = reader.call_log();
    let s = gpu_sensor(reader, 0, 10).unwrap();
    thread::sleep(Duration::from_millis(150));
    assert!(matches!(s.read(), Err(Error::SensorStopped(_))));
    drop(s);
    assert_eq!(log.count(GpuCall::Shutdown), 1);
    assert!(log.is_well_ordered());
}

#[test]
fn gpu_shutdown_once_when_interval_rejected() {
    let reader = ScriptedReader::constant(1, 1000);
    let log = reader.call_log();
    assert!(matches!(
        gpu_sensor(reader, 0, 5),
        Err(Error::IntervalTooSmall { .. })
    ));
    assert_eq!(log.count(GpuCall::Shutdown), 1);
}

#[test]
fn gpu_bad_device_and_failed_init() {
    assert!(matches!(
        gpu_sensor(ScriptedReader::constant(1, 1000), 3, 10),
        Err(Error::DeviceUnavailable(_))
    ));
    assert!(matches!(
        gpu_sensor(ScriptedReader::constant(1, 1000).failing_initialize(), 0, 10),
        Err(Error::DeviceUnavailable(_))
    ));
}

#[test]
fn vendor_backends_without_drivers_are_unavailable_not_fatal() {
    let list = list_backends(&Config::new());
    for name in ["nvml", "rocm-smi"] {
        let info = list.iter().find(|b| b.descriptor.backend_name == name).unwrap();
        if !info.available {
            assert!(info.detail.is_some());
            assert!(matches!(
                create_sensor(name, 0, &Config::new()),
                Err(Error::DeviceUnavailable(_))
            ));
        }
    }
}
