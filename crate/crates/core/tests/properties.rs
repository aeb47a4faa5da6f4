use std::f64::consts::PI;
use std::path::Path;

use proptest::prelude::*;

use sounder_core::channel::{estimate_channel, estimate_impulse_response, estimate_transfer_function};
use sounder_core::impairment::{simulate, ImpairmentConfig};
use sounder_core::io::{read_iq, write_iq, RunConfig};
use sounder_core::restoration::{estimate_linear_effect, LinearModel};
use sounder_core::signal::fft;
use sounder_core::testsignal::{build_sounding_signal, zadoff_chu, TestSignalSpec};
use sounder_core::window::dolph_chebyshev_window;
use sounder_core::{Complex64, IqSignal, Spectrum};

const PRIMES: &[usize] = &[31, 61, 101, 127, 251, 509];

fn cyclic_conv(x: &[Complex64], taps: &[(usize, Complex64)]) -> Vec<Complex64> {
    let n = x.len();
    (0..n).map(|t| taps.iter().map(|&(d, g)| g * x[(t + n - d % n) % n]).sum()).collect()
}

fn arb_complex(scale: f64) -> impl Strategy<Value = Complex64> {
    (-scale..scale, -scale..scale).prop_map(|(re, im)| Complex64::new(re, im))
}

fn tiled(zc: &IqSignal, taps: &[(usize, Complex64)]) -> IqSignal {
    let y = cyclic_conv(zc.samples(), taps);
    IqSignal::new(y.iter().cycle().take(4 * zc.len()).copied().collect(), 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zadoff_chu_is_flat_and_uncorrelated(i in 0..PRIMES.len(), r in 1usize..1000) {
        let n = PRIMES[i];
        let root = 1 + r % (n - 1);
        let x = zadoff_chu(n, root).unwrap();
        let scale = (n as f64).sqrt();
        for b in fft(&x, 1).unwrap().bins {
            prop_assert!((b.norm() - scale).abs() <= 1e-9 * scale);
        }
        let s = x.samples();
        for lag in 1..n {
            let c: Complex64 = (0..n).map(|t| s[(t + lag) % n] * s[t].conj()).sum();
            prop_assert!(c.norm() < 1e-9 * n as f64);
        }
    }

    #[test]
    fn sounding_signal_is_cyclic_in_the_middle(i in 0..PRIMES.len(), r in 1usize..1000) {
        let n = PRIMES[i];
        let spec = TestSignalSpec { n_zc: n, root: 1 + r % (n - 1), repetitions: 4, period_t: 4 * n + 17 };
        let x = build_sounding_signal(&spec, 1.0).unwrap();
        let s = x.samples();
        for t in n..3 * n {
            prop_assert_eq!(s[t], s[t + n]);
        }
    }

    #[test]
    fn chebyshev_sidelobes_respect_the_bound(i in 0..3usize) {
        let n = [31usize, 64, 1021][i];
        let w = dolph_chebyshev_window(n, 60.0).unwrap();
        let taps: Vec<Complex64> = w.coefficients.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let mag: Vec<f64> = fft(&IqSignal::new(taps, 1.0).unwrap(), 32).unwrap().bins.iter().map(|b| b.norm()).collect();
        let null = (1..mag.len() / 2).find(|&k| mag[k] <= mag[k + 1]).unwrap();
        let side = mag[null..mag.len() - null + 1].iter().copied().fold(0.0, f64::max);
        prop_assert!(20.0 * (side / mag[0]).log10() <= -59.5);
    }

    #[test]
    fn channel_estimate_is_linear(alpha in arb_complex(3.0), g in arb_complex(1.0), d in 1usize..15) {
        prop_assume!(alpha.norm() > 1e-3);
        let zc = zadoff_chu(31, 3).unwrap();
        let taps = [(0, Complex64::new(1.0, 0.0)), (d, g)];
        let scaled: Vec<(usize, Complex64)> = taps.iter().map(|&(d, g)| (d, g * alpha)).collect();
        let a = estimate_channel(&tiled(&zc, &taps), &zc, 60.0, 16).unwrap();
        let b = estimate_channel(&tiled(&zc, &scaled), &zc, 60.0, 16).unwrap();
        for (x, y) in a.h_freq.bins.iter().zip(&b.h_freq.bins) {
            prop_assert!((x * alpha - y).norm() <= 1e-9 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn isolated_tap_appears_at_its_delay(i in 0..PRIMES.len(), frac in 0.0f64..0.5, g in arb_complex(2.0)) {
        prop_assume!(g.norm() > 1e-2);
        let n = PRIMES[i];
        let d = (frac * n as f64) as usize;
        let zc = zadoff_chu(n, 1).unwrap();
        let est = estimate_channel(&tiled(&zc, &[(d, g)]), &zc, 60.0, 16).unwrap();
        let mag: Vec<f64> = est.h_time.samples().iter().map(|v| v.norm()).collect();
        let top = (0..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
        prop_assert_eq!(top, 16 * d);
        prop_assert!((mag[top] - g.norm()).abs() <= 1e-9 * g.norm());
    }

    #[test]
    fn impulse_response_obeys_parseval(bins in prop::collection::vec(arb_complex(1.0), 8..80), pad in 1usize..6) {
        let n = bins.len();
        let spec = Spectrum { bins: bins.clone(), bin_spacing: 1.0 };
        let h = estimate_impulse_response(&spec, 60.0, pad).unwrap();
        let w = dolph_chebyshev_window(n, 60.0).unwrap();
        let shift = n.div_ceil(2);
        let mut e = 0.0;
        for (j, c) in w.coefficients.iter().enumerate() {
            let k = (j + shift) % n;
            let v = (bins[k] * c).norm_sqr();
            e += if n % 2 == 0 && k == n / 2 && pad > 1 { v / 2.0 } else { v };
        }
        let expected = (pad * n) as f64 * e / (w.sum() * w.sum());
        prop_assert!((h.energy() - expected).abs() <= 1e-9 * expected.max(1e-300));
        prop_assert_eq!(h.len(), pad * n);
    }

    #[test]
    fn bin_spacing_shrinks_with_sequence_length(i in 0..PRIMES.len(), fs in 1e3f64..1e8) {
        let n = PRIMES[i];
        let zc = IqSignal::new(zadoff_chu(n, 1).unwrap().into_samples(), fs).unwrap();
        let h = estimate_transfer_function(&zc, &zc).unwrap();
        prop_assert!((h.bin_spacing * n as f64 - fs).abs() <= 1e-12 * fs);
    }

    #[test]
    fn outlier_set_survives_complex_scaling(c in arb_complex(5.0), seed in 0u64..50) {
        prop_assume!(c.norm() > 1e-3);
        let x = build_sounding_signal(&TestSignalSpec::default(), 1.0).unwrap();
        let cfg = ImpairmentConfig { seed, pulse_rate: 1.0, ..ImpairmentConfig::default() };
        let (rec, truth) = simulate(&x, &cfg).unwrap();
        let zeros = IqSignal::zeros(rec.len(), 1.0).unwrap();
        let model = LinearModel { f_hat: cfg.cfo, phi_hat: cfg.phase, a_gain: cfg.gain, b_zero: cfg.zero_offset };
        let base = estimate_linear_effect(&rec, &zeros, &truth.period_starts, &model, &x, 1.5).unwrap();
        let scaled = IqSignal::new(rec.samples().iter().map(|v| v * c).collect(), 1.0).unwrap();
        let m2 = LinearModel { a_gain: model.a_gain * c, b_zero: model.b_zero * c, ..model };
        let out = estimate_linear_effect(&scaled, &zeros, &truth.period_starts, &m2, &x, 1.5).unwrap();
        prop_assert_eq!(base.outliers, out.outliers);
    }

    #[test]
    fn burst_records_rebuild_the_injected_signal(seed in 0u64..1000) {
        let x = build_sounding_signal(&TestSignalSpec::default(), 1.0).unwrap();
        let cfg = ImpairmentConfig { seed, pulse_rate: 0.0, snr_db: f64::INFINITY, ..ImpairmentConfig::default() };
        let (rec, truth) = simulate(&x, &cfg).unwrap();
        let bursts = truth.burst_signal();
        for ((r, b), c) in rec.samples().iter().zip(bursts.samples()).zip(truth.clean_signal.samples()) {
            prop_assert!((r - b - c).norm() <= 1e-12);
        }
    }

    #[test]
    fn disabled_impairments_only_tile(seed in 0u64..1000) {
        let x = build_sounding_signal(&TestSignalSpec::default(), 1.0).unwrap();
        let (rec, truth) = simulate(&x, &ImpairmentConfig { seed, ..ImpairmentConfig::clean() }).unwrap();
        let t = x.len();
        let offset = truth.period_starts[0];
        prop_assert_eq!(rec.len(), offset + 8 * t);
        for (j, v) in rec.samples().iter().enumerate() {
            prop_assert_eq!(*v, x.samples()[(j + t - offset) % t]);
        }
    }

    #[test]
    fn iq_files_round_trip(v in prop::collection::vec((any::<f32>(), any::<f32>()), 1..200)) {
        prop_assume!(v.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        let x = IqSignal::new(v.iter().map(|&(a, b)| Complex64::new(a as f64, b as f64)).collect(), 2.5e6).unwrap();
        write_iq(&path, &x, None).unwrap();
        let y = read_iq(&path, None).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn config_text_round_trips(seed in any::<u64>(), cfo in -0.49f64..0.49, phase in -PI..PI, g in arb_complex(2.0)) {
        let mut cfg = RunConfig::default();
        cfg.impairment.seed = seed;
        cfg.impairment.cfo = cfo;
        cfg.impairment.phase = phase;
        cfg.impairment.gain = g;
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text(), Path::new("cfg")).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
