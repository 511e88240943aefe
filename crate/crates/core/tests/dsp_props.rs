mod common;

use afp::audio::synthesize_tone;
use afp::dsp::{dft_naive, fft, frame_count, stft};
use afp::AudioClip;
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fft_agrees_with_dft(log_n in 1u32..=10, seed in any::<u64>()) {
        let x = random_complex(&mut rng(seed), 1 << log_n);
        prop_assert!(max_abs_diff(&fft(&x).unwrap(), &dft_naive(&x).unwrap()) < 1e-9);
    }

    #[test]
    fn fft_is_linear(log_n in 1u32..=12, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let n = 1 << log_n;
        let mut r = rng(seed);
        let x = random_complex(&mut r, n);
        let y = random_complex(&mut r, n);
        let combo: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect();
        let lhs = fft(&combo).unwrap();
        let fx = fft(&x).unwrap();
        let fy = fft(&y).unwrap();
        let rhs: Vec<Complex64> = fx.iter().zip(&fy).map(|(p, q)| p * a + q * b).collect();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn parseval_holds(log_n in 1u32..=12, seed in any::<u64>()) {
        let n = 1 << log_n;
        let x = random_complex(&mut rng(seed), n);
        let time: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = fft(&x).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((time - freq).abs() / time < 1e-9);
    }

    #[test]
    fn spectrogram_shape(n in 64usize..20_000, log_w in 6u32..=11, hop_frac in 1usize..=8) {
        let window = 1usize << log_w;
        let hop = (window * hop_frac / 8).max(1);
        let clip = AudioClip::new(vec![0.1; n], 44_100).unwrap();
        match stft(&clip, window, hop) {
            Ok(spec) => {
                prop_assert!(n >= window);
                prop_assert_eq!(spec.frames(), (n - window) / hop + 1);
                prop_assert_eq!(spec.frames(), frame_count(n, window, hop));
                prop_assert_eq!(spec.bins(), window / 2 + 1);
                prop_assert!(spec.rows().flatten().all(|&v| v >= -100.0));
            }
            Err(_) => prop_assert!(n < window),
        }
    }
}

#[test]
fn tone_localizes_in_every_frame() {
    // bin = round(f * window / rate)
    for f0 in [220.0, 1000.0, 3150.0, 9000.0] {
        let clip = synthesize_tone(f0, 2.0, 44_100, 0.7).unwrap();
        let spec = stft(&clip, 4096, 2048).unwrap();
        let expected = (f0 * 4096.0 / 44_100.0_f64).round() as usize;
        for row in spec.rows() {
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, expected, "tone {f0} Hz");
        }
    }
}

#[test]
fn stft_uses_hann_and_db_scale() {
    // DC input: windowed sum of a periodic Hann window is window/2, so the
    // DC bin holds 10*log10((c * N / 2)^2)
    let c = 0.5;
    let clip = AudioClip::new(vec![c; 4096], 44_100).unwrap();
    let spec = stft(&clip, 4096, 2048).unwrap();
    let expected = 10.0 * (c * 2048.0f64).powi(2).log10();
    assert!((spec.get(0, 0) - expected).abs() < 1e-9);
}
