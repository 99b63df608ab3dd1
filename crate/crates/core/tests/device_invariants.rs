use nanosyn::{
    apply_pulse, sample_imperfect, DeviceParams, DeviceState, DispersionSpec, PulseKind, PulseSpec,
    Response,
};
use proptest::prelude::*;

fn dispersed(sigma: f64, seed: u64) -> DeviceParams<f64> {
    let spec = DispersionSpec::nominal(sigma).unwrap();
    sample_imperfect(&DeviceParams::nominal(), &spec, seed).unwrap()
}

fn on_grid(s: &DeviceState<f64>) -> bool {
    let p = s.params();
    let g = s.conductance();
    let expected =
        p.g_min() + f64::from(s.level()) * (p.g_max() - p.g_min()) / f64::from(p.n_states());
    (p.g_min()..=p.g_max()).contains(&g) && (g - expected).abs() <= 4.0 * f64::EPSILON * p.g_max()
}

proptest! {
    #[test]
    fn change_follows_own_classification(
        sigma in 0.0..0.3f64,
        seed in any::<u64>(),
        level in 0u32..=128,
        reset in any::<bool>(),
    ) {
        let p = dispersed(sigma, seed);
        let s = DeviceState::at_level(p, level).unwrap();
        let pulse = if reset { PulseSpec::reset() } else { PulseSpec::set() };
        let out = apply_pulse(s, &pulse);
        // a dispersed device may see a nominal Reset as a Set and vice versa
        match p.classify(pulse.amplitude) {
            Response::Increase => prop_assert!(out.state.conductance() >= s.conductance()),
            Response::Decrease => prop_assert!(out.state.conductance() <= s.conductance()),
            Response::None => prop_assert_eq!(out.state, s),
        }
        prop_assert_eq!(out.response, p.classify(pulse.amplitude));
    }

    #[test]
    fn nominal_set_raises_and_reset_lowers(level in 0u32..=128) {
        let s = DeviceState::at_level(DeviceParams::<f64>::nominal(), level).unwrap();
        prop_assert!(apply_pulse(s, &PulseSpec::set()).state.conductance() >= s.conductance());
        prop_assert!(apply_pulse(s, &PulseSpec::reset()).state.conductance() <= s.conductance());
    }

    #[test]
    fn random_pulse_trains_stay_on_grid(
        sigma in 0.0..0.2f64,
        seed in any::<u64>(),
        pulses in prop::collection::vec((any::<bool>(), 0.0..7.0f64), 1..400),
    ) {
        let mut s = DeviceState::at_min(dispersed(sigma, seed));
        for (neg, v) in pulses {
            let amplitude = if neg { -v } else { v };
            s = apply_pulse(s, &PulseSpec::with_amplitude(PulseKind::Set, amplitude)).state;
            prop_assert!(on_grid(&s));
        }
    }

    #[test]
    fn subthreshold_is_bitwise_noop(level in 0u32..=128, v in -3.1..=3.1f64) {
        let s = DeviceState::at_level(DeviceParams::<f64>::nominal(), level).unwrap();
        let out = apply_pulse(s, &PulseSpec::with_amplitude(PulseKind::Reset, v));
        prop_assert_eq!(out.state, s);
        prop_assert_eq!(out.state.conductance().to_bits(), s.conductance().to_bits());
        prop_assert!(!out.saturated);
    }
}

#[test]
fn alternating_million_pulses_do_not_drift() {
    let p = DeviceParams::<f32>::nominal();
    let start = DeviceState::at_level(p, 77).unwrap();
    let mut s = start;
    for i in 0..1_000_000 {
        let pulse = if i % 2 == 0 {
            PulseSpec::set()
        } else {
            PulseSpec::reset()
        };
        s = apply_pulse(s, &pulse).state;
    }
    assert_eq!(s, start);
    assert_eq!(s.conductance().to_bits(), start.conductance().to_bits());
}

#[test]
fn first_set_step_value() {
    let s = DeviceState::at_min(DeviceParams::<f64>::nominal());
    let g = apply_pulse(s, &PulseSpec::set()).state.conductance();
    assert!((g - 2.6265625e-6).abs() < 1e-15);
}
