use proptest::prelude::*;
use serde_json::json;

use holonsim::agents::{energy_step, Battery, EnergyModel, LedMode, LedState};
use holonsim::audio_core::{NightWindow, SimClock, HOP, MEL_BANDS};
use holonsim::dsp_transforms::{freq_mod, pitch_shift_octave, ring_mod, Direction};
use holonsim::environment::{mix_into, parse_jsonl, to_jsonl, ActiveSource, Channel, LogRecord};
use holonsim::features::{AnalysisVector, SampleCollection, SoundSample, VECTOR_DIM};
use holonsim::telemetry::{attribute, COMPONENTS};

fn hop() -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-1.0f32..1.0, HOP)
}

fn src(pcm: &[f32], p: (f64, f64), channel: Channel) -> ActiveSource<'_> {
    ActiveSource {
        position: [p.0, p.1],
        channel,
        hop: pcm,
    }
}

fn channel() -> impl Strategy<Value = Channel> {
    prop_oneof![
        Just(Channel::Biophony),
        Just(Channel::Geophony),
        Just(Channel::Anthrophony),
        Just(Channel::Cyberphony),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn battery_stays_in_bounds_and_ledger_balances(
        initial in 0.0f64..12.0,
        max in 0.5f64..20.0,
        harvest in 0.0f64..5.0,
        emit_cost in 0.0f64..3.0,
        day in 30.0f64..600.0,
        start in 0.0f64..1.0,
        pattern in prop::collection::vec(any::<bool>(), 1..64),
    ) {
        let model = EnergyModel {
            battery_max_wh: max,
            peak_harvest_w: harvest,
            cost_emit_w: emit_cost,
            ..EnergyModel::default()
        };
        let mut b = Battery::new(initial.min(max));
        let first = b.wh;
        let mut clock = SimClock::new(day, start, NightWindow::default());
        for i in 0..5000 {
            energy_step(&mut b, &clock, pattern[i % pattern.len()], &model);
            prop_assert!(b.wh >= 0.0 && b.wh <= max);
            clock.advance();
        }
        let lhs = b.harvested_wh - b.consumed_wh;
        let rhs = (b.wh - first) + b.clamp_loss_wh;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn liveliness_never_decreases_with_charge(a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let m = EnergyModel::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.liveliness(lo) <= m.liveliness(hi));
    }

    #[test]
    fn bus_is_linear(
        x in hop(),
        y in hop(),
        gain in 0.0f64..4.0,
        px in (-20.0f64..20.0, -20.0f64..20.0),
        py in (-20.0f64..20.0, -20.0f64..20.0),
        ch in channel(),
    ) {
        let at = [0.0, 0.0];
        let scaled: Vec<f32> = x.iter().map(|&v| (v as f64 * gain) as f32).collect();
        let mix = |sources: &[ActiveSource]| {
            let mut out = vec![0.0; HOP];
            mix_into(at, 2.0, sources, |_| true, &mut out);
            out
        };
        let one = mix(&[src(&x, px, ch)]);
        let both = mix(&[src(&x, px, ch), src(&y, py, ch)]);
        let other = mix(&[src(&y, py, ch)]);
        let gained = mix(&[src(&scaled, px, ch)]);
        for i in 0..HOP {
            prop_assert!((both[i] - one[i] - other[i]).abs() <= 1e-9);
            prop_assert!((gained[i] - gain * one[i]).abs() <= 1e-6 * (1.0 + gain));
        }
    }

    #[test]
    fn attribution_parts_sum_to_total(
        total in prop::collection::vec(0.0f64..10.0, MEL_BANDS),
        parts in prop::collection::vec(prop::collection::vec(0.0f64..5.0, MEL_BANDS), COMPONENTS),
        silent_band in 0usize..MEL_BANDS,
    ) {
        let total: [f64; MEL_BANDS] = total.try_into().unwrap();
        let mut p = [[0.0; MEL_BANDS]; COMPONENTS];
        for (dst, src) in p.iter_mut().zip(&parts) {
            dst.copy_from_slice(src);
            dst[silent_band] = 0.0;
        }
        let split = attribute(&total, &p);
        for b in 0..MEL_BANDS {
            let sum: f64 = split[b].iter().sum();
            prop_assert!(split[b].iter().all(|&v| v >= 0.0));
            prop_assert!((sum - total[b]).abs() <= 1e-12 * (1.0 + total[b]));
        }
    }

    #[test]
    fn collection_respects_item_and_byte_caps(
        max_items in 1usize..40,
        cap in 1_000usize..200_000,
        offers in prop::collection::vec((prop::array::uniform8(-100.0f64..100.0), 1usize..20_000), 1..120),
    ) {
        let mut c = SampleCollection::new(max_items, cap);
        for (v, len) in offers {
            let mut full = [0.0; VECTOR_DIM];
            for (d, x) in full.iter_mut().enumerate() {
                *x = v[d % 8] * (d + 1) as f64;
            }
            c.offer(SoundSample {
                pcm: vec![0.0; len],
                vector: AnalysisVector::from_array(full),
                captured_at: 0,
                source_label: None,
            });
            prop_assert!(c.len() <= max_items);
            prop_assert!(c.total_bytes() <= cap);
        }
    }

    #[test]
    fn transforms_follow_length_contracts(
        pcm in prop::collection::vec(-1.0f32..1.0, 0..5000),
        carrier in 1.0f64..4000.0,
        index in 0.0f64..100.0,
    ) {
        prop_assert_eq!(ring_mod(&pcm, carrier).len(), pcm.len());
        prop_assert_eq!(freq_mod(&pcm, carrier, index).len(), pcm.len());
        prop_assert_eq!(pitch_shift_octave(&pcm, Direction::Up).len(), pcm.len().div_ceil(2));
        prop_assert_eq!(pitch_shift_octave(&pcm, Direction::Down).len(), 2 * pcm.len());
        prop_assert!(freq_mod(&pcm, carrier, index).iter().all(|v| v.abs() <= 1.0));
        prop_assert!(ring_mod(&pcm, carrier).iter().zip(&pcm).all(|(y, x)| y.abs() <= x.abs() + 1e-6));
    }

    #[test]
    fn accepted_blue_lapses_at_its_deadline(set_at in 0u64..10_000, hold in 1u64..500, probe in 0u64..1_000) {
        let mut led = LedState::default();
        led.set(LedMode::AcceptedBlue, 1.0, Some(set_at + hold));
        let tick = set_at + probe;
        led.expire(tick);
        if tick >= set_at + hold {
            prop_assert_eq!(led.mode, LedMode::Off);
            prop_assert_eq!(led.intensity, 0.0);
        } else {
            prop_assert_eq!(led.mode, LedMode::AcceptedBlue);
        }
    }

    #[test]
    fn log_round_trips(events in prop::collection::vec((0u64..1_000_000, prop::option::of(0u32..200), -1e6f64..1e6), 0..50)) {
        let mut records: Vec<LogRecord> = events
            .iter()
            .map(|&(tick, agent, value)| match agent {
                Some(id) => LogRecord {
                    tick,
                    agent_id: Some(id),
                    kind: "composer".into(),
                    event: "emit".into(),
                    payload: json!({ "value": value }),
                },
                None => LogRecord::system(tick, "clock", json!({ "seconds": value })),
            })
            .collect();
        records.push(LogRecord::system(1_000_000, "clock", json!({ "seconds": 0.0, "final": true })));
        let parsed = parse_jsonl(&to_jsonl(&records));
        prop_assert!(parsed.complete);
        prop_assert_eq!(parsed.records, records);
    }
}
