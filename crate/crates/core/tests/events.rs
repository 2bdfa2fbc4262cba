mod oracles;

use evpriv_core::events::*;
use evpriv_core::seed;
use proptest::prelude::*;
use rand::Rng;

fn random_stream(seed: u64, n: usize, w: u32, h: u32) -> EventStream {
    let mut rng = seed::rng(seed);
    let (t0, dt) = (rng.random_range(0.0..2.0), rng.random_range(0.01..1.0));
    let mut events: Vec<Event> = (0..n)
        .map(|_| {
            let p = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            Event::new(t0 + rng.random_range(0.0..=dt), rng.random_range(0..w) as u16, rng.random_range(0..h) as u16, p)
        })
        .collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    EventStream::new(events, w, h, t0, dt).unwrap()
}

fn tuples(s: &EventStream) -> Vec<(f64, usize, usize, f64)> {
    s.events().iter().map(|e| (e.t, e.x as usize, e.y as usize, e.p.value())).collect()
}

#[test]
fn single_event_examples() {
    let e = Event::new(0.0, 2, 3, Polarity::Positive);
    let s = EventStream::new(vec![e], 4, 4, 0.0, 1.0).unwrap();
    let g = voxelize(&s, 4).unwrap();
    assert_eq!(g.get(0, 3, 2), 1.0);
    assert_eq!(g.sum(), 1.0);

    // t* = 1.5 with B = 4 and a unit window: t = 0.5.
    let s = EventStream::new(vec![Event::new(0.5, 1, 1, Polarity::Positive)], 4, 4, 0.0, 1.0).unwrap();
    let g = voxelize(&s, 4).unwrap();
    assert_eq!((g.get(1, 1, 1), g.get(2, 1, 1)), (0.5, 0.5));
    assert!(voxelize(&s, 0).is_err());
}

#[test]
fn zero_duration_puts_everything_in_bin_zero() {
    let events = vec![Event::new(1.0, 0, 0, Polarity::Positive), Event::new(1.0, 1, 0, Polarity::Negative)];
    let s = EventStream::new(events, 2, 1, 1.0, 0.0).unwrap();
    let g = voxelize(&s, 3).unwrap();
    assert_eq!(g.data(), &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn five_hundred_events_match_brute_force() {
    let s = random_stream(500, 500, 12, 9);
    let g = voxelize(&s, 10).unwrap();
    let o = oracles::voxel(&tuples(&s), s.t0(), s.duration(), 10, 9, 12);
    assert_eq!(g.data(), &o[..]);
}

proptest! {
    #[test]
    fn voxel_grid_matches_oracle(seed in any::<u64>(), n in 0usize..400, bins in 1usize..20, w in 1u32..9, h in 1u32..9) {
        let s = random_stream(seed, n, w, h);
        let g = voxelize(&s, bins).unwrap();
        let o = oracles::voxel(&tuples(&s), s.t0(), s.duration(), bins, h as usize, w as usize);
        prop_assert_eq!(g.data(), &o[..]);
        prop_assert!((g.sum() - s.polarity_sum() as f64).abs() <= 1e-12 * (n.max(1) as f64));
    }

    #[test]
    fn voxelize_is_additive(seed in any::<u64>(), n in 0usize..200, bins in 1usize..12) {
        let s = random_stream(seed, n, 5, 4);
        let (a, b): (Vec<Event>, Vec<Event>) = s.events().iter().partition(|e| e.x % 2 == 0);
        let ga = voxelize(&EventStream::new(a, 5, 4, s.t0(), s.duration()).unwrap(), bins).unwrap();
        let gb = voxelize(&EventStream::new(b, 5, 4, s.t0(), s.duration()).unwrap(), bins).unwrap();
        let g = voxelize(&s, bins).unwrap();
        for i in 0..g.data().len() {
            prop_assert!((g.data()[i] - (ga.data()[i] + gb.data()[i])).abs() <= 1e-9);
        }
    }

    #[test]
    fn slices_concatenate_to_the_stream(seed in any::<u64>(), n in 0usize..100, count in 1usize..30) {
        let s = random_stream(seed, n, 4, 4);
        let slices = slice_stream(&s, count).unwrap();
        prop_assert_eq!(slices.len(), n.div_ceil(count));
        let joined: Vec<Event> = slices.iter().flat_map(|x| x.events().to_vec()).collect();
        prop_assert_eq!(&joined[..], s.events());
        for x in &slices {
            prop_assert!(x.len() <= count);
        }
    }
}

#[test]
fn slice_sizes() {
    let s = random_stream(1, 10, 4, 4);
    let sizes: Vec<usize> = slice_stream(&s, 4).unwrap().iter().map(EventStream::len).collect();
    assert_eq!(sizes, vec![4, 4, 2]);
    assert_eq!(slice_stream(&s, 10).unwrap()[0].events(), s.events());
    assert!(slice_stream(&s, 0).is_err());
}

/// Replays the stream pixel by pixel for all four baselines.
fn replay(s: &EventStream) -> [Vec<f64>; 4] {
    let (w, h) = (s.width() as usize, s.height() as usize);
    let mut last: Vec<Option<(f64, f64)>> = vec![None; w * h];
    let mut count = vec![0usize; w * h];
    for e in s.events() {
        let i = e.y as usize * w + e.x as usize;
        last[i] = Some((e.t, e.p.value()));
        count[i] += 1;
    }
    let binary = last.iter().map(|l| l.map_or(0.5, |(_, p)| if p > 0.0 { 1.0 } else { 0.0 })).collect();
    let max = *count.iter().max().unwrap_or(&0);
    let hist = count.iter().map(|&c| if max == 0 { 0.0 } else { c as f64 / max as f64 }).collect();
    let ts = last.iter().map(|l| l.map_or(0.0, |(t, _)| (t - s.t0()) / s.duration())).collect();
    let mut distinct: Vec<f64> = last.iter().flatten().map(|(t, _)| *t).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let sorted = last
        .iter()
        .map(|l| l.map_or(0.0, |(t, _)| (distinct.iter().filter(|d| **d <= t).count()) as f64 / distinct.len() as f64))
        .collect();
    [binary, hist, ts, sorted]
}

proptest! {
    #[test]
    fn baselines_match_replay(seed in any::<u64>(), n in 0usize..300) {
        let s = random_stream(seed, n, 7, 5);
        let [binary, hist, ts, sorted] = replay(&s);
        prop_assert_eq!(binary_event_image(&s).pixels().to_vec(), binary);
        prop_assert_eq!(event_histogram(&s).pixels().to_vec(), hist);
        let got = timestamp_image(&s);
        for (a, b) in got.pixels().iter().zip(&ts) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert_eq!(sorted_timestamp_image(&s).pixels().to_vec(), sorted);
    }
}

#[test]
fn baseline_examples() {
    let empty = EventStream::new(vec![], 3, 2, 0.0, 1.0).unwrap();
    assert!(binary_event_image(&empty).pixels().iter().all(|&p| p == 0.5));
    assert!(event_histogram(&empty).pixels().iter().all(|&p| p == 0.0));
    assert!(timestamp_image(&empty).pixels().iter().all(|&p| p == 0.0));

    let events = vec![
        Event::new(0.1, 0, 0, Polarity::Positive),
        Event::new(0.2, 0, 0, Polarity::Negative),
        Event::new(0.3, 0, 0, Polarity::Positive),
        Event::new(0.9, 1, 0, Polarity::Negative),
    ];
    let s = EventStream::new(events, 3, 1, 0.0, 1.0).unwrap();
    assert_eq!(event_histogram(&s).pixels(), &[1.0, 1.0 / 3.0, 0.0]);
    assert_eq!(binary_event_image(&s).pixels(), &[1.0, 0.0, 0.5]);
    // Last timestamps 0.3 and 0.9: two ranks.
    assert_eq!(sorted_timestamp_image(&s).pixels(), &[0.5, 1.0, 0.0]);
    let at_end = EventStream::new(vec![Event::new(1.0, 2, 0, Polarity::Positive)], 3, 1, 0.0, 1.0).unwrap();
    assert_eq!(timestamp_image(&at_end).get(0, 2), 1.0);
}
