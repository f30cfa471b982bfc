//! Loaded/unloaded segmentation of the load estimate.

use serde::{Deserialize, Serialize};

pub const CONTACT_THRESHOLD_N: f64 = 0.1;
pub const CONTACT_HYSTERESIS_N: f64 = 0.02;

/// Half-open sample range `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub loaded: bool,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Schmitt trigger on `w`: loaded from the first sample at or above
/// `threshold` until the first sample below `threshold - hysteresis`.
pub fn segment_contacts(w: &[f64], threshold: f64, hysteresis: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    if w.is_empty() {
        return out;
    }
    let mut loaded = w[0] >= threshold;
    let mut start = 0;
    for (k, &x) in w.iter().enumerate().skip(1) {
        let next = if loaded { x >= threshold - hysteresis } else { x >= threshold };
        if next != loaded {
            out.push(Segment { start, end: k, loaded });
            start = k;
            loaded = next;
        }
    }
    out.push(Segment {
        start,
        end: w.len(),
        loaded,
    });
    out
}

/// Move every interior boundary `shift` samples earlier, dropping segments
/// that vanish and merging equal neighbours.
pub fn advance_boundaries(segments: &[Segment], shift: usize) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    let n = segments.last().map_or(0, |s| s.end);
    for (i, s) in segments.iter().enumerate() {
        let start = if i == 0 { 0 } else { s.start.saturating_sub(shift) };
        let end = if i + 1 == segments.len() { n } else { s.end.saturating_sub(shift) };
        let start = out.last().map_or(start, |p| start.max(p.end));
        if end <= start {
            continue;
        }
        match out.last_mut() {
            Some(p) if p.loaded == s.loaded => p.end = end,
            Some(p) => {
                p.end = start;
                out.push(Segment { start, end, loaded: s.loaded });
            }
            None => out.push(Segment { start: 0, end, loaded: s.loaded }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_load_is_one_unloaded_segment() {
        let s = segment_contacts(&[0.0; 100], CONTACT_THRESHOLD_N, CONTACT_HYSTERESIS_N);
        assert_eq!(s, vec![Segment { start: 0, end: 100, loaded: false }]);
        assert!(segment_contacts(&[], 0.1, 0.02).is_empty());
    }

    #[test]
    fn hysteresis_suppresses_chatter() {
        // wobble between 0.09 and 0.11 after the first crossing
        let w: Vec<f64> = (0..100).map(|k| if k < 10 { 0.0 } else if k % 2 == 0 { 0.11 } else { 0.09 }).collect();
        let s = segment_contacts(&w, 0.1, 0.02);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], Segment { start: 10, end: 100, loaded: true });
        let s = segment_contacts(&w, 0.1, 0.0);
        assert!(s.len() > 10);
    }

    #[test]
    fn segments_alternate_and_tile() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..2000).map(|_| rng.random_range(-0.2..0.4)).collect();
        let s = segment_contacts(&w, 0.1, 0.02);
        assert_eq!(s[0].start, 0);
        assert_eq!(s.last().unwrap().end, w.len());
        for p in s.windows(2) {
            assert_eq!(p[0].end, p[1].start);
            assert_ne!(p[0].loaded, p[1].loaded);
        }
    }

    #[test]
    fn advancing_keeps_tiling() {
        let s = vec![
            Segment { start: 0, end: 100, loaded: false },
            Segment { start: 100, end: 105, loaded: true },
            Segment { start: 105, end: 300, loaded: false },
            Segment { start: 300, end: 400, loaded: true },
        ];
        let a = advance_boundaries(&s, 20);
        assert_eq!(
            a,
            vec![
                Segment { start: 0, end: 80, loaded: false },
                Segment { start: 80, end: 85, loaded: true },
                Segment { start: 85, end: 280, loaded: false },
                Segment { start: 280, end: 400, loaded: true },
            ]
        );
        let a = advance_boundaries(&s, 150);
        assert_eq!(a.first().unwrap().start, 0);
        assert_eq!(a.last().unwrap().end, 400);
        for p in a.windows(2) {
            assert_eq!(p[0].end, p[1].start);
            assert_ne!(p[0].loaded, p[1].loaded);
        }
    }
}
