use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventStream;
use crate::seed;

const LLOYD_TOL: f64 = 1e-6;
const LLOYD_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalParams {
    pub k: usize,
    pub slice_us: u64,
    pub n_slices: usize,
}

impl Default for TemporalParams {
    fn default() -> Self {
        Self {
            k: 4,
            slice_us: 27_000,
            n_slices: 200,
        }
    }
}

/// Centroid trajectories stored as a `(2k, n_slices)` row-major matrix: row
/// `2j` is the x coordinate of track `j`, row `2j+1` its y coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalComponent {
    pub data: Vec<f32>,
    pub k: usize,
    pub n_slices: usize,
    pub slice_us: u64,
}

impl TemporalComponent {
    pub fn position(&self, track: usize, slice: usize) -> (f32, f32) {
        (
            self.data[2 * track * self.n_slices + slice],
            self.data[(2 * track + 1) * self.n_slices + slice],
        )
    }

    /// All `2k` coordinates of one time slice, in row order.
    pub fn slice_vector(&self, slice: usize) -> Vec<f32> {
        (0..2 * self.k)
            .map(|r| self.data[r * self.n_slices + slice])
            .collect()
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// k-means++ seeding followed by Lloyd iterations. Returns `k` centers;
/// with fewer distinct points than `k` some centers coincide.
pub fn kmeans(points: &[(f64, f64)], k: usize, rng: &mut impl Rng) -> Vec<(f64, f64)> {
    assert!(!points.is_empty() && k >= 1);
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            points[pick]
        } else {
            points[rng.random_range(0..points.len())]
        };
        centers.push(next);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, next));
        }
    }

    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for _ in 0..LLOYD_MAX_ITER {
        sums.iter_mut().for_each(|s| *s = (0.0, 0.0, 0));
        for &p in points {
            let j = nearest(&centers, p);
            sums[j].0 += p.0;
            sums[j].1 += p.1;
            sums[j].2 += 1;
        }
        let mut shift = 0.0f64;
        for (c, &(sx, sy, n)) in centers.iter_mut().zip(&sums) {
            // an emptied cluster keeps its center
            if n > 0 {
                let next = (sx / n as f64, sy / n as f64);
                shift = shift.max(dist2(*c, next));
                *c = next;
            }
        }
        if shift <= LLOYD_TOL * LLOYD_TOL {
            break;
        }
    }
    centers
}

fn nearest(centers: &[(f64, f64)], p: (f64, f64)) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centers.iter().enumerate() {
        let d = dist2(c, p);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Orders `centers` to follow `previous` tracks: the globally closest
/// (track, center) pair is assigned first, then the next closest among the
/// remaining ones.
fn match_tracks(previous: &[(f64, f64)], centers: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let k = previous.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
    for (t, &p) in previous.iter().enumerate() {
        for (c, &q) in centers.iter().enumerate() {
            pairs.push((dist2(p, q), t, c));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; k];
    let mut used = vec![false; k];
    for (_, t, c) in pairs {
        if out[t].is_none() && !used[c] {
            out[t] = Some(centers[c]);
            used[c] = true;
        }
    }
    out.into_iter().map(|c| c.expect("square assignment")).collect()
}

/// Tracks `k` k-means centroids across `n_slices` consecutive time slices of
/// width `slice_us`, starting at the first event.
///
/// Events of both polarities are pooled; every event is one unit-weight
/// point. A slice without events repeats the previous slice's centroids
/// (the sensor center before any activity).
pub fn extract_temporal(
    stream: &EventStream,
    params: TemporalParams,
    seed: u64,
) -> Result<TemporalComponent> {
    let TemporalParams {
        k,
        slice_us,
        n_slices,
    } = params;
    if k == 0 || slice_us == 0 || n_slices == 0 {
        return Err(Error::invalid("k, slice_us and n_slices must be positive"));
    }
    let geometry = stream.geometry();
    let mut buckets: Vec<Vec<(u16, u16)>> = vec![Vec::new(); n_slices];
    if let Some((t0, _)) = stream.time_span() {
        for e in stream.events() {
            let s = ((e.t - t0) / slice_us) as usize;
            if s < n_slices {
                buckets[s].push((e.x, e.y));
            }
        }
    }

    let mut rng = seed::rng(seed);
    let mut tracks: Option<Vec<(f64, f64)>> = None;
    let mut data = vec![0f32; 2 * k * n_slices];
    for (s, bucket) in buckets.iter_mut().enumerate() {
        if !bucket.is_empty() {
            // canonical order makes the result independent of event order
            bucket.sort_unstable();
            let points: Vec<(f64, f64)> = bucket
                .iter()
                .map(|&(x, y)| (f64::from(x), f64::from(y)))
                .collect();
            let mut centers = kmeans(&points, k, &mut rng);
            tracks = Some(match &tracks {
                Some(prev) => match_tracks(prev, &centers),
                None => {
                    centers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
                    centers
                }
            });
        }
        let current = tracks
            .clone()
            .unwrap_or_else(|| vec![geometry.center(); k]);
        for (j, &(x, y)) in current.iter().enumerate() {
            data[2 * j * n_slices + s] = x as f32;
            data[(2 * j + 1) * n_slices + s] = y as f32;
        }
    }
    Ok(TemporalComponent {
        data,
        k,
        n_slices,
        slice_us,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Geometry, Polarity};
    use rand::seq::SliceRandom;

    fn params(k: usize, slice_us: u64, n_slices: usize) -> TemporalParams {
        TemporalParams {
            k,
            slice_us,
            n_slices,
        }
    }

    #[test]
    fn single_pixel_fixed_point() {
        let g = Geometry::new(32, 32);
        let ev = (0..400).map(|i| Event::new(i * 100, 9, 21, Polarity::On)).collect();
        let s = EventStream::new(ev, g).unwrap();
        let tc = extract_temporal(&s, params(1, 1000, 40), 3).unwrap();
        for sl in 0..40 {
            assert_eq!(tc.position(0, sl), (9.0, 21.0));
        }
    }

    #[test]
    fn two_blobs_track_their_means() {
        // blob A around (5, 6), blob B around (25, 20); both stationary
        let g = Geometry::new(32, 32);
        let offsets = [(-1i32, 0i32), (1, 0), (0, -1), (0, 1), (1, 1), (0, 0)];
        let mut ev = Vec::new();
        for slice in 0..10u64 {
            for (i, &(dx, dy)) in offsets.iter().enumerate() {
                let t = slice * 1000 + i as u64 * 10;
                ev.push(Event::new(t, (5 + dx) as u16, (6 + dy) as u16, Polarity::On));
                ev.push(Event::new(t + 1, (25 + dx) as u16, (20 + dy) as u16, Polarity::Off));
            }
        }
        let mean = |cx: f64, cy: f64| {
            let n = offsets.len() as f64;
            (
                cx + offsets.iter().map(|o| o.0 as f64).sum::<f64>() / n,
                cy + offsets.iter().map(|o| o.1 as f64).sum::<f64>() / n,
            )
        };
        let (a, b) = (mean(5.0, 6.0), mean(25.0, 20.0));
        let s = EventStream::new(ev, g).unwrap();
        let tc = extract_temporal(&s, params(2, 1000, 10), 1).unwrap();
        for sl in 0..10 {
            let (p0, p1) = (tc.position(0, sl), tc.position(1, sl));
            let close = |p: (f32, f32), q: (f64, f64)| {
                (f64::from(p.0) - q.0).abs() < 0.5 && (f64::from(p.1) - q.1).abs() < 0.5
            };
            // track order is fixed by the first slice: lexicographic on (x, y)
            assert!(close(p0, a) && close(p1, b), "slice {sl}: {p0:?} {p1:?}");
        }
    }

    #[test]
    fn empty_slice_carries_forward() {
        let g = Geometry::new(16, 16);
        let ev = vec![
            Event::new(0, 2, 3, Polarity::On),
            Event::new(2500, 10, 12, Polarity::On),
        ];
        let s = EventStream::new(ev, g).unwrap();
        let tc = extract_temporal(&s, params(1, 1000, 4), 0).unwrap();
        assert_eq!(tc.position(0, 0), (2.0, 3.0));
        assert_eq!(tc.position(0, 1), (2.0, 3.0));
        assert_eq!(tc.position(0, 2), (10.0, 12.0));
        assert_eq!(tc.position(0, 3), (10.0, 12.0));
    }

    #[test]
    fn empty_stream_sits_at_center() {
        let g = Geometry::new(16, 8);
        let tc = extract_temporal(&EventStream::empty(g), params(2, 1000, 3), 0).unwrap();
        assert!(tc.data.chunks(3).enumerate().all(|(r, row)| row
            .iter()
            .all(|&v| v == if r % 2 == 0 { 7.5 } else { 3.5 })));
    }

    #[test]
    fn order_within_slice_does_not_matter() {
        let g = Geometry::new(32, 32);
        let mut rng = seed::rng(5);
        let mut ev: Vec<Event> = (0..2000)
            .map(|i| {
                Event::new(
                    (i / 100) * 1000,
                    rng.random_range(0..32),
                    rng.random_range(0..32),
                    Polarity::On,
                )
            })
            .collect();
        let a = extract_temporal(&EventStream::new(ev.clone(), g).unwrap(), params(4, 1000, 20), 8)
            .unwrap();
        for chunk in ev.chunks_mut(100) {
            chunk.shuffle(&mut rng);
        }
        let b = extract_temporal(&EventStream::new(ev, g).unwrap(), params(4, 1000, 20), 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_and_bounds() {
        let g = Geometry::new(128, 128);
        let mut rng = seed::rng(1);
        let ev: Vec<Event> = (0..20_000u64)
            .map(|i| Event::new(i * 300, rng.random_range(0..128), rng.random_range(0..128), Polarity::Off))
            .collect();
        let tc = extract_temporal(&EventStream::new(ev, g).unwrap(), TemporalParams::default(), 2).unwrap();
        assert_eq!(tc.data.len(), 8 * 200);
        assert!(tc.data.iter().all(|&v| (0.0..=127.0).contains(&v)));
    }

    #[test]
    fn kmeans_fewer_points_than_k() {
        let mut rng = seed::rng(0);
        let c = kmeans(&[(1.0, 1.0), (1.0, 1.0)], 3, &mut rng);
        assert_eq!(c, vec![(1.0, 1.0); 3]);
    }
}
