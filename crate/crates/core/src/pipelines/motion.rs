//! Motion pipeline: a fixed-threshold classifier on the spread of the
//! acceleration magnitude over a short window.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::domain::{AccelSample, Motion, Tick, MS_PER_MINUTE};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MotionParams {
    /// Magnitude standard deviation above which a window counts as moving.
    pub threshold_ms2: f64,
    pub window_ms: u64,
    pub min_samples: usize,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            threshold_ms2: 0.5,
            window_ms: 5_000,
            min_samples: 10,
        }
    }
}

/// Population standard deviation of the vector magnitudes.
pub fn magnitude_spread<T: Real>(window: &[[T; 3]]) -> T {
    let n = T::from_usize(window.len()).expect("window length");
    let mags: Vec<T> = window
        .iter()
        .map(|[x, y, z]| (*x * *x + *y * *y + *z * *z).sqrt())
        .collect();
    let mean = mags.iter().fold(T::zero(), |a, &m| a + m) / n;
    let var = mags
        .iter()
        .fold(T::zero(), |a, &m| a + (m - mean) * (m - mean))
        / n;
    var.sqrt()
}

pub fn classify_motion(window: &[AccelSample], threshold_ms2: f64) -> Result<Motion> {
    classify_with(window, threshold_ms2, MotionParams::default().min_samples)
}

fn classify_with(window: &[AccelSample], threshold_ms2: f64, min_samples: usize) -> Result<Motion> {
    if window.len() < min_samples {
        return Err(Error::WindowTooSmall {
            got: window.len(),
            need: min_samples,
        });
    }
    let xyz: Vec<[f64; 3]> = window.iter().map(|s| [s.ax, s.ay, s.az]).collect();
    Ok(if magnitude_spread(&xyz) > threshold_ms2 {
        Motion::Moving
    } else {
        Motion::Stationary
    })
}

/// Labels each minute of one node from the window that closes the minute.
#[derive(Clone, Debug)]
pub struct MotionTracker {
    params: MotionParams,
    minute: Option<u64>,
    window: Vec<AccelSample>,
    labels: BTreeMap<u64, Motion>,
}

impl MotionTracker {
    pub fn new(params: MotionParams) -> Self {
        MotionTracker {
            params,
            minute: None,
            window: Vec::new(),
            labels: BTreeMap::new(),
        }
    }

    /// Samples must arrive in time order.
    pub fn push(&mut self, s: &AccelSample) {
        let m = s.t.minute();
        if self.minute != Some(m) {
            self.close();
            self.minute = Some(m);
        }
        let window_start = Tick::end_of_minute(m).0 + 1 - self.params.window_ms.min(MS_PER_MINUTE);
        if s.t.0 >= window_start {
            self.window.push(s.clone());
        }
    }

    fn close(&mut self) {
        if let Some(m) = self.minute {
            // too few samples leaves the minute unlabelled
            if let Ok(label) = classify_with(
                &self.window,
                self.params.threshold_ms2,
                self.params.min_samples,
            ) {
                self.labels.insert(m, label);
            }
        }
        self.window.clear();
    }

    pub fn finish(mut self) -> BTreeMap<u64, Motion> {
        self.close();
        self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::NodeId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn window(az: impl Fn(usize) -> f64, n: usize) -> Vec<AccelSample> {
        let node = NodeId::new("a").unwrap();
        (0..n)
            .map(|k| AccelSample {
                t: Tick(k as u64 * 50),
                node: node.clone(),
                ax: 0.0,
                ay: 0.0,
                az: az(k),
            })
            .collect()
    }

    #[test]
    fn constant_gravity_is_stationary() {
        let w = window(|_| 9.81, 100);
        assert_eq!(classify_motion(&w, 0.5).unwrap(), Motion::Stationary);
        assert_eq!(Motion::Stationary.code(), 1);
    }

    #[test]
    fn alternating_is_moving() {
        let w = window(|k| if k % 2 == 0 { 11.81 } else { 7.81 }, 100);
        let xyz: Vec<[f64; 3]> = w.iter().map(|s| [s.ax, s.ay, s.az]).collect();
        assert!((magnitude_spread(&xyz) - 2.0).abs() < 1e-12);
        assert_eq!(classify_motion(&w, 0.5).unwrap(), Motion::Moving);
        assert_eq!(Motion::Moving.code(), 2);
    }

    #[test]
    fn small_window_rejected() {
        let w = window(|_| 9.81, 9);
        assert!(matches!(
            classify_motion(&w, 0.5),
            Err(Error::WindowTooSmall { got: 9, need: 10 })
        ));
    }

    #[test]
    fn low_noise_stays_stationary() {
        // Monte Carlo: 2000 windows of 100 samples with 0.1 m/s² noise per axis
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let node = NodeId::new("a").unwrap();
        let mut moving = 0;
        for _ in 0..2000 {
            let w: Vec<AccelSample> = (0..100)
                .map(|k| AccelSample {
                    t: Tick(k * 50),
                    node: node.clone(),
                    ax: noise.sample(&mut rng),
                    ay: noise.sample(&mut rng),
                    az: 9.81 + noise.sample(&mut rng),
                })
                .collect();
            if classify_motion(&w, 0.5).unwrap() == Motion::Moving {
                moving += 1;
            }
        }
        assert_eq!(moving, 0);
    }

    #[test]
    fn generic_over_precision() {
        let w32: Vec<[f32; 3]> = vec![[0.0, 0.0, 11.81], [0.0, 0.0, 7.81]];
        assert!((magnitude_spread(&w32) - 2.0).abs() < 1e-5);
    }

    #[test]
    fn tracker_uses_closing_window() {
        let node = NodeId::new("a").unwrap();
        let mut tr = MotionTracker::new(MotionParams::default());
        for k in 0..2400u64 {
            let t = k * 50;
            // minute 0 shakes only before its last 5 s, minute 1 only inside it
            let shaking = !(50_000..115_000).contains(&t);
            let az = if shaking && k % 2 == 0 {
                11.81
            } else if shaking {
                7.81
            } else {
                9.81
            };
            tr.push(&AccelSample {
                t: Tick(t),
                node: node.clone(),
                ax: 0.0,
                ay: 0.0,
                az,
            });
        }
        let labels = tr.finish();
        assert_eq!(labels[&0], Motion::Stationary);
        assert_eq!(labels[&1], Motion::Moving);
    }
}
