//! Closed-form keypoint recovery from rendered or generated frames by
//! nearest-chromaticity matching against the fixed marker palette.

use super::palette::{chroma, JOINT_MARKER_COLORS};
use super::{Frame, Keypoint, JOINT_COUNT};

/// Chromaticity distance under which a pixel is assigned to a marker.
pub const MATCH_TOLERANCE: f64 = 0.15;
/// Pixels darker than this are never matched (chromaticity is undefined).
const LUMA_FLOOR: f64 = 0.02;

/// Per joint, centroid of pixels matching its marker chromaticity; v=0 when
/// no pixel matches. Luminance scaling cancels in the normalized comparison.
pub fn detect_keypoints(frame: &Frame) -> Vec<Keypoint> {
    let marker_chromas: Vec<[f64; 3]> = JOINT_MARKER_COLORS
        .iter()
        .map(|c| chroma(*c).expect("marker colors are nonzero"))
        .collect();
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); JOINT_COUNT];
    for y in 0..frame.h {
        for x in 0..frame.w {
            let c = frame.get(y, x);
            if c[0].max(c[1]).max(c[2]) < LUMA_FLOOR {
                continue;
            }
            let Some(pc) = chroma(c) else { continue };
            let mut best = usize::MAX;
            let mut best_d = MATCH_TOLERANCE;
            for (j, mc) in marker_chromas.iter().enumerate() {
                let d = ((pc[0] - mc[0]).powi(2)
                    + (pc[1] - mc[1]).powi(2)
                    + (pc[2] - mc[2]).powi(2))
                .sqrt();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if best != usize::MAX {
                let s = &mut sums[best];
                s.0 += x as f64 + 0.5;
                s.1 += y as f64 + 0.5;
                s.2 += 1;
            }
        }
    }
    sums.iter()
        .map(|(sx, sy, n)| {
            if *n == 0 {
                Keypoint { x: 0.0, y: 0.0, v: 0 }
            } else {
                Keypoint { x: sx / *n as f64, y: sy / *n as f64, v: 1 }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{render_clip, sample_environment, sample_identity, sample_motion};
    use super::*;

    #[test]
    fn all_black_frame_detects_nothing() {
        let kps = detect_keypoints(&Frame::black(32, 32));
        assert!(kps.iter().all(|k| k.v == 0));
    }

    #[test]
    fn single_marker_detected() {
        let mut f = Frame::black(32, 32);
        for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            f.set(10 + dy, 20 + dx, JOINT_MARKER_COLORS[5]);
        }
        let kps = detect_keypoints(&f);
        for (j, k) in kps.iter().enumerate() {
            assert_eq!(k.v, (j == 5) as u8, "joint {j}");
        }
        assert!((kps[5].x - 21.0).abs() < 1e-9);
        assert!((kps[5].y - 11.0).abs() < 1e-9);
    }

    #[test]
    fn render_detect_round_trip() {
        // 100 random clips: <=2 px error, visibility exact
        let mut checked = 0;
        for seed in 0..100u64 {
            let id = sample_identity(seed);
            let motion = sample_motion(seed, 3, 24.0).unwrap();
            let env = sample_environment(seed);
            let clip = render_clip(&id, &motion, &env, 64, 64).unwrap();
            for (fi, frame) in clip.frames.iter().enumerate() {
                let detected = detect_keypoints(frame);
                for (j, (d, gt)) in detected.iter().zip(&clip.track.keypoints[fi]).enumerate() {
                    assert_eq!(d.v, gt.v, "seed {seed} frame {fi} joint {j} visibility");
                    if gt.v == 1 {
                        let err = ((d.x - gt.x).powi(2) + (d.y - gt.y).powi(2)).sqrt();
                        assert!(err <= 2.0, "seed {seed} frame {fi} joint {j}: err {err}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 1000);
    }
}
