use rand::Rng;

use super::palette::{chroma_dist, JOINT_MARKER_COLORS};
use super::{IdentitySpec, TorsoShape};
use crate::rng::rng_from;

/// Minimum pairwise L2 distance between the five part colors.
pub const LIMB_COLOR_SEPARATION: f64 = 0.25;
/// Minimum chromaticity distance from any joint-marker color, so body pixels
/// never alias with markers during keypoint detection.
const MARKER_CLEARANCE: f64 = 0.20;

fn l2(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn color_ok(c: [f64; 3], chosen: &[[f64; 3]]) -> bool {
    if chosen.iter().any(|p| l2(c, *p) < LIMB_COLOR_SEPARATION) {
        return false;
    }
    JOINT_MARKER_COLORS.iter().all(|m| chroma_dist(c, *m) >= MARKER_CLEARANCE)
}

/// Deterministically samples an identity. Rejection-samples part colors until
/// they are mutually separated and clear of the marker palette.
pub fn sample_identity(seed: u64) -> IdentitySpec {
    let mut rng = rng_from(seed, &[0x1d]);
    let mut colors: Vec<[f64; 3]> = Vec::with_capacity(5);
    while colors.len() < 5 {
        // keep colors visible: at least one strong channel
        let c: [f64; 3] = [
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
        ];
        let maxc = c[0].max(c[1]).max(c[2]);
        if maxc < 0.35 {
            continue;
        }
        if color_ok(c, &colors) {
            colors.push(c);
        }
    }
    let torso_shape = match rng.gen_range(0..3u32) {
        0 => TorsoShape::Rect,
        1 => TorsoShape::Trapezoid,
        _ => TorsoShape::Oval,
    };
    IdentitySpec {
        limb_colors: [colors[0], colors[1], colors[2], colors[3], colors[4]],
        torso_shape,
        head_radius: rng.gen_range(4..=7),
        limb_thickness: rng.gen_range(2..=4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(sample_identity(0), sample_identity(0));
        assert_eq!(sample_identity(7), sample_identity(7));
    }

    #[test]
    fn different_seeds_differ() {
        let a = sample_identity(0);
        let b = sample_identity(1);
        assert_ne!(a, b);
    }

    #[test]
    fn limb_colors_separated_over_many_seeds() {
        for seed in 0..100u64 {
            let id = sample_identity(seed);
            for i in 0..5 {
                assert!(id.limb_colors[i].iter().all(|v| (0.0..=1.0).contains(v)));
                for j in 0..i {
                    let d = l2(id.limb_colors[i], id.limb_colors[j]);
                    assert!(
                        d >= LIMB_COLOR_SEPARATION,
                        "seed {seed}: colors {i},{j} too close ({d})"
                    );
                }
                for m in JOINT_MARKER_COLORS {
                    assert!(chroma_dist(id.limb_colors[i], m) >= MARKER_CLEARANCE);
                }
            }
            assert!((4..=10).contains(&id.head_radius));
            assert!((2..=5).contains(&id.limb_thickness));
        }
    }
}
