//! Parametric gait library. All gaits are forward-kinematic, so 2-D bone
//! lengths are exact by construction; the "turn" gait models the body
//! rotating by swinging the arms across the torso and flagging the far arm
//! invisible at the swing extremes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Keypoint, MotionTrack};
use crate::error::{Result, SwapError};
use crate::rng::rng_from;

pub const HEAD_LEN: f64 = 7.0;
pub const SHOULDER_W: f64 = 4.5;
pub const UPPER_ARM: f64 = 6.5;
pub const FOREARM: f64 = 6.5;
pub const TORSO_LEN: f64 = 13.0;
pub const THIGH: f64 = 8.0;
pub const SHIN: f64 = 8.0;

/// Lengths aligned with [`super::BONES`].
pub fn canonical_bone_lengths() -> [f64; 12] {
    [
        HEAD_LEN, SHOULDER_W, SHOULDER_W, UPPER_ARM, FOREARM, UPPER_ARM, FOREARM, TORSO_LEN,
        THIGH, SHIN, THIGH, SHIN,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gait {
    Walk,
    Wave,
    Squat,
    Turn,
}

pub const ALL_GAITS: [Gait; 4] = [Gait::Walk, Gait::Wave, Gait::Squat, Gait::Turn];

struct GaitParams {
    gait: Gait,
    root_x: f64,
    root_y: f64,
    freq: f64,
    phase0: f64,
    arm_amp: f64,
    leg_amp: f64,
    sway_amp: f64,
    sway_freq: f64,
    depth_amp: f64,
    wave_left: bool,
}

#[inline]
fn dir(theta: f64) -> (f64, f64) {
    // 0 points straight down in screen coordinates
    (theta.sin(), theta.cos())
}

fn pose_at(p: &GaitParams, t: f64) -> Vec<Keypoint> {
    let tau = std::f64::consts::TAU;
    let ph = tau * p.freq * t + p.phase0;
    let sway = p.sway_amp * (tau * p.sway_freq * t).sin();

    let (mut root_x, mut root_y) = (p.root_x + sway, p.root_y);
    let mut lean = 0.0f64;
    // per-side arm angles measured from straight down, elbow bends relative
    let (a_l, a_r, bend_l, bend_r);
    let (hip_l, hip_r, knee_l, knee_r);
    let mut invisible_left_arm = false;
    let mut invisible_right_arm = false;

    // Front-view figure: the lateral geometry keeps every marker pair at
    // least ~2.5 px apart so 2x2 markers can never overdraw each other.
    match p.gait {
        Gait::Walk => {
            root_y += 1.5 * (2.0 * ph).sin().abs();
            // positive angles point toward body center; arms hang outward
            let swing = 0.25 * p.arm_amp * ph.sin();
            a_l = -0.12 + swing;
            a_r = 0.12 + swing;
            bend_l = -0.15;
            bend_r = 0.15;
            hip_l = -0.18 + 0.02 * ph.sin();
            hip_r = 0.18 + 0.02 * ph.sin();
            knee_l = 0.30 * (0.5 + 0.5 * ph.sin());
            knee_r = -0.30 * (0.5 - 0.5 * ph.sin());
            lean = 0.03 * ph.sin();
        }
        Gait::Wave => {
            let wave = (tau * 1.2 * p.freq.max(0.4) * t).sin();
            let up = std::f64::consts::PI - 0.15; // arm raised overhead
            if p.wave_left {
                a_l = -up;
                bend_l = 0.5 * wave;
                a_r = 0.14 + 0.05 * ph.sin();
                bend_r = 0.2;
            } else {
                a_r = up;
                bend_r = -0.5 * wave;
                a_l = -0.14 - 0.05 * ph.sin();
                bend_l = -0.2;
            }
            hip_l = -0.18;
            hip_r = 0.18;
            knee_l = 0.05;
            knee_r = -0.05;
            root_y += 0.5 * (2.0 * ph).sin();
        }
        Gait::Squat => {
            let depth = 0.5 * (1.0 - ph.cos()); // 0..1
            root_y += p.depth_amp * depth;
            let spread = 0.18 + 0.5 * depth;
            hip_l = -spread;
            hip_r = spread;
            knee_l = 0.9 * depth;
            knee_r = -0.9 * depth;
            a_l = -0.2 - 0.25 * depth;
            a_r = 0.2 + 0.25 * depth;
            bend_l = 0.6 * depth + 0.1;
            bend_r = -0.6 * depth - 0.1;
        }
        Gait::Turn => {
            let s = ph.sin();
            let amp = 0.15 + 0.1 * (p.arm_amp - 0.35); // subtle cross-body sway
            a_l = amp * s;
            a_r = amp * s;
            bend_l = 0.0;
            bend_r = 0.0;
            lean = 0.06 * (0.5 * ph).sin();
            hip_l = -0.18 + 0.04 * s;
            hip_r = 0.18 + 0.04 * s;
            knee_l = 0.1 * (1.0 + s);
            knee_r = -0.1 * (1.0 - s);
            // far arm passes behind the torso well before the swing extreme
            invisible_left_arm = s > 0.6;
            invisible_right_arm = s < -0.6;
        }
    }

    let pelvis = (root_x, root_y);
    let up = (lean.sin(), -lean.cos());
    let right = (lean.cos(), lean.sin());
    let neck = (pelvis.0 + TORSO_LEN * up.0, pelvis.1 + TORSO_LEN * up.1);
    let head = (neck.0 + HEAD_LEN * up.0, neck.1 + HEAD_LEN * up.1);
    let l_sh = (neck.0 - SHOULDER_W * right.0, neck.1 - SHOULDER_W * right.1);
    let r_sh = (neck.0 + SHOULDER_W * right.0, neck.1 + SHOULDER_W * right.1);

    let (dlx, dly) = dir(a_l);
    let l_el = (l_sh.0 + UPPER_ARM * dlx, l_sh.1 + UPPER_ARM * dly);
    let (dlx2, dly2) = dir(a_l + bend_l);
    let l_wr = (l_el.0 + FOREARM * dlx2, l_el.1 + FOREARM * dly2);

    let (drx, dry) = dir(a_r);
    let r_el = (r_sh.0 + UPPER_ARM * drx, r_sh.1 + UPPER_ARM * dry);
    let (drx2, dry2) = dir(a_r + bend_r);
    let r_wr = (r_el.0 + FOREARM * drx2, r_el.1 + FOREARM * dry2);

    let (hlx, hly) = dir(hip_l);
    let l_kn = (pelvis.0 + THIGH * hlx, pelvis.1 + THIGH * hly);
    let (hlx2, hly2) = dir(hip_l + knee_l);
    let l_an = (l_kn.0 + SHIN * hlx2, l_kn.1 + SHIN * hly2);

    let (hrx, hry) = dir(hip_r);
    let r_kn = (pelvis.0 + THIGH * hrx, pelvis.1 + THIGH * hry);
    let (hrx2, hry2) = dir(hip_r + knee_r);
    let r_an = (r_kn.0 + SHIN * hrx2, r_kn.1 + SHIN * hry2);

    let pts = [
        head, neck, l_sh, r_sh, l_el, r_el, l_wr, r_wr, pelvis, l_kn, r_kn, l_an, r_an,
    ];
    let mut kps: Vec<Keypoint> = pts
        .iter()
        .map(|(x, y)| Keypoint { x: *x, y: *y, v: 1 })
        .collect();
    if invisible_left_arm {
        kps[4].v = 0;
        kps[6].v = 0;
    }
    if invisible_right_arm {
        kps[5].v = 0;
        kps[7].v = 0;
    }
    kps
}

/// Deterministic gait sampler; the gait itself is drawn from the seed.
pub fn sample_motion(seed: u64, num_frames: usize, fps: f64) -> Result<MotionTrack> {
    let gait = ALL_GAITS[(crate::rng::derive_seed(seed, &[0x6a17]) % 4) as usize];
    sample_gait_motion(gait, seed, num_frames, fps)
}

/// Like [`sample_motion`] with the gait pinned.
pub fn sample_gait_motion(gait: Gait, seed: u64, num_frames: usize, fps: f64) -> Result<MotionTrack> {
    if num_frames < 1 {
        return Err(SwapError::invalid("num_frames must be >= 1"));
    }
    if !(fps > 0.0) {
        return Err(SwapError::invalid("fps must be positive"));
    }
    let mut rng = rng_from(seed, &[0x30, gait as u64]);
    let p = GaitParams {
        gait,
        root_x: rng.gen_range(28.0..36.0),
        root_y: rng.gen_range(36.0..40.0),
        freq: rng.gen_range(0.5..0.9),
        phase0: if gait == Gait::Turn { 0.0 } else { rng.gen_range(0.0..std::f64::consts::TAU) },
        arm_amp: rng.gen_range(0.35..0.55),
        leg_amp: rng.gen_range(0.28..0.42),
        sway_amp: rng.gen_range(2.0..5.0),
        sway_freq: rng.gen_range(0.12..0.25),
        depth_amp: rng.gen_range(4.0..7.0),
        wave_left: rng.gen_range(0..2u32) == 0,
    };
    // below ~12 fps the clock slows rather than letting frames jump
    let dt = (1.0 / fps).min(1.0 / 12.0);
    let keypoints: Vec<Vec<Keypoint>> = (0..num_frames)
        .map(|i| pose_at(&p, i as f64 * dt))
        .collect();
    Ok(MotionTrack { keypoints, fps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::BONES;

    #[test]
    fn rejects_zero_frames() {
        assert!(sample_motion(0, 0, 24.0).is_err());
    }

    #[test]
    fn deterministic() {
        let a = sample_motion(3, 16, 24.0).unwrap();
        let b = sample_motion(3, 16, 24.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_frame_all_visible() {
        for gait in ALL_GAITS {
            let t = sample_gait_motion(gait, 5, 1, 24.0).unwrap();
            assert_eq!(t.keypoints.len(), 1);
            assert!(t.keypoints[0].iter().all(|k| k.v == 1), "{gait:?}");
        }
    }

    #[test]
    fn bone_lengths_fixed() {
        let lens = canonical_bone_lengths();
        for seed in 0..8u64 {
            let t = sample_motion(seed, 64, 24.0).unwrap();
            for frame in &t.keypoints {
                for (bi, (a, b)) in BONES.iter().enumerate() {
                    let d = ((frame[*a].x - frame[*b].x).powi(2)
                        + (frame[*a].y - frame[*b].y).powi(2))
                    .sqrt();
                    assert!(
                        (d - lens[bi]).abs() <= 1.0,
                        "seed {seed} bone {bi}: {d} vs {}",
                        lens[bi]
                    );
                }
            }
        }
    }

    #[test]
    fn displacement_bounded() {
        for seed in 0..12u64 {
            let t = sample_motion(seed, 128, 24.0).unwrap();
            let mut max_d: f64 = 0.0;
            for w in t.keypoints.windows(2) {
                for j in 0..super::super::JOINT_COUNT {
                    let d = ((w[1][j].x - w[0][j].x).powi(2) + (w[1][j].y - w[0][j].y).powi(2))
                        .sqrt();
                    max_d = max_d.max(d);
                }
            }
            assert!(max_d <= 8.0, "seed {seed}: max displacement {max_d}");
        }
    }

    #[test]
    fn turn_gait_occludes_far_arm() {
        let t = sample_gait_motion(Gait::Turn, 1, 128, 24.0).unwrap();
        let occluded = t
            .keypoints
            .iter()
            .filter(|f| f.iter().any(|k| k.v == 0))
            .count();
        assert!(occluded > 0, "turn gait should hide an arm sometimes");
        // and only arm joints ever go invisible
        for f in &t.keypoints {
            for (j, k) in f.iter().enumerate() {
                if k.v == 0 {
                    assert!([4usize, 5, 6, 7].contains(&j));
                }
            }
        }
    }

    #[test]
    fn keypoints_inside_default_canvas() {
        for seed in 0..12u64 {
            let t = sample_motion(seed, 128, 24.0).unwrap();
            for f in &t.keypoints {
                for k in f {
                    if k.v == 1 {
                        assert!(k.x >= 1.0 && k.x < 63.0 && k.y >= 1.0 && k.y < 63.0);
                    }
                }
            }
        }
    }
}
