//! The sprite world: a procedural articulated-figure video generator with
//! exact ground truth (masks, keypoints, pose maps) and an oracle renderer
//! that produces the correct swapped video for any (identity, clip) pair.

pub mod dataset;
pub mod detect;
pub mod env;
pub mod identity;
pub mod motion;
pub mod palette;
pub mod render;

use serde::{Deserialize, Serialize};

pub use detect::detect_keypoints;
pub use env::sample_environment;
pub use identity::sample_identity;
pub use motion::{sample_motion, Gait};
pub use render::{oracle_swap, render_clip, render_pose_map};

pub const JOINT_COUNT: usize = 13;

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "head",
    "neck",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_wrist",
    "r_wrist",
    "pelvis",
    "l_knee",
    "r_knee",
    "l_ankle",
    "r_ankle",
];

/// Skeleton edges as (joint, joint) index pairs; order matches BONE_COLORS.
pub const BONES: [(usize, usize); 12] = [
    (0, 1),  // head - neck
    (1, 2),  // neck - l_shoulder
    (1, 3),  // neck - r_shoulder
    (2, 4),  // l_shoulder - l_elbow
    (4, 6),  // l_elbow - l_wrist
    (3, 5),  // r_shoulder - r_elbow
    (5, 7),  // r_elbow - r_wrist
    (1, 8),  // neck - pelvis
    (8, 9),  // pelvis - l_knee
    (9, 11), // l_knee - l_ankle
    (8, 10), // pelvis - r_knee
    (10, 12),// r_knee - r_ankle
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// visibility flag, 0 or 1
    pub v: u8,
}

impl Keypoint {
    pub fn visible(&self) -> bool {
        self.v == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorsoShape {
    Rect,
    Trapezoid,
    Oval,
}

/// Visual identity of a figure. Joint markers are NOT part of the identity:
/// they come from the fixed global palette.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySpec {
    /// part colors: [head, torso, left arm, right arm, legs], RGB in [0,1]
    pub limb_colors: [[f64; 3]; 5],
    pub torso_shape: TorsoShape,
    /// head radius in pixels (4..=10)
    pub head_radius: u32,
    /// limb thickness in pixels (2..=5)
    pub limb_thickness: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionTrack {
    /// per-frame joint sets, each of length [`JOINT_COUNT`]
    pub keypoints: Vec<Vec<Keypoint>>,
    pub fps: f64,
}

impl MotionTrack {
    pub fn num_frames(&self) -> usize {
        self.keypoints.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    Gradient,
    Checker,
    NoiseTexture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccluderDepth {
    InFront,
    Behind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    /// (x0, y0, x1, y1), half-open pixel rect inside the frame
    pub rect: (u32, u32, u32, u32),
    pub depth: OccluderDepth,
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub background_kind: BackgroundKind,
    /// kind-specific parameters (colors, direction, cell size, noise seed)
    pub background_params: Vec<f64>,
    /// multiplies every rendered pixel, body and background alike
    pub global_luminance: f64,
    pub occluders: Vec<Occluder>,
}

/// One frame as H*W*3 reals in [0,1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Frame {
    pub fn black(h: usize, w: usize) -> Self {
        Frame { h, w, data: vec![0.0; h * w * 3] }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [f64; 3] {
        let i = (y * self.w + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: [f64; 3]) {
        let i = (y * self.w + x) * 3;
        self.data[i] = c[0];
        self.data[i + 1] = c[1];
        self.data[i + 2] = c[2];
    }

    pub fn scaled(&self, k: f64) -> Frame {
        Frame {
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| (v * k).clamp(0.0, 1.0)).collect(),
        }
    }
}

/// Binary body mask, one byte per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub h: usize,
    pub w: usize,
    pub data: Vec<u8>,
}

impl Mask {
    pub fn zeros(h: usize, w: usize) -> Self {
        Mask { h, w, data: vec![0; h * w] }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.w + x] != 0
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: bool) {
        self.data[y * self.w + x] = v as u8;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0).count()
    }

    pub fn union(&self, other: &Mask) -> Mask {
        assert_eq!(self.data.len(), other.data.len());
        Mask {
            h: self.h,
            w: self.w,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (*a != 0 || *b != 0) as u8)
                .collect(),
        }
    }

    /// Tight bounding box (y0, x0, y1, x1), half-open; None when empty.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let (mut y0, mut x0, mut y1, mut x1) = (usize::MAX, usize::MAX, 0usize, 0usize);
        let mut any = false;
        for y in 0..self.h {
            for x in 0..self.w {
                if self.get(y, x) {
                    any = true;
                    y0 = y0.min(y);
                    x0 = x0.min(x);
                    y1 = y1.max(y + 1);
                    x1 = x1.max(x + 1);
                }
            }
        }
        any.then_some((y0, x0, y1, x1))
    }
}

/// The universal unit of data: frames plus all ground truth used downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub frames: Vec<Frame>,
    pub masks: Vec<Mask>,
    pub pose_maps: Vec<Frame>,
    pub track: MotionTrack,
    pub identity: IdentitySpec,
    pub env: EnvironmentSpec,
    pub fps: f64,
}

impl Clip {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn height(&self) -> usize {
        self.frames[0].h
    }

    pub fn width(&self) -> usize {
        self.frames[0].w
    }
}
