//! Deterministic rasterizer for figures, pose maps and the oracle swap.
//!
//! Draw order: background, behind-occluders, legs, torso, arms, head, joint
//! markers, in-front occluders. The mask is exactly the set of body+marker
//! pixels that survive in-front occluders. Global luminance multiplies the
//! whole composite at the end.

use super::env::render_background;
use super::palette::{BONE_COLORS, JOINT_MARKER_COLORS};
use super::{
    Clip, EnvironmentSpec, Frame, IdentitySpec, Keypoint, Mask, MotionTrack, Occluder,
    OccluderDepth, TorsoShape, BONES, JOINT_COUNT,
};
use crate::error::{Result, SwapError};

const MARKER_SIZE: usize = 2;

#[derive(Clone, Copy, PartialEq)]
enum Layer {
    Empty,
    Background,
    Body,
    Marker,
    FrontOccluder,
}

struct Canvas {
    h: usize,
    w: usize,
    color: Vec<[f64; 3]>,
    layer: Vec<Layer>,
}

impl Canvas {
    fn new(h: usize, w: usize) -> Self {
        Canvas {
            h,
            w,
            color: vec![[0.0; 3]; h * w],
            layer: vec![Layer::Empty; h * w],
        }
    }

    #[inline]
    fn put(&mut self, x: i64, y: i64, c: [f64; 3], layer: Layer) {
        if x < 0 || y < 0 || x >= self.w as i64 || y >= self.h as i64 {
            return;
        }
        let i = y as usize * self.w + x as usize;
        self.color[i] = c;
        self.layer[i] = layer;
    }

    fn fill_rect(&mut self, o: &Occluder, layer: Layer) {
        for y in o.rect.1..o.rect.3 {
            for x in o.rect.0..o.rect.2 {
                self.put(x as i64, y as i64, o.color, layer);
            }
        }
    }

    fn capsule(&mut self, a: (f64, f64), b: (f64, f64), radius: f64, c: [f64; 3], layer: Layer) {
        let x0 = (a.0.min(b.0) - radius).floor() as i64;
        let x1 = (a.0.max(b.0) + radius).ceil() as i64;
        let y0 = (a.1.min(b.1) - radius).floor() as i64;
        let y1 = (a.1.max(b.1) + radius).ceil() as i64;
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let t = if len2 < 1e-12 {
                    0.0
                } else {
                    (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
                };
                let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
                if (px - cx).powi(2) + (py - cy).powi(2) <= radius * radius {
                    self.put(x, y, c, layer);
                }
            }
        }
    }

    fn disc(&mut self, center: (f64, f64), radius: f64, c: [f64; 3], layer: Layer) {
        self.capsule(center, center, radius, c, layer);
    }

    fn marker(&mut self, k: &Keypoint, c: [f64; 3]) {
        let (ix, iy) = (k.x.floor() as i64, k.y.floor() as i64);
        for dy in 0..MARKER_SIZE as i64 {
            for dx in 0..MARKER_SIZE as i64 {
                self.put(ix + dx, iy + dy, c, Layer::Marker);
            }
        }
    }
}

/// True when every pixel of the joint's marker square is either off-frame or
/// under an in-front occluder, i.e. the marker cannot appear in the render.
fn marker_hidden(k: &Keypoint, env: &EnvironmentSpec, h: usize, w: usize) -> bool {
    let (ix, iy) = (k.x.floor() as i64, k.y.floor() as i64);
    for dy in 0..MARKER_SIZE as i64 {
        for dx in 0..MARKER_SIZE as i64 {
            let (x, y) = (ix + dx, iy + dy);
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                continue;
            }
            let covered = env.occluders.iter().any(|o| {
                o.depth == OccluderDepth::InFront
                    && x >= o.rect.0 as i64
                    && x < o.rect.2 as i64
                    && y >= o.rect.1 as i64
                    && y < o.rect.3 as i64
            });
            if !covered {
                return false;
            }
        }
    }
    true
}

fn torso_polygon(c: &mut Canvas, kps: &[Keypoint], id: &IdentitySpec) {
    let neck = (kps[1].x, kps[1].y);
    let pelvis = (kps[8].x, kps[8].y);
    let color = id.limb_colors[1];
    let half_w = super::motion::SHOULDER_W + 1.0;
    match id.torso_shape {
        TorsoShape::Rect => {
            // thick capsule-free quad: sample along the axis
            let steps = 24;
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let p = (neck.0 + t * (pelvis.0 - neck.0), neck.1 + t * (pelvis.1 - neck.1));
                c.capsule(p, p, half_w, color, Layer::Body);
            }
        }
        TorsoShape::Trapezoid => {
            let steps = 24;
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let p = (neck.0 + t * (pelvis.0 - neck.0), neck.1 + t * (pelvis.1 - neck.1));
                let r = half_w * (1.0 - 0.4 * t);
                c.capsule(p, p, r, color, Layer::Body);
            }
        }
        TorsoShape::Oval => {
            let mid = ((neck.0 + pelvis.0) / 2.0, (neck.1 + pelvis.1) / 2.0);
            let (ax_x, ax_y) = (pelvis.0 - neck.0, pelvis.1 - neck.1);
            let a = (ax_x * ax_x + ax_y * ax_y).sqrt() / 2.0 + 2.0;
            let b = half_w;
            let (ux, uy) = (ax_x / (2.0 * a - 4.0).max(1e-9), ax_y / (2.0 * a - 4.0).max(1e-9));
            let x0 = (mid.0 - a).floor() as i64;
            let x1 = (mid.0 + a).ceil() as i64;
            let y0 = (mid.1 - a).floor() as i64;
            let y1 = (mid.1 + a).ceil() as i64;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (px, py) = (x as f64 + 0.5 - mid.0, y as f64 + 0.5 - mid.1);
                    let lon = px * ux + py * uy;
                    let lat = -px * uy + py * ux;
                    if (lon / a).powi(2) + (lat / b).powi(2) <= 1.0 {
                        c.put(x, y, color, Layer::Body);
                    }
                }
            }
        }
    }
}

/// Whether an arm with both joints v=0 should be treated as self-occluded
/// (skipped entirely) rather than merely having hidden markers.
fn arm_self_occluded(elbow: &Keypoint, wrist: &Keypoint, env: &EnvironmentSpec, h: usize, w: usize) -> bool {
    elbow.v == 0
        && wrist.v == 0
        && !(marker_hidden(elbow, env, h, w) && marker_hidden(wrist, env, h, w))
}

fn render_frame(
    identity: &IdentitySpec,
    kps: &[Keypoint],
    env: &EnvironmentSpec,
    background: &Frame,
) -> (Frame, Mask) {
    let (h, w) = (background.h, background.w);
    let mut c = Canvas::new(h, w);
    for y in 0..h {
        for x in 0..w {
            c.put(x as i64, y as i64, background.get(y, x), Layer::Background);
        }
    }
    for o in &env.occluders {
        if o.depth == OccluderDepth::Behind {
            c.fill_rect(o, Layer::Background);
        }
    }

    let thick = identity.limb_thickness as f64 / 2.0;
    let leg_color = identity.limb_colors[4];
    // legs
    for (hip, knee, ankle) in [(8usize, 9usize, 11usize), (8, 10, 12)] {
        c.capsule((kps[hip].x, kps[hip].y), (kps[knee].x, kps[knee].y), thick, leg_color, Layer::Body);
        c.capsule((kps[knee].x, kps[knee].y), (kps[ankle].x, kps[ankle].y), thick, leg_color, Layer::Body);
    }
    torso_polygon(&mut c, kps, identity);
    // arms; a self-occluded arm is behind the torso and is not drawn
    if !arm_self_occluded(&kps[4], &kps[6], env, h, w) {
        let col = identity.limb_colors[2];
        c.capsule((kps[2].x, kps[2].y), (kps[4].x, kps[4].y), thick, col, Layer::Body);
        c.capsule((kps[4].x, kps[4].y), (kps[6].x, kps[6].y), thick, col, Layer::Body);
    }
    if !arm_self_occluded(&kps[5], &kps[7], env, h, w) {
        let col = identity.limb_colors[3];
        c.capsule((kps[3].x, kps[3].y), (kps[5].x, kps[5].y), thick, col, Layer::Body);
        c.capsule((kps[5].x, kps[5].y), (kps[7].x, kps[7].y), thick, col, Layer::Body);
    }
    c.disc((kps[0].x, kps[0].y), identity.head_radius as f64, identity.limb_colors[0], Layer::Body);
    for (j, k) in kps.iter().enumerate() {
        if k.v == 1 {
            c.marker(k, JOINT_MARKER_COLORS[j]);
        }
    }
    for o in &env.occluders {
        if o.depth == OccluderDepth::InFront {
            c.fill_rect(o, Layer::FrontOccluder);
        }
    }

    let lum = env.global_luminance;
    let mut frame = Frame::black(h, w);
    let mut mask = Mask::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let col = c.color[i];
            frame.set(y, x, [
                (col[0] * lum).clamp(0.0, 1.0),
                (col[1] * lum).clamp(0.0, 1.0),
                (col[2] * lum).clamp(0.0, 1.0),
            ]);
            mask.set(y, x, matches!(c.layer[i], Layer::Body | Layer::Marker));
        }
    }
    (frame, mask)
}

/// Skeleton image on black: bones in the fixed bone-color table, visible
/// joints as 2-px dots in the marker palette; v=0 joints and their bones
/// are omitted.
pub fn render_pose_map(kps: &[Keypoint], h: usize, w: usize) -> Frame {
    assert_eq!(kps.len(), JOINT_COUNT, "pose map needs {JOINT_COUNT} joints");
    let mut c = Canvas::new(h, w);
    for (bi, (a, b)) in BONES.iter().enumerate() {
        if kps[*a].v == 1 && kps[*b].v == 1 {
            c.capsule(
                (kps[*a].x, kps[*a].y),
                (kps[*b].x, kps[*b].y),
                0.8,
                BONE_COLORS[bi],
                Layer::Body,
            );
        }
    }
    for (j, k) in kps.iter().enumerate() {
        if k.v == 1 {
            c.marker(k, JOINT_MARKER_COLORS[j]);
        }
    }
    let mut f = Frame::black(h, w);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if c.layer[i] != Layer::Empty {
                f.set(y, x, c.color[i]);
            }
        }
    }
    f
}

/// Renders a full clip. The returned track's visibility is refined so that a
/// joint whose marker is entirely hidden by in-front occluders reads v=0,
/// which keeps detection round-trips exact.
pub fn render_clip(
    identity: &IdentitySpec,
    motion: &MotionTrack,
    env: &EnvironmentSpec,
    h: usize,
    w: usize,
) -> Result<Clip> {
    if h % 4 != 0 || w % 4 != 0 {
        return Err(SwapError::invalid(format!(
            "canvas dims must be multiples of 4, got {h}x{w}"
        )));
    }
    if motion.num_frames() == 0 {
        return Err(SwapError::invalid("motion track has no frames"));
    }
    for (fi, kps) in motion.keypoints.iter().enumerate() {
        if kps.len() != JOINT_COUNT {
            return Err(SwapError::invalid(format!("frame {fi}: wrong joint count")));
        }
        for (j, k) in kps.iter().enumerate() {
            if k.v == 1 && (k.x < 0.0 || k.y < 0.0 || k.x >= w as f64 || k.y >= h as f64) {
                return Err(SwapError::invalid(format!(
                    "frame {fi} joint {j} visible but off-canvas ({}, {})",
                    k.x, k.y
                )));
            }
        }
    }
    let background = render_background(env, h, w);
    let mut frames = Vec::with_capacity(motion.num_frames());
    let mut masks = Vec::with_capacity(motion.num_frames());
    let mut pose_maps = Vec::with_capacity(motion.num_frames());
    let mut refined = Vec::with_capacity(motion.num_frames());
    for kps in &motion.keypoints {
        let (frame, mask) = render_frame(identity, kps, env, &background);
        frames.push(frame);
        masks.push(mask);
        pose_maps.push(render_pose_map(kps, h, w));
        let kref: Vec<Keypoint> = kps
            .iter()
            .map(|k| {
                let mut k2 = *k;
                if k.v == 1 && marker_hidden(k, env, h, w) {
                    k2.v = 0;
                }
                k2
            })
            .collect();
        refined.push(kref);
    }
    Ok(Clip {
        frames,
        masks,
        pose_maps,
        track: MotionTrack { keypoints: refined, fps: motion.fps },
        identity: identity.clone(),
        env: env.clone(),
        fps: motion.fps,
    })
}

/// Ground-truth answer to the swap task: re-render the target's motion in the
/// target's environment with the reference identity.
pub fn oracle_swap(ref_identity: &IdentitySpec, target: &Clip) -> Clip {
    render_clip(
        ref_identity,
        &target.track,
        &target.env,
        target.height(),
        target.width(),
    )
    .expect("target clip was renderable, so the oracle render must be too")
}
