//! Clip directory layout:
//! `<root>/<clip_id>/frames/%05d.png`, `masks/%05d.png` (0/255),
//! `pose/%05d.png`, `clip.json`. Frames are 8-bit RGB, quantized by
//! `round(x * 255)`.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use super::{Clip, EnvironmentSpec, Frame, IdentitySpec, Mask, MotionTrack};
use crate::error::{Result, SwapError};

pub const CLIP_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClipMeta {
    pub schema_version: u32,
    pub seed: u64,
    pub fps: f64,
    pub height: usize,
    pub width: usize,
    pub identity: IdentitySpec,
    pub env: EnvironmentSpec,
    pub track: MotionTrack,
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn dequantize(b: u8) -> f64 {
    b as f64 / 255.0
}

/// Quantize every pixel to the on-disk 8-bit grid.
pub fn quantize_frame(f: &Frame) -> Frame {
    Frame {
        h: f.h,
        w: f.w,
        data: f.data.iter().map(|v| dequantize(quantize(*v))).collect(),
    }
}

fn frame_to_png(f: &Frame, path: &Path) -> Result<()> {
    let mut img = RgbImage::new(f.w as u32, f.h as u32);
    for y in 0..f.h {
        for x in 0..f.w {
            let c = f.get(y, x);
            img.put_pixel(x as u32, y as u32, image::Rgb([quantize(c[0]), quantize(c[1]), quantize(c[2])]));
        }
    }
    img.save(path)
        .map_err(|e| SwapError::Image { path: path.display().to_string(), reason: e.to_string() })
}

fn png_to_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|e| SwapError::Image { path: path.display().to_string(), reason: e.to_string() })?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut f = Frame::black(h, w);
    for y in 0..h {
        for x in 0..w {
            let p = img.get_pixel(x as u32, y as u32);
            f.set(y, x, [dequantize(p[0]), dequantize(p[1]), dequantize(p[2])]);
        }
    }
    Ok(f)
}

fn mask_to_png(m: &Mask, path: &Path) -> Result<()> {
    let mut img = GrayImage::new(m.w as u32, m.h as u32);
    for y in 0..m.h {
        for x in 0..m.w {
            img.put_pixel(x as u32, y as u32, image::Luma([if m.get(y, x) { 255 } else { 0 }]));
        }
    }
    img.save(path)
        .map_err(|e| SwapError::Image { path: path.display().to_string(), reason: e.to_string() })
}

fn png_to_mask(path: &Path) -> Result<Mask> {
    let img = image::open(path)
        .map_err(|e| SwapError::Image { path: path.display().to_string(), reason: e.to_string() })?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut m = Mask::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            m.set(y, x, img.get_pixel(x as u32, y as u32)[0] >= 128);
        }
    }
    Ok(m)
}

pub fn write_clip(dir: &Path, clip: &Clip, seed: u64) -> Result<()> {
    for sub in ["frames", "masks", "pose"] {
        fs::create_dir_all(dir.join(sub)).map_err(|e| SwapError::io(dir.display().to_string(), e))?;
    }
    for (i, f) in clip.frames.iter().enumerate() {
        frame_to_png(f, &dir.join(format!("frames/{i:05}.png")))?;
    }
    for (i, m) in clip.masks.iter().enumerate() {
        mask_to_png(m, &dir.join(format!("masks/{i:05}.png")))?;
    }
    for (i, p) in clip.pose_maps.iter().enumerate() {
        frame_to_png(p, &dir.join(format!("pose/{i:05}.png")))?;
    }
    let meta = ClipMeta {
        schema_version: CLIP_SCHEMA_VERSION,
        seed,
        fps: clip.fps,
        height: clip.height(),
        width: clip.width(),
        identity: clip.identity.clone(),
        env: clip.env.clone(),
        track: clip.track.clone(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| SwapError::Malformed { path: "clip.json".into(), reason: e.to_string() })?;
    fs::write(dir.join("clip.json"), json)
        .map_err(|e| SwapError::io(dir.join("clip.json").display().to_string(), e))?;
    Ok(())
}

pub fn read_clip_meta(dir: &Path) -> Result<ClipMeta> {
    let path = dir.join("clip.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| SwapError::io(path.display().to_string(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| SwapError::Malformed { path: path.display().to_string(), reason: e.to_string() })
}

pub fn read_clip(dir: &Path) -> Result<Clip> {
    let meta = read_clip_meta(dir)?;
    let n = meta.track.keypoints.len();
    let mut frames = Vec::with_capacity(n);
    let mut masks = Vec::with_capacity(n);
    let mut pose_maps = Vec::with_capacity(n);
    for i in 0..n {
        frames.push(png_to_frame(&dir.join(format!("frames/{i:05}.png")))?);
        masks.push(png_to_mask(&dir.join(format!("masks/{i:05}.png")))?);
        pose_maps.push(png_to_frame(&dir.join(format!("pose/{i:05}.png")))?);
    }
    if frames.is_empty() {
        return Err(SwapError::Malformed {
            path: dir.display().to_string(),
            reason: "clip has no frames".into(),
        });
    }
    Ok(Clip {
        frames,
        masks,
        pose_maps,
        track: meta.track,
        identity: meta.identity,
        env: meta.env,
        fps: meta.fps,
    })
}

/// Clip ids under a dataset root, sorted for deterministic iteration.
pub fn list_clip_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    let rd = fs::read_dir(root).map_err(|e| SwapError::io(root.display().to_string(), e))?;
    for entry in rd {
        let entry = entry.map_err(|e| SwapError::io(root.display().to_string(), e))?;
        if entry.path().is_dir() && entry.path().join("clip.json").exists() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::super::{render_clip, sample_environment, sample_identity, sample_motion};
    use super::*;

    #[test]
    fn write_read_round_trip_is_exact_after_quantization() {
        let id = sample_identity(0);
        let motion = sample_motion(0, 3, 24.0).unwrap();
        let env = sample_environment(0);
        let clip = render_clip(&id, &motion, &env, 64, 64).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_clip(dir.path(), &clip, 0).unwrap();
        let loaded = read_clip(dir.path()).unwrap();
        // loaded pixels are the quantized originals
        for (a, b) in clip.frames.iter().zip(&loaded.frames) {
            assert_eq!(&quantize_frame(a), b);
        }
        assert_eq!(clip.masks, loaded.masks);
        assert_eq!(clip.track, loaded.track);
        assert_eq!(clip.identity, loaded.identity);
        assert_eq!(clip.env, loaded.env);
        // second trip is a fixpoint
        let dir2 = tempfile::tempdir().unwrap();
        write_clip(dir2.path(), &loaded, 0).unwrap();
        let loaded2 = read_clip(dir2.path()).unwrap();
        assert_eq!(loaded, loaded2);
    }
}
