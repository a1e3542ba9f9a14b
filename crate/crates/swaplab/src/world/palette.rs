//! Fixed global joint-marker palette.
//!
//! The 13 marker colors are shared by every identity so joints can be
//! recovered from any rendered or generated frame by nearest-chromaticity
//! matching. Chromaticity directions were chosen to keep pairwise distances
//! >= 0.41 and distance from the gray axis >= 0.32, both well above the 0.15
//! matching tolerance; brightness scaling (global luminance) cancels out in
//! the normalized comparison.

/// Marker base colors, max channel scaled to 1.0, indexed by joint id.
pub const JOINT_MARKER_COLORS: [[f64; 3]; 13] = [
    [0.1353, 0.0000, 1.0000], // head
    [1.0000, 0.4420, 0.2867], // neck
    [0.6204, 0.0001, 1.0000], // left shoulder
    [0.0000, 1.0000, 0.6568], // right shoulder
    [0.0000, 1.0000, 0.1623], // left elbow
    [0.4108, 1.0000, 0.0000], // right elbow
    [1.0000, 0.0705, 0.0000], // left wrist
    [0.0000, 0.4219, 1.0000], // right wrist
    [1.0000, 0.4086, 0.8689], // pelvis
    [0.4078, 0.8324, 1.0000], // left knee
    [1.0000, 0.0000, 0.4415], // right knee
    [0.5523, 1.0000, 0.4898], // left ankle
    [1.0000, 0.9462, 0.0089], // right ankle
];

/// Bone colors for pose maps, one per skeleton edge (DWpose-style table).
pub const BONE_COLORS: [[f64; 3]; 12] = [
    [1.0, 0.0, 0.0],
    [1.0, 0.6, 0.0],
    [0.8, 1.0, 0.0],
    [0.2, 1.0, 0.0],
    [0.0, 1.0, 0.4],
    [0.0, 1.0, 1.0],
    [0.0, 0.6, 1.0],
    [0.0, 0.1, 1.0],
    [0.5, 0.0, 1.0],
    [0.9, 0.0, 1.0],
    [1.0, 0.0, 0.7],
    [1.0, 0.3, 0.3],
];

pub fn chroma(c: [f64; 3]) -> Option<[f64; 3]> {
    let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    if n < 1e-9 {
        None
    } else {
        Some([c[0] / n, c[1] / n, c[2] / n])
    }
}

pub fn chroma_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    match (chroma(a), chroma(b)) {
        (Some(x), Some(y)) => {
            ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
        }
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marker_chromaticities_are_separable() {
        for i in 0..13 {
            for j in 0..i {
                let d = chroma_dist(JOINT_MARKER_COLORS[i], JOINT_MARKER_COLORS[j]);
                assert!(d >= 0.40, "markers {i},{j} too close: {d}");
            }
            let d = chroma_dist(JOINT_MARKER_COLORS[i], [1.0, 1.0, 1.0]);
            assert!(d >= 0.30, "marker {i} too close to gray: {d}");
        }
    }

    #[test]
    fn marker_colors_are_bright() {
        for c in JOINT_MARKER_COLORS {
            let m = c[0].max(c[1]).max(c[2]);
            assert!((m - 1.0).abs() < 1e-9);
        }
    }
}
