fn main() {
    let mut sum = 0.0f64; let mut n = 0usize;
    let mut frames_all = Vec::new();
    for seed in 0..20u64 {
        let id = swaplab::world::sample_identity(seed);
        let motion = swaplab::world::sample_motion(seed, 20, 24.0).unwrap();
        let env = swaplab::world::sample_environment(seed);
        let clip = swaplab::world::render_clip(&id, &motion, &env, 64, 64).unwrap();
        for f in &clip.frames { for v in &f.data { sum += v; n += 1; } frames_all.push(f.clone()); }
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for f in &frames_all { for v in &f.data { ss += (v - mean).powi(2); } }
    let std = (ss / n as f64).sqrt();
    println!("frames: {} pixels: {n} mean: {mean:.4} std: {std:.4}", frames_all.len());
}
