//! Diffusion math: noise schedule, forward sampling, losses, DDIM/ancestral
//! steps, classifier-free guidance, and latent-space background blending.
//! Schedule tables are always f64; tensor ops are generic over the compute
//! dtype.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tapegrad::Scalar;

use crate::error::{Result, SwapError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub timesteps: usize,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InpaintMode {
    NineChannel,
    LatentBlend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub steps: usize,
    pub guidance_scale: f64,
    pub eta: f64,
    pub mode: InpaintMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { steps: 30, guidance_scale: 3.0, eta: 0.0, mode: InpaintMode::NineChannel }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(SwapError::invalid("sampler steps must be >= 1"));
        }
        if self.guidance_scale < 0.0 {
            return Err(SwapError::invalid("guidance scale must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(SwapError::invalid("eta must be in [0,1]"));
        }
        Ok(())
    }
}

/// Linear beta schedule with precomputed alpha tables.
pub fn build_schedule(timesteps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if timesteps < 1 {
        return Err(SwapError::invalid("timesteps must be >= 1"));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(SwapError::invalid(format!(
            "need 0 < beta_start <= beta_end < 1, got {beta_start}..{beta_end}"
        )));
    }
    let mut beta = Vec::with_capacity(timesteps);
    for i in 0..timesteps {
        let t = if timesteps == 1 { 0.0 } else { i as f64 / (timesteps - 1) as f64 };
        beta.push(beta_start + t * (beta_end - beta_start));
    }
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(timesteps);
    let mut prod = 1.0;
    for a in &alpha {
        prod *= a;
        alpha_bar.push(prod);
    }
    Ok(NoiseSchedule { timesteps, beta, alpha, alpha_bar })
}

impl NoiseSchedule {
    /// alpha_bar with the t=0 convention alpha_bar(0) = 1.
    pub fn alpha_bar_at(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn check_t(&self, t: usize) -> Result<()> {
        if t < 1 || t > self.timesteps {
            return Err(SwapError::invalid(format!(
                "timestep {t} out of range 1..={}",
                self.timesteps
            )));
        }
        Ok(())
    }

    /// Uniformly spaced inference timesteps, descending, e.g. T..step..1.
    pub fn spaced_timesteps(&self, steps: usize) -> Vec<usize> {
        let steps = steps.clamp(1, self.timesteps);
        let mut ts: Vec<usize> = (1..=steps)
            .map(|i| ((i * self.timesteps) as f64 / steps as f64).round() as usize)
            .map(|t| t.clamp(1, self.timesteps))
            .collect();
        ts.dedup();
        ts.reverse();
        ts
    }
}

/// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps. t=0 returns z0 unchanged.
pub fn q_sample<S: Scalar>(z0: &[S], t: usize, eps: &[S], sched: &NoiseSchedule) -> Result<Vec<S>> {
    if t > sched.timesteps {
        return Err(SwapError::invalid(format!("timestep {t} out of range")));
    }
    if z0.len() != eps.len() {
        return Err(SwapError::ShapeMismatch("q_sample: z0/eps length".into()));
    }
    let ab = sched.alpha_bar_at(t);
    let (sa, sb) = (S::from_f64(ab.sqrt()), S::from_f64((1.0 - ab).sqrt()));
    Ok(z0.iter().zip(eps).map(|(z, e)| sa * *z + sb * *e).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    Mae,
}

/// Mean over all elements of squared (or absolute) difference.
pub fn training_loss<S: Scalar>(eps_pred: &[S], eps: &[S], kind: LossKind) -> Result<f64> {
    if eps_pred.len() != eps.len() {
        return Err(SwapError::ShapeMismatch("training_loss: length".into()));
    }
    if eps.is_empty() {
        return Err(SwapError::invalid("training_loss: empty tensors"));
    }
    let mut acc = 0.0f64;
    for (p, e) in eps_pred.iter().zip(eps) {
        let d = p.as_f64() - e.as_f64();
        acc += match kind {
            LossKind::Mse => d * d,
            LossKind::Mae => d.abs(),
        };
    }
    Ok(acc / eps.len() as f64)
}

/// eps_uncond + g * (eps_cond - eps_uncond)
pub fn cfg_combine<S: Scalar>(eps_uncond: &[S], eps_cond: &[S], g: f64) -> Vec<S> {
    assert_eq!(eps_uncond.len(), eps_cond.len(), "cfg_combine: length mismatch");
    let gs = S::from_f64(g);
    eps_uncond
        .iter()
        .zip(eps_cond)
        .map(|(u, c)| *u + gs * (*c - *u))
        .collect()
}

/// One DDIM step t -> t_prev (t_prev < t; t_prev = 0 lands on z0-hat).
pub fn ddim_step<S: Scalar>(
    z_t: &[S],
    eps_hat: &[S],
    t: usize,
    t_prev: usize,
    sched: &NoiseSchedule,
    eta: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Vec<S>> {
    sched.check_t(t)?;
    if t_prev >= t {
        return Err(SwapError::invalid(format!("ddim_step: t_prev {t_prev} must be < t {t}")));
    }
    if z_t.len() != eps_hat.len() {
        return Err(SwapError::ShapeMismatch("ddim_step: length".into()));
    }
    let ab_t = sched.alpha_bar_at(t);
    let ab_p = sched.alpha_bar_at(t_prev);
    let sqrt_ab_t = ab_t.sqrt();
    let sqrt_om_t = (1.0 - ab_t).sqrt();
    // sigma per DDIM; eta=0 is the deterministic sampler
    let sigma = if eta > 0.0 {
        eta * ((1.0 - ab_p) / (1.0 - ab_t) * (1.0 - ab_t / ab_p)).max(0.0).sqrt()
    } else {
        0.0
    };
    let dir_coeff = (1.0 - ab_p - sigma * sigma).max(0.0).sqrt();
    let noise: Option<Vec<f64>> = if sigma > 0.0 {
        let rng = rng.ok_or_else(|| SwapError::invalid("ddim_step: eta > 0 requires rng"))?;
        Some(crate::rng::randn(rng, z_t.len()))
    } else {
        None
    };
    let mut out = Vec::with_capacity(z_t.len());
    for i in 0..z_t.len() {
        let z = z_t[i].as_f64();
        let e = eps_hat[i].as_f64();
        let z0_hat = (z - sqrt_om_t * e) / sqrt_ab_t;
        let mut v = ab_p.sqrt() * z0_hat + dir_coeff * e;
        if let Some(n) = &noise {
            v += sigma * n[i];
        }
        out.push(S::from_f64(v));
    }
    Ok(out)
}

/// Ancestral step: posterior mean plus beta-tilde noise; t=1 is deterministic.
pub fn ddpm_step<S: Scalar>(
    z_t: &[S],
    eps_hat: &[S],
    t: usize,
    sched: &NoiseSchedule,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<S>> {
    sched.check_t(t)?;
    if z_t.len() != eps_hat.len() {
        return Err(SwapError::ShapeMismatch("ddpm_step: length".into()));
    }
    let beta = sched.beta[t - 1];
    let alpha = sched.alpha[t - 1];
    let ab_t = sched.alpha_bar_at(t);
    let ab_prev = sched.alpha_bar_at(t - 1);
    let beta_tilde = beta * (1.0 - ab_prev) / (1.0 - ab_t);
    let inv_sqrt_alpha = 1.0 / alpha.sqrt();
    let coeff = beta / (1.0 - ab_t).sqrt();
    let noise: Option<Vec<f64>> = (t > 1).then(|| crate::rng::randn(rng, z_t.len()));
    let mut out = Vec::with_capacity(z_t.len());
    for i in 0..z_t.len() {
        let mu = inv_sqrt_alpha * (z_t[i].as_f64() - coeff * eps_hat[i].as_f64());
        let v = match &noise {
            Some(n) => mu + beta_tilde.sqrt() * n[i],
            None => mu,
        };
        out.push(S::from_f64(v));
    }
    Ok(out)
}

/// Replace cells outside the latent mask with a fresh forward sample of the
/// background latent at t_prev; keep inside-mask cells.
///
/// Layouts: z, bg_latent, eps_bg are [frames, channels, h, w]; latent_mask is
/// [frames, h, w].
pub fn latent_blend_step<S: Scalar>(
    z: &[S],
    bg_latent: &[S],
    latent_mask: &[u8],
    t_prev: usize,
    eps_bg: &[S],
    sched: &NoiseSchedule,
    frames: usize,
    channels: usize,
) -> Result<Vec<S>> {
    if z.len() != bg_latent.len() || z.len() != eps_bg.len() {
        return Err(SwapError::ShapeMismatch("latent_blend_step: length".into()));
    }
    if frames == 0 || latent_mask.len() % frames != 0 {
        return Err(SwapError::ShapeMismatch("latent_blend_step: mask/frames".into()));
    }
    let per_frame = latent_mask.len() / frames;
    if frames * channels * per_frame != z.len() {
        return Err(SwapError::ShapeMismatch(format!(
            "latent_blend_step: {frames}x{channels}x{per_frame} != {}",
            z.len()
        )));
    }
    let bg_t = q_sample(bg_latent, t_prev, eps_bg, sched)?;
    let mut out = z.to_vec();
    for f in 0..frames {
        for cell in 0..per_frame {
            if latent_mask[f * per_frame + cell] == 0 {
                for ch in 0..channels {
                    let idx = (f * channels + ch) * per_frame + cell;
                    out[idx] = bg_t[idx];
                }
            }
        }
    }
    Ok(out)
}
