//! Power-domain superposition for several users sharing one transmitter,
//! per-user SVD receive chains and semantic successive interference
//! cancellation (SIC).
//!
//! A semantic receiver cannot regenerate the stronger user's symbols
//! exactly: it decodes, re-encodes and subtracts, and the reconstruction
//! carries a residual whose importance-weighted energy follows an affine
//! law in the stronger user's own distortion ([`TeModel`]). The simulator
//! reproduces that residual by injecting zero-mean complex Gaussian error
//! with the prescribed aggregate weighted energy.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{postcode, siso_transmit, transmit, ChannelRealization, NoiseSpec};
use crate::error::{Error, Result};
use crate::layer_mapping::MappedFrame;
use crate::numerics::{ComplexMatrix, RngStream};
use crate::semantic_source::{SemanticFrame, TransmissionSelection};

/// Residual left by semantic SIC: `te(sid) = b1·sid + b2`, floored at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeModel {
    pub b1: f64,
    pub b2: f64,
}

impl Default for TeModel {
    fn default() -> Self {
        Self { b1: 0.64, b2: 0.21 }
    }
}

impl TeModel {
    pub fn new(b1: f64, b2: f64) -> Result<Self> {
        let te = Self { b1, b2 };
        te.validate()?;
        Ok(te)
    }

    /// Ideal cancellation.
    pub fn perfect() -> Self {
        Self { b1: 0.0, b2: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.b1.is_finite() || !self.b2.is_finite() || self.b2 < 0.0 {
            return Err(Error::param(format!(
                "te model needs finite b1 and b2 >= 0, got b1={} b2={}",
                self.b1, self.b2
            )));
        }
        Ok(())
    }

    pub fn eval(&self, sid: f64) -> f64 {
        (self.b1 * sid + self.b2).max(0.0)
    }
}

/// How the SIC residual enters the weaker user's distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SicScaling {
    /// The residual is amplified by `P1/P2` when the weaker user
    /// normalizes by its own power.
    Ratio,
    /// `te` already describes the residual as seen after normalization.
    Unit,
}

impl SicScaling {
    /// Factor applied to `te(SID1)` in the weaker user's distortion.
    pub fn factor(&self, p_strong: f64, p_weak: f64) -> f64 {
        match self {
            SicScaling::Ratio => p_strong / p_weak,
            SicScaling::Unit => 1.0,
        }
    }
}

impl fmt::Display for SicScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SicScaling::Ratio => "ratio",
            SicScaling::Unit => "unit",
        })
    }
}

impl FromStr for SicScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" => Ok(SicScaling::Ratio),
            "unit" => Ok(SicScaling::Unit),
            other => Err(Error::param(format!("unknown sic scaling '{other}'"))),
        }
    }
}

/// Everything one user contributes to the downlink.
#[derive(Debug, Clone)]
pub struct UserLink {
    pub user_id: usize,
    pub power: f64,
    pub channel: ChannelRealization,
    pub frame: SemanticFrame,
    pub selection: TransmissionSelection,
    pub mapped: MappedFrame,
}

impl UserLink {
    /// The channel coefficient of a single-antenna link.
    pub fn scalar_gain(&self) -> Result<Complex64> {
        if self.channel.antennas() != 1 {
            return Err(Error::shape(format!(
                "user {} has a {}-antenna channel, not a scalar one",
                self.user_id,
                self.channel.antennas()
            )));
        }
        Ok(self.channel.h[(0, 0)])
    }
}

/// Checks `P1 > P2 > ... > 0`.
pub fn check_power_order(powers: &[f64]) -> Result<()> {
    if powers.is_empty() {
        return Err(Error::param("at least one user power is required"));
    }
    if let Some(p) = powers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::param(format!("user powers must be positive, got {p}")));
    }
    if powers.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::param(format!(
            "user powers must be strictly descending, got {powers:?}"
        )));
    }
    Ok(())
}

/// `Σ_k √P_k · V_k · grid_k`.
pub fn superpose(links: &[UserLink]) -> Result<ComplexMatrix> {
    check_power_order(&links.iter().map(|l| l.power).collect::<Vec<_>>())?;
    let shape = links[0].mapped.grid.shape();
    let mut total = ComplexMatrix::zeros(shape.0, shape.1);
    for link in links {
        if link.mapped.grid.shape() != shape {
            return Err(Error::shape(format!(
                "user {} grid {:?} differs from {:?}",
                link.user_id,
                link.mapped.grid.shape(),
                shape
            )));
        }
        let contribution = link.channel.v().matmul(&link.mapped.grid)?.scale(link.power.sqrt());
        total = total.add(&contribution)?;
    }
    Ok(total)
}

/// Strongest user's receive chain: `U1^H (H1 · x + n)`. Interference from
/// the weaker users is left in place.
pub fn receive_user1(
    link: &UserLink,
    superposed: &ComplexMatrix,
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    let y = transmit(&link.channel, superposed, noise, rng)?;
    postcode(&link.channel, &y)
}

/// Regenerates the strong user's layer grid as a semantic SIC receiver
/// would: `S1 + E` with `E` i.i.d. CN(0, v) per cell and
/// `v = scale · te(sid1) / Σ weight_grid`, so the weighted residual energy
/// has expectation `scale · te(sid1)`.
pub fn semantic_sic(
    strong: &UserLink,
    weight_grid: &[f64],
    sid1_realized: f64,
    te: &TeModel,
    scale: f64,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    let grid = &strong.mapped.grid;
    if weight_grid.len() != grid.rows() * grid.cols() {
        return Err(Error::shape(format!(
            "{} weights for a {}x{} grid",
            weight_grid.len(),
            grid.rows(),
            grid.cols()
        )));
    }
    if !(sid1_realized >= 0.0) || !(scale >= 0.0) {
        return Err(Error::param(format!(
            "sid and scale must be non-negative, got {sid1_realized} and {scale}"
        )));
    }
    let raw = te.b1 * sid1_realized + te.b2;
    if raw < 0.0 {
        return Err(Error::param(format!("te model yields negative residual {raw}")));
    }
    let target = scale * raw;
    let weight_total: f64 = weight_grid.iter().sum();
    let mut s_hat = grid.clone();
    if target > 0.0 && weight_total > 0.0 {
        let v = target / weight_total;
        s_hat.as_mut_slice().iter_mut().for_each(|z| *z += rng.complex_normal(v));
    }
    Ok(s_hat)
}

/// A user whose regenerated signal is subtracted before detection.
pub struct Cancellation<'a> {
    pub power: f64,
    pub precoder: &'a ComplexMatrix,
    pub regenerated: &'a ComplexMatrix,
}

/// `U_k^H (H_k (x − Σ_m √P_m V_m Ŝ_m) + n)`: the channel is applied to the
/// superposed signal and the regenerated contributions in one pass, which
/// equals subtracting `H_k √P_m V_m Ŝ_m` from the received signal.
pub fn cancel_and_receive(
    link: &UserLink,
    superposed: &ComplexMatrix,
    cancelled: &[Cancellation<'_>],
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    let mut cleaned = superposed.clone();
    for c in cancelled {
        let regen = c.precoder.matmul(c.regenerated)?.scale(c.power.sqrt());
        cleaned = cleaned.sub(&regen)?;
    }
    let y = transmit(&link.channel, &cleaned, noise, rng)?;
    postcode(&link.channel, &y)
}

/// Two-user form of [`cancel_and_receive`].
pub fn cancel_and_receive_user2(
    weak: &UserLink,
    superposed: &ComplexMatrix,
    s1_hat: &ComplexMatrix,
    strong: &UserLink,
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    let cancel = [Cancellation {
        power: strong.power,
        precoder: strong.channel.v(),
        regenerated: s1_hat,
    }];
    cancel_and_receive(weak, superposed, &cancel, noise, rng)
}

/// Scalar-channel superposition `√P1·s1 + √P2·s2 + ...` over the sorted
/// single-layer grids.
pub fn superpose_siso(links: &[UserLink]) -> Result<Vec<Complex64>> {
    check_power_order(&links.iter().map(|l| l.power).collect::<Vec<_>>())?;
    let len = links[0].mapped.grid.as_slice().len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for link in links {
        let s = link.mapped.grid.as_slice();
        if s.len() != len || link.mapped.antennas() != 1 {
            return Err(Error::shape(format!(
                "user {} is not a single-layer grid of {len} symbols",
                link.user_id
            )));
        }
        let amp = link.power.sqrt();
        out.iter_mut().zip(s).for_each(|(o, &x)| *o += amp * x);
    }
    Ok(out)
}

/// Strongest user on a scalar channel: `y1 / (h1·√P1)`.
pub fn receive_user1_siso(
    link: &UserLink,
    superposed: &[Complex64],
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<Vec<Complex64>> {
    let h = link.scalar_gain()?;
    let y = siso_transmit(h, superposed, noise, rng);
    let norm = h * link.power.sqrt();
    Ok(y.into_iter().map(|z| z / norm).collect())
}

/// Weaker user on a scalar channel:
/// `(y2 − h2·Σ_m √P_m·ŝ_m) / (h2·√P2)`.
pub fn cancel_and_receive_siso(
    link: &UserLink,
    superposed: &[Complex64],
    cancelled: &[(f64, &[Complex64])],
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<Vec<Complex64>> {
    let h = link.scalar_gain()?;
    let mut y = siso_transmit(h, superposed, noise, rng);
    for &(power, s_hat) in cancelled {
        if s_hat.len() != y.len() {
            return Err(Error::shape(format!(
                "{} regenerated symbols for {} received",
                s_hat.len(),
                y.len()
            )));
        }
        let amp = h * power.sqrt();
        y.iter_mut().zip(s_hat).for_each(|(o, &s)| *o -= amp * s);
    }
    let norm = h * link.power.sqrt();
    Ok(y.into_iter().map(|z| z / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;
    use crate::layer_mapping::{smap, MappingStrategy};
    use crate::numerics::sample_complex_gaussian;
    use crate::semantic_source::{generate_frame, make_profile, select_by_cbr, ProfileKind};
    use std::sync::Arc;

    fn link_with(user_id: usize, power: f64, channel: ChannelRealization, n: usize, seed: u64) -> UserLink {
        let profile = Arc::new(make_profile(ProfileKind::Exponential, n, 5.0).unwrap());
        let frame = generate_frame(&profile, 1.0, &mut RngStream::new(seed, user_id as u64)).unwrap();
        let selection = select_by_cbr(&profile, 1.0, n).unwrap();
        let mapped = smap(&frame, &selection, channel.antennas(), MappingStrategy::Block).unwrap();
        UserLink { user_id, power, channel, frame, selection, mapped }
    }

    fn identity_channel(r: usize) -> ChannelRealization {
        ChannelRealization::from_matrix(ComplexMatrix::identity(r), 1.0).unwrap()
    }

    fn noiseless() -> NoiseSpec {
        NoiseSpec::complex(1.0).unwrap().noiseless()
    }

    fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        a.sub(b).unwrap().as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn te_model_defaults() {
        let te = TeModel::default();
        assert_eq!(te.eval(0.0), 0.21);
        assert!((te.eval(1.0) - 0.85).abs() < 1e-15);
        assert_eq!(TeModel::perfect().eval(3.0), 0.0);
        assert!(TeModel::new(0.5, -0.1).is_err());
        assert_eq!(TeModel::new(-1.0, 0.5).unwrap().eval(2.0), 0.0);
    }

    #[test]
    fn single_user_superposition_is_its_grid() {
        let l = link_with(0, 1.0, identity_channel(2), 8, 1);
        assert_eq!(superpose(std::slice::from_ref(&l)).unwrap(), l.mapped.grid);
    }

    #[test]
    fn equal_powers_rejected() {
        let a = link_with(0, 1.0, identity_channel(2), 8, 1);
        let b = link_with(1, 1.0, identity_channel(2), 8, 2);
        assert!(matches!(superpose(&[a, b]), Err(Error::Parameter(_))));
        assert!(check_power_order(&[0.2, 0.8]).is_err());
        assert!(check_power_order(&[0.8, 0.0]).is_err());
    }

    #[test]
    fn orthogonal_grids_add_power() {
        let mut a = link_with(0, 0.8, identity_channel(2), 4, 1);
        let mut b = link_with(1, 0.2, identity_channel(2), 4, 2);
        // disjoint support: user 0 in column 0, user 1 in column 1
        for j in 0..2 {
            a.mapped.grid[(j, 1)] = Complex64::new(0.0, 0.0);
            b.mapped.grid[(j, 0)] = Complex64::new(0.0, 0.0);
        }
        let x = superpose(&[a.clone(), b.clone()]).unwrap();
        let expected = 0.8 * a.mapped.grid.frobenius_norm_sqr() + 0.2 * b.mapped.grid.frobenius_norm_sqr();
        assert!((x.frobenius_norm_sqr() - expected).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = link_with(0, 0.8, identity_channel(2), 8, 1);
        let b = link_with(1, 0.2, identity_channel(2), 4, 2);
        assert!(matches!(superpose(&[a, b]), Err(Error::Shape(_))));
    }

    #[test]
    fn user1_noiseless_single_user() {
        let mut rng = RngStream::new(4, 0);
        let ch = sample_channel(3, 1.0, &mut rng).unwrap();
        let l = link_with(0, 0.7, ch, 12, 3);
        let x = superpose(std::slice::from_ref(&l)).unwrap();
        let y = receive_user1(&l, &x, &noiseless(), &mut rng).unwrap();
        let expected = l.mapped.grid.scale_rows(l.channel.sigma()).unwrap().scale(0.7f64.sqrt());
        assert!(max_abs_diff(&y, &expected) < 1e-12);
    }

    #[test]
    fn user1_aligned_precoders() {
        let mut rng = RngStream::new(5, 0);
        let ch = sample_channel(2, 1.0, &mut rng).unwrap();
        let a = link_with(0, 0.8, ch.clone(), 8, 1);
        let b = link_with(1, 0.2, ch, 8, 2);
        let x = superpose(&[a.clone(), b.clone()]).unwrap();
        let y = receive_user1(&a, &x, &noiseless(), &mut rng).unwrap();
        let mix = a.mapped.grid.scale(0.8f64.sqrt()).add(&b.mapped.grid.scale(0.2f64.sqrt())).unwrap();
        let expected = mix.scale_rows(a.channel.sigma()).unwrap();
        assert!(max_abs_diff(&y, &expected) < 1e-12);
    }

    #[test]
    fn user1_interference_power_per_layer() {
        // Weak user's contribution at the strong receiver has per-cell power
        // P2·σ_{1,j}²·E|s2|² when V1^H V2 mixes i.i.d. unit-power symbols.
        let mut rng = RngStream::new(6, 0);
        let ch1 = sample_channel(2, 1.0, &mut rng).unwrap();
        let trials = 100_000;
        let p2 = 0.2;
        let mut acc = [0.0f64; 2];
        for t in 0..trials {
            let ch2 = sample_channel(2, 1.0, &mut rng).unwrap();
            let mut weak = link_with(1, p2, ch2, 2, 0);
            weak.mapped.grid = sample_complex_gaussian(2, 1, 1.0, &mut rng).unwrap();
            let mut strong = link_with(0, 0.8, ch1.clone(), 2, t);
            strong.mapped.grid = ComplexMatrix::zeros(2, 1);
            let x = superpose(&[strong.clone(), weak]).unwrap();
            let y = receive_user1(&strong, &x, &noiseless(), &mut rng).unwrap();
            for (j, a) in acc.iter_mut().enumerate() {
                *a += y[(j, 0)].norm_sqr();
            }
        }
        for (j, total) in acc.iter().enumerate() {
            let expected = p2 * ch1.sigma()[j].powi(2);
            let got = total / trials as f64;
            assert!((got / expected - 1.0).abs() < 0.05, "layer {j}: {got} vs {expected}");
        }
    }

    fn weighted_energy(diff: &ComplexMatrix, weights: &[f64]) -> f64 {
        diff.as_slice().iter().zip(weights).map(|(z, w)| w * z.norm_sqr()).sum()
    }

    fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn sic_residual_follows_te() {
        let l = link_with(0, 0.8, identity_channel(2), 64, 1);
        let w = l.mapped.weight_grid.clone();
        let te = TeModel::default();
        let mut rng = RngStream::new(7, 0);
        for (sid1, expected) in [(0.0, 0.21), (1.0, 0.85)] {
            let samples: Vec<f64> = (0..10_000)
                .map(|_| {
                    let s_hat = semantic_sic(&l, &w, sid1, &te, 1.0, &mut rng).unwrap();
                    weighted_energy(&s_hat.sub(&l.mapped.grid).unwrap(), &w)
                })
                .collect();
            let (mean, se) = mean_and_stderr(&samples);
            assert!((mean - expected).abs() < 3.0 * se, "{mean} ± {se} vs {expected}");
        }
    }

    #[test]
    fn perfect_sic_is_exact() {
        let l = link_with(0, 0.8, identity_channel(2), 16, 1);
        let s_hat = semantic_sic(&l, &l.mapped.weight_grid, 5.0, &TeModel::perfect(), 1.0, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(s_hat, l.mapped.grid);
        let neg = TeModel { b1: -1.0, b2: 0.0 };
        assert!(semantic_sic(&l, &l.mapped.weight_grid, 1.0, &neg, 1.0, &mut RngStream::new(0, 0)).is_err());
        assert!(semantic_sic(&l, &l.mapped.weight_grid, -1.0, &TeModel::default(), 1.0, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn sic_error_is_unbiased() {
        let l = link_with(0, 0.8, identity_channel(1), 4, 2);
        let mut rng = RngStream::new(8, 0);
        let trials = 20_000;
        let diffs: Vec<Vec<Complex64>> = (0..trials)
            .map(|_| {
                let s_hat = semantic_sic(&l, &l.mapped.weight_grid, 2.0, &TeModel::default(), 1.0, &mut rng).unwrap();
                s_hat.sub(&l.mapped.grid).unwrap().into_vec()
            })
            .collect();
        for cell in 0..4 {
            for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
                let xs: Vec<f64> = diffs.iter().map(|d| part(d[cell])).collect();
                let (mean, se) = mean_and_stderr(&xs);
                assert!(mean.abs() < 3.0 * se, "cell {cell}: {mean} ± {se}");
            }
        }
    }

    #[test]
    fn perfect_sic_recovers_user2_mimo() {
        let mut rng = RngStream::new(9, 0);
        let a = link_with(0, 0.8, sample_channel(4, 1.0, &mut rng).unwrap(), 16, 1);
        let b = link_with(1, 0.2, sample_channel(4, 1.0, &mut rng).unwrap(), 16, 2);
        let x = superpose(&[a.clone(), b.clone()]).unwrap();
        let y2 = cancel_and_receive_user2(&b, &x, &a.mapped.grid, &a, &noiseless(), &mut rng).unwrap();
        let expected = b.mapped.grid.scale_rows(b.channel.sigma()).unwrap().scale(0.2f64.sqrt());
        assert!(max_abs_diff(&y2, &expected) < 1e-12);
    }

    #[test]
    fn perfect_sic_recovers_user2_siso() {
        let mut rng = RngStream::new(10, 0);
        let a = link_with(0, 0.8, sample_channel(1, 1.0, &mut rng).unwrap(), 32, 1);
        let b = link_with(1, 0.2, sample_channel(1, 1.0, &mut rng).unwrap(), 32, 2);
        let x = superpose_siso(&[a.clone(), b.clone()]).unwrap();
        let s1 = a.mapped.grid.as_slice();
        let s2_hat = cancel_and_receive_siso(&b, &x, &[(0.8, s1)], &noiseless(), &mut rng).unwrap();
        for (got, want) in s2_hat.iter().zip(b.mapped.grid.as_slice()) {
            assert!((got - want).norm() < 1e-12);
        }
        // strong user on its own sees the weak one as interference only
        let s1_hat = receive_user1_siso(&a, &x, &noiseless(), &mut rng).unwrap();
        let ratio = (0.2f64 / 0.8).sqrt();
        for ((got, s1), s2) in s1_hat.iter().zip(s1).zip(b.mapped.grid.as_slice()) {
            assert!((got - (s1 + s2 * ratio)).norm() < 1e-12);
        }
    }

    #[test]
    fn siso_and_one_antenna_mimo_agree() {
        let mut rng = RngStream::new(11, 0);
        let a = link_with(0, 0.8, sample_channel(1, 1.0, &mut rng).unwrap(), 16, 1);
        let b = link_with(1, 0.2, sample_channel(1, 1.0, &mut rng).unwrap(), 16, 2);
        let noise = NoiseSpec::complex(0.1).unwrap();
        let x = superpose(&[a.clone(), b.clone()]).unwrap();
        let y = cancel_and_receive_user2(&b, &x, &a.mapped.grid, &a, &noise, &mut RngStream::new(1, 1)).unwrap();
        let mimo: Vec<Complex64> = y.as_slice().iter().map(|z| z / (b.channel.sigma()[0] * 0.2f64.sqrt())).collect();
        let xs = superpose_siso(&[a.clone(), b.clone()]).unwrap();
        let siso = cancel_and_receive_siso(&b, &xs, &[(0.8, a.mapped.grid.as_slice())], &noise, &mut RngStream::new(1, 1)).unwrap();
        // same noise draws; with h = u·σ the rotation U^H equals 1/(h/σ)
        for (m, s) in mimo.iter().zip(&siso) {
            assert!((m - s).norm() < 1e-9);
        }
    }

    #[test]
    fn residual_only_user2_energy_matches_te() {
        let mut rng = RngStream::new(12, 0);
        let te = TeModel::default();
        let sid1 = 0.5;
        let trials = 5_000;
        let samples: Vec<f64> = (0..trials)
            .map(|_| {
                let a = link_with(0, 0.8, sample_channel(2, 1.0, &mut rng).unwrap(), 32, 1);
                let mut b = link_with(1, 0.2, sample_channel(2, 1.0, &mut rng).unwrap(), 32, 2);
                b.mapped.grid = ComplexMatrix::zeros(2, 16);
                let x = superpose(&[a.clone(), b.clone()]).unwrap();
                let s1_hat = semantic_sic(&a, &b.mapped.weight_grid, sid1, &te, 1.0, &mut rng).unwrap();
                let y2 = cancel_and_receive_user2(&b, &x, &s1_hat, &a, &noiseless(), &mut rng).unwrap();
                // normalize per layer: Σ2^{-1} / √P2
                let inv: Vec<f64> = b.channel.sigma().iter().map(|s| 1.0 / (s * 0.2f64.sqrt())).collect();
                let s2_hat = y2.scale_rows(&inv).unwrap();
                weighted_energy(&s2_hat, &b.mapped.weight_grid)
            })
            .collect();
        let (mean, se) = mean_and_stderr(&samples);
        let expected = SicScaling::Ratio.factor(0.8, 0.2) * te.eval(sid1);
        assert!((mean - expected).abs() < 3.0 * se, "{mean} ± {se} vs {expected}");
    }

    #[test]
    fn residual_energy_monotone_in_sid() {
        let te = TeModel::default();
        let mut prev = te.eval(0.0);
        for i in 1..50 {
            let cur = te.eval(i as f64 * 0.1);
            assert!(cur >= prev);
            prev = cur;
        }
    }
}
