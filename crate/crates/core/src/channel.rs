//! Rayleigh channel realizations, SVD pre/postcoding, AWGN and the
//! channel-equalization baseline.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sample_complex_gaussian, svd, ComplexMatrix, RngStream, SvdFactors};

/// Relative reconstruction tolerance required of cached SVD factors.
pub const SVD_TOLERANCE: f64 = 1e-9;

/// Subchannel gains at or below this value are treated as singular by
/// [`equalize`].
pub const SIGMA_FLOOR: f64 = 1e-12;

/// A channel matrix together with its SVD.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub factors: SvdFactors,
    pub h_variance: f64,
}

impl ChannelRealization {
    pub fn from_matrix(h: ComplexMatrix, h_variance: f64) -> Result<Self> {
        let factors = svd(&h, SVD_TOLERANCE)?;
        Ok(Self {
            h,
            factors,
            h_variance,
        })
    }

    /// A 1x1 channel.
    pub fn scalar(h: Complex64) -> Result<Self> {
        Self::from_matrix(ComplexMatrix::from_vec(1, 1, vec![h])?, h.norm_sqr())
    }

    pub fn antennas(&self) -> usize {
        self.h.rows()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.factors.sigma
    }

    pub fn u(&self) -> &ComplexMatrix {
        &self.factors.u
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.factors.v
    }
}

/// Draws an `r×r` channel with i.i.d. CN(0, h_variance) entries.
pub fn sample_channel(r: usize, h_variance: f64, rng: &mut RngStream) -> Result<ChannelRealization> {
    if r == 0 {
        return Err(Error::param("antenna count must be positive"));
    }
    let h = sample_complex_gaussian(r, r, h_variance, rng)?;
    ChannelRealization::from_matrix(h, h_variance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// CN(0, σ²) per sample.
    #[default]
    Complex,
    /// Real N(0, σ²) per sample; only meaningful on scalar subchannels.
    RealScalar,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Complex => "complex",
            NoiseKind::RealScalar => "real_scalar",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(NoiseKind::Complex),
            "real_scalar" => Ok(NoiseKind::RealScalar),
            other => Err(Error::param(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Additive noise per received sample. `bypass` switches noise off without
/// giving up the positive-variance invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    variance: f64,
    kind: NoiseKind,
    bypass: bool,
}

impl NoiseSpec {
    pub fn new(variance: f64, kind: NoiseKind) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::param(format!("noise variance must be positive, got {variance}")));
        }
        Ok(Self {
            variance,
            kind,
            bypass: false,
        })
    }

    pub fn complex(variance: f64) -> Result<Self> {
        Self::new(variance, NoiseKind::Complex)
    }

    /// Same spec with noise generation switched off.
    pub fn noiseless(mut self) -> Self {
        self.bypass = true;
        self
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn is_bypassed(&self) -> bool {
        self.bypass
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> Complex64 {
        if self.bypass {
            return Complex64::new(0.0, 0.0);
        }
        match self.kind {
            NoiseKind::Complex => rng.complex_normal(self.variance),
            NoiseKind::RealScalar => Complex64::new(self.variance.sqrt() * rng.standard_normal(), 0.0),
        }
    }

    fn add_to(&self, values: &mut [Complex64], rng: &mut RngStream) {
        if self.bypass {
            return;
        }
        values.iter_mut().for_each(|z| *z += self.sample(rng));
    }
}

/// `V · grid`.
pub fn precode(realization: &ChannelRealization, grid: &ComplexMatrix) -> Result<ComplexMatrix> {
    realization.v().matmul(grid)
}

/// `H · precoded + n`.
pub fn transmit(
    realization: &ChannelRealization,
    precoded: &ComplexMatrix,
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    if noise.kind == NoiseKind::RealScalar && realization.antennas() > 1 && !noise.bypass {
        return Err(Error::param("real scalar noise applies to scalar subchannels only"));
    }
    let mut y = realization.h.matmul(precoded)?;
    noise.add_to(y.as_mut_slice(), rng);
    Ok(y)
}

/// `U^H · y`.
pub fn postcode(realization: &ChannelRealization, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    realization.u().adjoint_matmul(y)
}

/// `Σ^{-1} · ỹ`: flattens the subchannel gains and amplifies the noise on
/// weak ones.
pub fn equalize(realization: &ChannelRealization, y_tilde: &ComplexMatrix) -> Result<ComplexMatrix> {
    let inv = inverse_gains(realization.sigma())?;
    y_tilde.scale_rows(&inv)
}

pub(crate) fn inverse_gains(sigma: &[f64]) -> Result<Vec<f64>> {
    sigma
        .iter()
        .enumerate()
        .map(|(index, &s)| {
            if s <= SIGMA_FLOOR {
                Err(Error::SingularChannel { index, sigma: s })
            } else {
                Ok(1.0 / s)
            }
        })
        .collect()
}

/// Scalar channel `h·s + n` applied symbol by symbol.
pub fn siso_transmit(
    h: Complex64,
    s: &[Complex64],
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Vec<Complex64> {
    let mut y: Vec<Complex64> = s.iter().map(|&x| h * x).collect();
    noise.add_to(&mut y, rng);
    y
}
