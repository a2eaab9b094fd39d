use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_functions::{self as sf, SpecialFnConfig, EULER_GAMMA};

/// Largest index for which Γ^{(n)} coefficients are tabulated (n ≥ 2).
pub const GAMMA_DERIV_MAX_INDEX: usize = 1000;

/// Coefficient family of φ(z) = Σ φ_k z^k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// φ_k = 1/k!
    Exponential,
    /// φ_k = 1/Γ(μ + k/ρ)
    MittagLeffler { rho: f64, mu: f64 },
    /// φ_k = b a^{(k+1)/b} / Γ((k+1)/b)
    StretchedGamma { a: f64, b: f64 },
    /// φ_k = 1/Γ^{(n)}(k+1)
    GammaDeriv { n: u32 },
    /// Rank-one Dunkl kernel e^z ₁F₁(κ; 2κ+1; -2z).
    DunklRankOne { kappa: f64 },
    /// φ_k = 1, i.e. φ(z) = 1/(1-z). Not entire.
    BackwardShift,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Exponential => "Exponential",
            Family::MittagLeffler { .. } => "MittagLeffler",
            Family::StretchedGamma { .. } => "StretchedGamma",
            Family::GammaDeriv { .. } => "GammaDeriv",
            Family::DunklRankOne { .. } => "DunklRankOne",
            Family::BackwardShift => "BackwardShift",
        }
    }
}

/// Order ρ and type σ of an entire function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub rho: f64,
    pub sigma: f64,
}

/// An entire (or, for the backward shift, disk-analytic) function φ given by
/// its coefficient family.
///
/// Coefficients are handled as `(ln|φ_k|, sign)` pairs so that ratios never
/// form Γ/Γ quotients directly. Every family except `GammaDeriv` with odd n
/// has φ_k > 0; there Γ^{(n)}(1) < 0 and the sign is carried along.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DescriptorJson", into = "DescriptorJson")]
pub struct PhiDescriptor {
    family: Family,
    normalized: bool,
    raw0: (f64, f64),
    table: Option<Arc<Vec<(f64, f64)>>>,
}

impl PartialEq for PhiDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.normalized == other.normalized
    }
}

impl PhiDescriptor {
    pub fn new(family: Family, normalized: bool) -> Result<Self> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{} parameter `{name}` must be positive, got {v}", family.name())))
            }
        };
        match family {
            Family::MittagLeffler { rho, mu } => {
                positive("rho", rho)?;
                positive("mu", mu)?;
            }
            Family::StretchedGamma { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            Family::GammaDeriv { n: 0 } => {
                return Err(Error::Invalid("GammaDeriv parameter `n` must be at least 1".into()));
            }
            Family::DunklRankOne { kappa } => positive("kappa", kappa)?,
            _ => {}
        }
        let table = match family {
            Family::GammaDeriv { n } if n >= 2 => Some(gamma_deriv_table(n)?),
            _ => None,
        };
        let mut d = Self { family, normalized: false, raw0: (0.0, 1.0), table };
        d.raw0 = d.raw_ln_coeff(0)?;
        d.normalized = normalized;
        Ok(d)
    }

    pub fn exponential() -> Self {
        Self::new(Family::Exponential, false).expect("valid family")
    }

    pub fn mittag_leffler(rho: f64, mu: f64) -> Result<Self> {
        Self::new(Family::MittagLeffler { rho, mu }, false)
    }

    pub fn stretched_gamma(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::StretchedGamma { a, b }, false)
    }

    pub fn gamma_deriv(n: u32) -> Result<Self> {
        Self::new(Family::GammaDeriv { n }, false)
    }

    pub fn dunkl(kappa: f64) -> Result<Self> {
        Self::new(Family::DunklRankOne { kappa }, false)
    }

    pub fn backward_shift() -> Self {
        Self::new(Family::BackwardShift, false).expect("valid family")
    }

    /// The same family with coefficients divided by the raw φ₀.
    pub fn normalized(&self) -> Self {
        Self { normalized: true, ..self.clone() }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_entire(&self) -> bool {
        !matches!(self.family, Family::BackwardShift)
    }

    /// Asserted order and type. `None` where the growth is only estimated
    /// empirically (Γ-derivative and Dunkl families) or φ is not entire.
    pub fn growth(&self) -> Option<Growth> {
        match self.family {
            Family::Exponential => Some(Growth { rho: 1.0, sigma: 1.0 }),
            Family::MittagLeffler { rho, .. } => Some(Growth { rho, sigma: 1.0 }),
            Family::StretchedGamma { a, b } => Some(Growth { rho: b, sigma: a }),
            _ => None,
        }
    }

    /// Raw φ₀ before any normalization.
    pub fn raw_phi0(&self) -> f64 {
        self.raw0.1 * self.raw0.0.exp()
    }

    fn raw_ln_coeff(&self, k: usize) -> Result<(f64, f64)> {
        let kf = k as f64;
        let v = match self.family {
            Family::Exponential => (-sf::ln_gamma(kf + 1.0), 1.0),
            Family::MittagLeffler { rho, mu } => (-sf::ln_gamma(mu + kf / rho), 1.0),
            Family::StretchedGamma { a, b } => {
                let s = (kf + 1.0) / b;
                (b.ln() + s * a.ln() - sf::ln_gamma(s), 1.0)
            }
            Family::GammaDeriv { n: 1 } => {
                // Γ'(k+1) = k! (H_k - γ)
                let h = sf::harmonic(k as u64) - EULER_GAMMA;
                (-(sf::ln_gamma(kf + 1.0) + h.abs().ln()), h.signum())
            }
            Family::GammaDeriv { .. } => {
                let t = self.table.as_ref().expect("table built for n >= 2");
                *t.get(k).ok_or_else(|| {
                    Error::Overflow(format!("GammaDeriv coefficients are tabulated for k <= {GAMMA_DERIV_MAX_INDEX}"))
                })?
            }
            Family::DunklRankOne { kappa } => {
                // φ_{2m} = (1/2)_m / ((2m)! (κ+1/2)_m), φ_{2m+1} = (1/2)_{m+1} / ((2m+1)! (κ+1/2)_{m+1})
                let m = (k / 2 + k % 2) as f64;
                let ln_poch = |a: f64, m: f64| sf::ln_gamma(a + m) - sf::ln_gamma(a);
                (ln_poch(0.5, m) - ln_poch(kappa + 0.5, m) - sf::ln_gamma(kf + 1.0), 1.0)
            }
            Family::BackwardShift => (0.0, 1.0),
        };
        if !v.0.is_finite() {
            return Err(Error::Overflow(format!("ln phi_{k} is not finite for {}", self.family.name())));
        }
        Ok(v)
    }

    /// `(ln|φ_k|, sign φ_k)`, after normalization if requested.
    pub fn ln_coeff(&self, k: usize) -> Result<(f64, f64)> {
        let (l, s) = self.raw_ln_coeff(k)?;
        if self.normalized {
            Ok((l - self.raw0.0, s * self.raw0.1))
        } else {
            Ok((l, s))
        }
    }

    /// φ_k as a signed real.
    ///
    /// Safe ranges (no under- or overflow): Exponential k ≤ 170; the other
    /// Γ-based families while |ln φ_k| < 708; BackwardShift for all k.
    pub fn coeff(&self, k: usize) -> Result<f64> {
        let (l, s) = self.ln_coeff(k)?;
        if l.abs() > 708.0 {
            return Err(Error::Overflow(format!("phi_{k} = exp({l}) leaves the f64 range")));
        }
        Ok(s * l.exp())
    }

    /// φ_{k-1}/φ_k for k ≥ 1, formed in log space.
    pub fn ratio(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("ratio phi_{k-1}/phi_k needs k >= 1".into()));
        }
        let (a, sa) = self.ln_coeff(k - 1)?;
        let (b, sb) = self.ln_coeff(k)?;
        Ok(sa * sb * (a - b).exp())
    }

    /// φ_j/φ_{j+k}, formed in log space.
    pub fn ratio_span(&self, j: usize, k: usize) -> Result<f64> {
        let (a, sa) = self.ln_coeff(j)?;
        let (b, sb) = self.ln_coeff(j + k)?;
        Ok(sa * sb * (a - b).exp())
    }
}

fn gamma_deriv_table(n: u32) -> Result<Arc<Vec<(f64, f64)>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("cache lock").get(&n) {
        return Ok(t.clone());
    }
    let cfg = SpecialFnConfig::default();
    let mut rows = Vec::with_capacity(GAMMA_DERIV_MAX_INDEX + 1);
    for k in 0..=GAMMA_DERIV_MAX_INDEX {
        let x = k as f64 + 1.0;
        let scaled = sf::gamma_deriv_scaled(n, x, &cfg)?;
        rows.push((-(sf::ln_gamma(x) + scaled.abs().ln()), scaled.signum()));
    }
    let table = Arc::new(rows);
    cache.lock().expect("cache lock").insert(n, table.clone());
    Ok(table)
}

/// Wire format: `{"family": "...", "params": {...}, "normalized": bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorJson {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub normalized: bool,
}

impl TryFrom<DescriptorJson> for PhiDescriptor {
    type Error = Error;

    fn try_from(j: DescriptorJson) -> Result<Self> {
        let expect = |names: &[&str]| -> Result<Vec<f64>> {
            for key in j.params.keys() {
                if !names.contains(&key.as_str()) {
                    return Err(Error::Invalid(format!("phi.params: unknown field `{key}` for family {}", j.family)));
                }
            }
            names
                .iter()
                .map(|n| {
                    j.params
                        .get(*n)
                        .copied()
                        .ok_or_else(|| Error::Invalid(format!("phi.params: missing field `{n}` for family {}", j.family)))
                })
                .collect()
        };
        let family = match j.family.as_str() {
            "Exponential" => {
                expect(&[])?;
                Family::Exponential
            }
            "MittagLeffler" => {
                let p = expect(&["rho", "mu"])?;
                Family::MittagLeffler { rho: p[0], mu: p[1] }
            }
            "StretchedGamma" => {
                let p = expect(&["a", "b"])?;
                Family::StretchedGamma { a: p[0], b: p[1] }
            }
            "GammaDeriv" => {
                let p = expect(&["n"])?;
                if p[0].fract() != 0.0 || p[0] < 1.0 || p[0] > u32::MAX as f64 {
                    return Err(Error::Invalid(format!("phi.params.n must be a positive integer, got {}", p[0])));
                }
                Family::GammaDeriv { n: p[0] as u32 }
            }
            "DunklRankOne" => {
                let p = expect(&["kappa"])?;
                Family::DunklRankOne { kappa: p[0] }
            }
            "BackwardShift" => {
                expect(&[])?;
                Family::BackwardShift
            }
            other => return Err(Error::Invalid(format!("phi.family: unknown family `{other}`"))),
        };
        PhiDescriptor::new(family, j.normalized)
    }
}

impl From<PhiDescriptor> for DescriptorJson {
    fn from(d: PhiDescriptor) -> Self {
        let params: BTreeMap<String, f64> = match d.family {
            Family::MittagLeffler { rho, mu } => [("rho", rho), ("mu", mu)].into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            Family::StretchedGamma { a, b } => [("a", a), ("b", b)].into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            Family::GammaDeriv { n } => [("n".to_string(), n as f64)].into_iter().collect(),
            Family::DunklRankOne { kappa } => [("kappa".to_string(), kappa)].into_iter().collect(),
            Family::Exponential | Family::BackwardShift => BTreeMap::new(),
        };
        DescriptorJson { family: d.family.name().to_string(), params, normalized: d.normalized }
    }
}
