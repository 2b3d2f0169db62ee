//! Tolerance pack shared by every numerical decision in the crate.

use std::fmt;

/// Thresholds used for Hermiticity, orthonormality, positivity, rank and
/// membership decisions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Max entrywise deviation from Hermiticity.
    pub herm: f64,
    /// Max deviation of a Gram matrix from the identity.
    pub orth: f64,
    /// A matrix is PSD when its smallest eigenvalue is at least `-psd`.
    pub psd: f64,
    /// Relative singular-value cut-off for rank decisions; the absolute
    /// threshold is `sub * max(sigma_max, 1)`.
    pub sub: f64,
    /// Max distance from an affine set for membership.
    pub member: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            orth: 1e-10,
            psd: 1e-9,
            sub: 1e-9,
            member: 1e-8,
        }
    }
}

/// Name of the environment variable holding tolerance overrides.
pub const TOL_ENV: &str = "CAUSTYK_TOL";

#[derive(Debug, Clone, PartialEq)]
pub struct TolParseError(pub String);

impl fmt::Display for TolParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bad tolerance override: {}", self.0)
    }
}

impl std::error::Error for TolParseError {}

impl Tolerances {
    /// Applies overrides of the form `member=1e-7,psd=1e-8`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self, TolParseError> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| TolParseError(format!("expected key=value, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| TolParseError(format!("`{}` is not a number", value.trim())))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(TolParseError(format!("`{key}` must be positive")));
            }
            match key.trim() {
                "herm" => self.herm = value,
                "orth" => self.orth = value,
                "psd" => self.psd = value,
                "sub" => self.sub = value,
                "member" => self.member = value,
                other => return Err(TolParseError(format!("unknown key `{other}`"))),
            }
        }
        Ok(self)
    }

    /// Defaults, overridden by `CAUSTYK_TOL` when it is set.
    pub fn from_env() -> Result<Self, TolParseError> {
        match std::env::var(TOL_ENV) {
            Ok(spec) => Tolerances::default().with_overrides(&spec),
            Err(_) => Ok(Tolerances::default()),
        }
    }

    /// Absolute rank threshold for a spectrum whose largest value is `sigma_max`.
    pub fn rank_threshold(&self, sigma_max: f64) -> f64 {
        self.sub * sigma_max.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        let t = Tolerances::default()
            .with_overrides("member=1e-7, psd=2e-9")
            .unwrap();
        assert_eq!(t.member, 1e-7);
        assert_eq!(t.psd, 2e-9);
        assert_eq!(t.herm, 1e-10);
    }

    #[test]
    fn overrides_reject_garbage() {
        assert!(Tolerances::default().with_overrides("member").is_err());
        assert!(Tolerances::default().with_overrides("foo=1").is_err());
        assert!(Tolerances::default().with_overrides("psd=-1").is_err());
    }
}
