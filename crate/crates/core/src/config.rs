//! Vortex configurations, the admissible `beta` range and the config file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::scalar::Scalar;

/// Points closer than this are treated as the same center.
const MERGE_TOL: f64 = 1e-12;

/// Unvalidated input: point lists as written by a user.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawConfig {
    pub poles: Vec<[f64; 2]>,
    #[serde(default)]
    pub zeros: Vec<[f64; 2]>,
    #[serde(default)]
    pub varrho: Option<f64>,
    #[serde(default)]
    pub r0: Option<f64>,
    /// Shrink `varrho` to half the minimal center distance instead of failing.
    #[serde(default)]
    pub auto_shrink: bool,
}

impl RawConfig {
    /// `count` poles stacked at the origin and no zeros.
    pub fn coincident(count: usize, varrho: f64) -> Self {
        Self { poles: vec![[0.0, 0.0]; count], zeros: Vec::new(), varrho: Some(varrho), r0: None, auto_shrink: false }
    }
}

/// A distinct Dirac location together with how many points were merged into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Center<T> {
    pub pos: [T; 2],
    pub mult: u32,
}

impl<T: Scalar> Center<T> {
    pub fn norm(&self) -> T {
        self.pos[0].hypot(self.pos[1])
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.pos[0] - other.pos[0]).hypot(self.pos[1] - other.pos[1])
    }
}

/// Validated configuration of poles (vortices) and zeros (anti-vortices).
#[derive(Debug, Clone, PartialEq)]
pub struct VortexConfig<T> {
    poles: Vec<Center<T>>,
    zeros: Vec<Center<T>>,
    varrho: T,
    r0: T,
}

impl<T: Scalar> VortexConfig<T> {
    pub fn poles(&self) -> &[Center<T>] {
        &self.poles
    }

    pub fn zeros(&self) -> &[Center<T>] {
        &self.zeros
    }

    /// Cutoff radius of the singular profiles.
    pub fn varrho(&self) -> T {
        self.varrho
    }

    /// Radius of the ball containing every cutoff ball.
    pub fn r0(&self) -> T {
        self.r0
    }

    /// Number of poles counted with multiplicity.
    pub fn n(&self) -> u32 {
        self.poles.iter().map(|c| c.mult).sum()
    }

    /// Number of zeros counted with multiplicity.
    pub fn m(&self) -> u32 {
        self.zeros.iter().map(|c| c.mult).sum()
    }

    /// `N - M`, at least 2 for a valid configuration.
    pub fn degree(&self) -> u32 {
        self.n() - self.m()
    }

    /// Upper end `2(N - M)` of the admissible open interval.
    pub fn beta_upper(&self) -> T {
        T::lit(2.0 * self.degree() as f64)
    }

    /// The anchor parameter `N - M + 1`.
    pub fn beta0(&self) -> T {
        T::lit(self.degree() as f64 + 1.0)
    }

    /// True when every pole and zero sits at the origin.
    pub fn is_coincident_at_origin(&self) -> bool {
        self.poles.iter().chain(&self.zeros).all(|c| c.norm().as_f64() <= MERGE_TOL)
    }

    /// Iterates all centers with a sign: `+mult` for poles, `-mult` for zeros.
    pub fn signed_centers(&self) -> impl Iterator<Item = (Center<T>, i64)> + '_ {
        self.poles.iter().map(|c| (*c, c.mult as i64)).chain(self.zeros.iter().map(|c| (*c, -(c.mult as i64))))
    }

    /// Expands multiplicities back into point lists with explicit `varrho` and `r0`.
    pub fn to_raw(&self) -> RawConfig {
        let expand = |cs: &[Center<T>]| {
            cs.iter()
                .flat_map(|c| std::iter::repeat([c.pos[0].as_f64(), c.pos[1].as_f64()]).take(c.mult as usize))
                .collect::<Vec<_>>()
        };
        RawConfig {
            poles: expand(&self.poles),
            zeros: expand(&self.zeros),
            varrho: Some(self.varrho.as_f64()),
            r0: Some(self.r0.as_f64()),
            auto_shrink: false,
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> VortexConfig<U> {
        let conv = |cs: &[Center<T>]| {
            cs.iter()
                .map(|c| Center { pos: [U::lit(c.pos[0].as_f64()), U::lit(c.pos[1].as_f64())], mult: c.mult })
                .collect()
        };
        VortexConfig {
            poles: conv(&self.poles),
            zeros: conv(&self.zeros),
            varrho: U::lit(self.varrho.as_f64()),
            r0: U::lit(self.r0.as_f64()),
        }
    }
}

fn merge(points: &[[f64; 2]]) -> Vec<([f64; 2], u32)> {
    let mut out: Vec<([f64; 2], u32)> = Vec::new();
    for p in points {
        match out.iter_mut().find(|(q, _)| (q[0] - p[0]).hypot(q[1] - p[1]) <= MERGE_TOL) {
            Some((_, m)) => *m += 1,
            None => out.push((*p, 1)),
        }
    }
    out
}

/// Default enclosing radius `max(4e, 2 max|center| + 1)`.
pub fn default_r0(max_norm: f64) -> f64 {
    (4.0 * std::f64::consts::E).max(2.0 * max_norm + 1.0)
}

/// Validates a raw configuration: merges coincident points, checks the
/// degree and the disjoint-ball condition, and fills in `varrho` / `r0`.
pub fn validate_config<T: Scalar>(raw: &RawConfig) -> Result<VortexConfig<T>, ConfigError> {
    if raw
        .poles
        .iter()
        .chain(&raw.zeros)
        .flatten()
        .chain(raw.varrho.iter())
        .chain(raw.r0.iter())
        .any(|x| !x.is_finite())
    {
        return Err(ConfigError::NonFinite);
    }
    let degree = raw.poles.len() as i64 - raw.zeros.len() as i64;
    if degree < 2 {
        return Err(ConfigError::BetaIntervalEmpty(degree));
    }
    let poles = merge(&raw.poles);
    let zeros = merge(&raw.zeros);

    let all: Vec<[f64; 2]> = poles.iter().chain(&zeros).map(|(p, _)| *p).collect();
    let mut d_min = f64::INFINITY;
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            d_min = d_min.min((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    // a pole and a zero at the same spot survive merging as two centers at distance 0
    if d_min <= MERGE_TOL {
        return Err(ConfigError::SeparationViolation { distance: d_min, varrho: raw.varrho.unwrap_or(0.5) });
    }

    let varrho = match raw.varrho {
        None => 0.5f64.min(0.5 * d_min),
        Some(v) => {
            if !(v > 0.0 && v < 1.0) {
                return Err(ConfigError::VarrhoRange(v));
            }
            if 2.0 * v > d_min {
                if raw.auto_shrink {
                    0.5 * d_min
                } else {
                    return Err(ConfigError::SeparationViolation { distance: d_min, varrho: v });
                }
            } else {
                v
            }
        }
    };

    let max_norm = all.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    let min_r0 = 4.0 * std::f64::consts::E;
    let r0 = match raw.r0 {
        None => default_r0(max_norm),
        Some(r0) => {
            if r0 < min_r0 {
                return Err(ConfigError::R0TooSmall { r0, min: min_r0 });
            }
            if max_norm + varrho > r0 {
                return Err(ConfigError::R0NotEnclosing { r0, varrho, distance: max_norm });
            }
            r0
        }
    };

    let conv = |cs: Vec<([f64; 2], u32)>| {
        cs.into_iter().map(|(p, mult)| Center { pos: [T::lit(p[0]), T::lit(p[1])], mult }).collect()
    };
    Ok(VortexConfig { poles: conv(poles), zeros: conv(zeros), varrho: T::lit(varrho), r0: T::lit(r0) })
}

/// Admissible parameter `beta` in `(2, 2(N - M))` together with the anchor `beta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParam<T> {
    beta: T,
    beta0: T,
    upper: T,
}

impl<T: Scalar> BetaParam<T> {
    pub fn new(beta: T, config: &VortexConfig<T>) -> Result<Self, ConfigError> {
        let upper = config.beta_upper();
        if !(beta > T::lit(2.0) && beta < upper) {
            return Err(ConfigError::BetaOutOfInterval { beta: beta.as_f64(), upper: upper.as_f64() });
        }
        Ok(Self { beta, beta0: config.beta0(), upper })
    }

    pub fn value(&self) -> T {
        self.beta
    }

    pub fn beta0(&self) -> T {
        self.beta0
    }

    pub fn upper(&self) -> T {
        self.upper
    }
}

/// Everything a config file may hold: the configuration itself plus run parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub poles: Vec<[f64; 2]>,
    #[serde(default)]
    pub zeros: Vec<[f64; 2]>,
    #[serde(default)]
    pub varrho: Option<f64>,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub auto_shrink: bool,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub rmax: Option<f64>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub radial_nodes: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self) -> RawConfig {
        RawConfig {
            poles: self.poles.clone(),
            zeros: self.zeros.clone(),
            varrho: self.varrho,
            r0: self.r0,
            auto_shrink: self.auto_shrink,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(poles: &[[f64; 2]], zeros: &[[f64; 2]], varrho: Option<f64>) -> RawConfig {
        RawConfig { poles: poles.to_vec(), zeros: zeros.to_vec(), varrho, r0: None, auto_shrink: false }
    }

    #[test]
    fn double_pole_at_origin_is_valid() {
        let c: VortexConfig<f64> = validate_config(&raw(&[[0.0, 0.0], [0.0, 0.0]], &[], Some(0.5))).unwrap();
        assert_eq!(c.poles().len(), 1);
        assert_eq!(c.poles()[0].mult, 2);
        assert_eq!(c.degree(), 2);
        assert_eq!(c.beta_upper(), 4.0);
        assert_eq!(c.beta0(), 3.0);
        assert!(c.is_coincident_at_origin());
        assert!((c.r0() - 4.0 * std::f64::consts::E).abs() < 1e-14);
        assert!(BetaParam::new(3.0, &c).is_ok());
    }

    #[test]
    fn single_pole_has_empty_interval() {
        let err = validate_config::<f64>(&raw(&[[0.0, 0.0]], &[], None)).unwrap_err();
        assert!(err.to_string().contains("beta interval empty"));
        let err = validate_config::<f64>(&raw(&[[0.0, 0.0], [1.0, 0.0]], &[[3.0, 0.0]], None)).unwrap_err();
        assert_eq!(err, ConfigError::BetaIntervalEmpty(1));
    }

    #[test]
    fn separation_uses_disjoint_balls() {
        let pts = [[0.0, 0.0], [0.3, 0.0]];
        assert!(validate_config::<f64>(&raw(&pts, &[], Some(0.15))).is_ok());
        for v in [0.2, 0.4] {
            let err = validate_config::<f64>(&raw(&pts, &[], Some(v))).unwrap_err();
            assert!(err.to_string().contains("separation violation"), "{err}");
        }
        let mut shrink = raw(&pts, &[], Some(0.4));
        shrink.auto_shrink = true;
        let c: VortexConfig<f64> = validate_config(&shrink).unwrap();
        assert!((c.varrho() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn default_varrho_and_r0() {
        let c: VortexConfig<f64> = validate_config(&raw(&[[0.0, 0.0], [0.6, 0.0], [0.0, 8.0]], &[], None)).unwrap();
        assert!((c.varrho() - 0.3).abs() < 1e-15);
        assert!((c.r0() - 17.0).abs() < 1e-12);
        let c: VortexConfig<f64> = validate_config(&raw(&[[0.0, 0.0], [5.0, 0.0]], &[], None)).unwrap();
        assert_eq!(c.varrho(), 0.5);
    }

    #[test]
    fn pole_on_zero_is_rejected() {
        let err = validate_config::<f64>(&raw(&[[0.0, 0.0]; 3], &[[0.0, 0.0]], Some(0.5))).unwrap_err();
        assert!(matches!(err, ConfigError::SeparationViolation { .. }));
    }

    #[test]
    fn r0_checks() {
        let mut r = raw(&[[0.0, 0.0], [0.0, 0.0]], &[], Some(0.5));
        r.r0 = Some(5.0);
        assert!(matches!(validate_config::<f64>(&r), Err(ConfigError::R0TooSmall { .. })));
        let mut r = raw(&[[11.0, 0.0], [0.0, 0.0]], &[], Some(0.5));
        r.r0 = Some(11.2);
        assert!(matches!(validate_config::<f64>(&r), Err(ConfigError::R0NotEnclosing { .. })));
    }

    #[test]
    fn beta_must_be_inside_open_interval() {
        let c: VortexConfig<f64> = validate_config(&RawConfig::coincident(2, 0.5)).unwrap();
        for b in [2.0, 4.0, 1.0, 5.0] {
            let err = BetaParam::new(b, &c).unwrap_err();
            assert!(err.to_string().contains("beta out of open interval"));
        }
    }

    #[test]
    fn config_file_parses_documented_keys() {
        let text = r#"
poles = [[0.0, 0.0], [0.0, 0.0]]
zeros = []
varrho = 0.5
beta = 3.0
rmax = 10000.0
radial_nodes = 4000
"#;
        let f = ConfigFile::parse(text).unwrap();
        assert_eq!(f.poles.len(), 2);
        assert_eq!(f.beta, Some(3.0));
        assert_eq!(f.radial_nodes, Some(4000));
        assert!(ConfigFile::parse("poles = [[0,0]]\nbogus = 1\n").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point() -> impl Strategy<Value = [f64; 2]> {
            (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(x, y)| [x, y])
        }

        proptest! {
            #[test]
            fn validation_is_idempotent(
                poles in proptest::collection::vec(point(), 2..6),
                dup in 0usize..2,
                varrho in proptest::option::of(0.01f64..0.99),
            ) {
                let mut poles = poles;
                if dup == 1 { poles.push(poles[0]); }
                let r = RawConfig { poles, zeros: vec![], varrho, r0: None, auto_shrink: true };
                if let Ok(c) = validate_config::<f64>(&r) {
                    let again: VortexConfig<f64> = validate_config(&c.to_raw()).unwrap();
                    prop_assert_eq!(again, c);
                }
            }
        }
    }
}
