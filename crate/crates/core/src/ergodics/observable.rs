use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FiberError, Result};

/// Observables `f(xi, v)` of degree at most two, plus the radial direction
/// cosine. Indices are 0-based; names printed and parsed are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    /// `xi_i`
    Xi(usize),
    /// `xi_i xi_j`
    XiXi(usize, usize),
    /// `|xi|^2`
    XiNormSq,
    /// `v_i`
    V(usize),
    /// `v_i v_j`
    VV(usize, usize),
    /// `xi . v`
    XiDotV,
    /// `xi . v / |xi|` (zero at the origin)
    RadialV,
}

impl Observable {
    #[inline]
    pub fn eval(&self, xi: &[f64], v: &[f64]) -> f64 {
        match *self {
            Observable::Xi(i) => xi[i],
            Observable::XiXi(i, j) => xi[i] * xi[j],
            Observable::XiNormSq => xi.iter().map(|x| x * x).sum(),
            Observable::V(i) => v[i],
            Observable::VV(i, j) => v[i] * v[j],
            Observable::XiDotV => xi.iter().zip(v).map(|(a, b)| a * b).sum(),
            Observable::RadialV => {
                let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                if r > 0.0 {
                    xi.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / r
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest index used, for dimension checks.
    pub fn max_index(&self) -> Option<usize> {
        match *self {
            Observable::Xi(i) | Observable::V(i) => Some(i),
            Observable::XiXi(i, j) | Observable::VV(i, j) => Some(i.max(j)),
            _ => None,
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.max_index() {
            Some(i) if i >= d => Err(FiberError::DimensionMismatch { expected: d, got: i + 1 }),
            _ => Ok(()),
        }
    }

    /// First and second moments compared by the stationarity audit.
    pub fn moment_set(d: usize) -> Vec<Observable> {
        let mut out: Vec<Observable> = (0..d).map(Observable::Xi).collect();
        for i in 0..d {
            for j in i..d {
                out.push(Observable::XiXi(i, j));
            }
        }
        out.extend((0..d).map(Observable::V));
        for i in 0..d {
            for j in i..d {
                out.push(Observable::VV(i, j));
            }
        }
        out.push(Observable::XiDotV);
        out
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Observable::Xi(i) => write!(f, "xi{}", i + 1),
            Observable::XiXi(i, j) if i == j => write!(f, "xi{}^2", i + 1),
            Observable::XiXi(i, j) => write!(f, "xi{}xi{}", i + 1, j + 1),
            Observable::XiNormSq => write!(f, "|xi|^2"),
            Observable::V(i) => write!(f, "v{}", i + 1),
            Observable::VV(i, j) if i == j => write!(f, "v{}^2", i + 1),
            Observable::VV(i, j) => write!(f, "v{}v{}", i + 1, j + 1),
            Observable::XiDotV => write!(f, "xi.v"),
            Observable::RadialV => write!(f, "xi.v/|xi|"),
        }
    }
}

fn index(s: &str) -> Option<usize> {
    s.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1)
}

impl FromStr for Observable {
    type Err = FiberError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("observable", format!("cannot parse `{s}`"));
        let s = s.trim();
        match s {
            "|xi|^2" => return Ok(Observable::XiNormSq),
            "xi.v" => return Ok(Observable::XiDotV),
            "xi.v/|xi|" => return Ok(Observable::RadialV),
            _ => {}
        }
        let (body, squared) = match s.strip_suffix("^2") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let parse_pair = |b: &str, p: &str| -> Option<(usize, usize)> {
            let rest = b.strip_prefix(p)?;
            let k = rest.find(p)?;
            Some((index(&rest[..k])?, index(&rest[k + p.len()..])?))
        };
        if let Some(rest) = body.strip_prefix("xi") {
            if let Some(i) = index(rest) {
                return Ok(if squared { Observable::XiXi(i, i) } else { Observable::Xi(i) });
            }
            if !squared {
                if let Some((i, j)) = parse_pair(body, "xi") {
                    return Ok(Observable::XiXi(i, j));
                }
            }
        } else if let Some(rest) = body.strip_prefix('v') {
            if let Some(i) = index(rest) {
                return Ok(if squared { Observable::VV(i, i) } else { Observable::V(i) });
            }
            if !squared {
                if let Some((i, j)) = parse_pair(body, "v") {
                    return Ok(Observable::VV(i, j));
                }
            }
        }
        Err(bad())
    }
}
