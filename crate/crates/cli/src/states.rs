//! Input states: the named benchmark catalog and amplitude files.
//!
//! An amplitude file lists one complex amplitude per line in basis-index
//! order, as `re` or `re im` (a comma may replace the space). Blank lines and
//! text after `#` are ignored. The number of amplitudes must be a power of
//! two; the vector is normalized on load.

use std::f64::consts::FRAC_1_SQRT_2;
use std::str::FromStr;

use hwproj::sim::seeded_rng;
use hwproj::StateVector;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub enum NamedState {
    Zeros,
    Ones,
    Ghz,
    W,
    BellPairProduct,
    RyProduct(f64),
    Intro3,
    Random(Option<u64>),
}

impl FromStr for NamedState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let arg = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')).map(str::trim);
        Ok(match s {
            "zeros" => NamedState::Zeros,
            "ones" => NamedState::Ones,
            "ghz" => NamedState::Ghz,
            "w" => NamedState::W,
            "bellpair-product" => NamedState::BellPairProduct,
            "intro3" => NamedState::Intro3,
            "random" => NamedState::Random(None),
            _ => {
                if let Some(theta) = s.strip_suffix("-product").and_then(|r| r.strip_prefix("ry(")).and_then(|r| r.strip_suffix(')')) {
                    let theta = theta.trim().parse().map_err(|_| format!("bad angle in `{s}`"))?;
                    NamedState::RyProduct(theta)
                } else if let Some(seed) = arg("random(") {
                    NamedState::Random(Some(seed.parse().map_err(|_| format!("bad seed in `{s}`"))?))
                } else {
                    return Err(format!(
                        "unknown state `{s}` (expected zeros, ones, ghz, w, bellpair-product, ry(θ)-product, intro3, random or random(seed))"
                    ));
                }
            }
        })
    }
}

impl std::fmt::Display for NamedState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NamedState::Zeros => f.write_str("zeros"),
            NamedState::Ones => f.write_str("ones"),
            NamedState::Ghz => f.write_str("ghz"),
            NamedState::W => f.write_str("w"),
            NamedState::BellPairProduct => f.write_str("bellpair-product"),
            NamedState::RyProduct(t) => write!(f, "ry({t})-product"),
            NamedState::Intro3 => f.write_str("intro3"),
            NamedState::Random(None) => f.write_str("random"),
            NamedState::Random(Some(seed)) => write!(f, "random({seed})"),
        }
    }
}

impl NamedState {
    /// Register size forced by the state itself.
    pub fn fixed_size(&self) -> Option<usize> {
        match self {
            NamedState::Intro3 => Some(3),
            _ => None,
        }
    }

    /// The state on `n` qubits. `seed` feeds `random` without an explicit seed.
    pub fn build(&self, n: usize, seed: u64) -> Result<StateVector, String> {
        if n == 0 {
            return Err("states need at least one qubit".into());
        }
        if let Some(m) = self.fixed_size() {
            if m != n {
                return Err(format!("state `{self}` has {m} qubits, not {n}"));
            }
        }
        let dim = 1usize << n;
        let mut amps = vec![0.0; dim];
        match self {
            NamedState::Zeros => amps[0] = 1.0,
            NamedState::Ones => amps[dim - 1] = 1.0,
            NamedState::Ghz => {
                amps[0] = FRAC_1_SQRT_2;
                amps[dim - 1] = FRAC_1_SQRT_2;
            }
            NamedState::W => {
                for q in 0..n {
                    amps[1 << q] = 1.0;
                }
            }
            NamedState::BellPairProduct => {
                // Pairs (0,1), (2,3), ...; an odd last qubit stays |0⟩.
                let bell = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).map_err(|e| e.to_string())?;
                let mut state = (n % 2 == 1).then(|| StateVector::zero(1));
                for _ in 0..n / 2 {
                    state = Some(match state {
                        Some(rest) => bell.tensor(&rest),
                        None => bell.clone(),
                    });
                }
                return Ok(state.expect("n >= 1"));
            }
            NamedState::RyProduct(theta) => {
                let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                for (b, a) in amps.iter_mut().enumerate() {
                    let ones = b.count_ones() as i32;
                    *a = s.powi(ones) * c.powi(n as i32 - ones);
                }
            }
            NamedState::Intro3 => {
                for b in [0b000, 0b001, 0b010, 0b111] {
                    amps[b] = 0.5;
                }
            }
            NamedState::Random(explicit) => return Ok(StateVector::random(n, &mut seeded_rng(explicit.unwrap_or(seed)))),
        }
        StateVector::from_real(&amps).map_err(|e| e.to_string())
    }
}

/// Parses amplitude-file text.
pub fn parse_amplitudes(text: &str) -> Result<StateVector, String> {
    let mut amps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").replace(',', " ");
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() > 2 {
            return Err(format!("line {}: expected `re [im]`", i + 1));
        }
        let num = |f: &str| f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("line {}: bad number `{f}`", i + 1));
        let re = num(fields[0])?;
        let im = if fields.len() == 2 { num(fields[1])? } else { 0.0 };
        amps.push(Complex64::new(re, im));
    }
    if amps.len() < 2 || !amps.len().is_power_of_two() {
        return Err(format!("expected a power-of-two number of amplitudes (at least 2), found {}", amps.len()));
    }
    StateVector::normalized(amps).map_err(|e| e.to_string())
}
