// SPDX-License-Identifier: Apache-2.0

//! Chain geometries and the pair quantities entering the dipolar couplings.
//!
//! All lengths are in units of the half-distance between neighbouring odd
//! nodes, so the zigzag and alternating builders both place node `j`
//! (0-based, even) at `x = j`. Node indices in this API are 0-based; the
//! text formats and the CLI are 1-based.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Zigzag,
    Alternating,
    Custom,
}

impl ChainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChainKind::Zigzag => "zigzag",
            ChainKind::Alternating => "alternating",
            ChainKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T> Point<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

/// Ordered planar node positions of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeList<T> {
    positions: Vec<Point<T>>,
    kind: ChainKind,
}

impl<T: Scalar> NodeList<T> {
    /// Zigzag chain: `x_j = j`, `y_j = 0` on odd (1-based) nodes and `y` on
    /// even ones.
    pub fn zigzag(n: usize, y: T) -> Result<Self> {
        check_len(n)?;
        // Only |Y| matters physically (cos^2 dependence) but negative
        // heights are rejected rather than silently mirrored.
        if !(y >= T::zero()) {
            return Err(Error::InvalidChain(format!("zigzag height Y must be a nonnegative number, got {y}")));
        }
        let positions = (0..n)
            .map(|j| {
                let x = T::from_usize(j).unwrap();
                Point::new(x, if j % 2 == 0 { T::zero() } else { y })
            })
            .collect();
        Ok(Self { positions, kind: ChainKind::Zigzag })
    }

    /// Collinear alternating chain with bond lengths `alpha` and `2 - alpha`.
    pub fn alternating(n: usize, alpha: T) -> Result<Self> {
        check_len(n)?;
        if !(alpha > T::zero() && alpha < T::lit(2.0)) {
            return Err(Error::InvalidAlternation(alpha.as_f64()));
        }
        let mut positions: Vec<Point<T>> = Vec::with_capacity(n);
        for j in 0..n {
            let x = if j % 2 == 0 { T::from_usize(j).unwrap() } else { positions[j - 1].x + alpha };
            positions.push(Point::new(x, T::zero()));
        }
        Ok(Self { positions, kind: ChainKind::Alternating })
    }

    /// Arbitrary node list. Coincident nodes are accepted here and rejected
    /// when a pair geometry is requested.
    pub fn custom(positions: Vec<Point<T>>) -> Result<Self> {
        check_len(positions.len())?;
        if positions.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidChain("non-finite coordinate".into()));
        }
        Ok(Self { positions, kind: ChainKind::Custom })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn positions(&self) -> &[Point<T>] {
        &self.positions
    }

    pub fn is_collinear_on_axis(&self) -> bool {
        self.positions.iter().all(|p| p.y == T::zero())
    }

    /// Horizontal extent `x_N - x_1`.
    pub fn chain_length(&self) -> T {
        match (self.positions.first(), self.positions.last()) {
            (Some(a), Some(b)) => b.x - a.x,
            _ => T::zero(),
        }
    }

    /// Mirror image `x -> x_max - x`, node order reversed.
    pub fn mirrored(&self) -> Self {
        let span = self.positions.last().map_or(T::zero(), |p| p.x) + self.positions.first().map_or(T::zero(), |p| p.x);
        let positions = self.positions.iter().rev().map(|p| Point::new(span - p.x, p.y)).collect();
        Self { positions, kind: self.kind }
    }

    /// Distance and field angle cosine for the pair `(i, j)`.
    pub fn pair_geometry(&self, i: usize, j: usize, field: &FieldOrientation<T>) -> Result<PairGeometry<T>> {
        let n = self.len();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
        if i == j {
            return Err(Error::InvalidPair { i, j });
        }
        let (a, b) = (self.positions[i], self.positions[j]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let r = dx.hypot(dy);
        if r == T::zero() {
            return Err(Error::DegenerateGeometry { i, j });
        }
        let (nx, ny) = field.direction();
        let cos_phi = ((dx * nx + dy * ny) / r).max(-T::one()).min(T::one());
        Ok(PairGeometry { r, cos_phi })
    }

    /// Parses the plain-text geometry format: one `x y` pair per line,
    /// `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut positions = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: lineno + 1, msg };
            let mut fields = line.split_whitespace();
            let mut next = |what: &str| -> Result<T> {
                let tok = fields.next().ok_or_else(|| parse_err(format!("missing {what} coordinate")))?;
                let v: f64 = tok.parse().map_err(|_| parse_err(format!("bad {what} coordinate {tok:?}")))?;
                Ok(T::lit(v))
            };
            let x = next("x")?;
            let y = next("y")?;
            if fields.next().is_some() {
                return Err(parse_err("expected exactly two columns".into()));
            }
            positions.push(Point::new(x, y));
        }
        Self::custom(positions)
    }

    /// Renders in the format accepted by [`NodeList::parse`].
    pub fn to_geometry_string(&self) -> String {
        let mut out = format!("# {} chain, N={}\n", self.kind.as_str(), self.len());
        for p in &self.positions {
            let _ = writeln!(
                out,
                "{} {}",
                crate::io::format_sig(p.x.as_f64(), 17),
                crate::io::format_sig(p.y.as_f64(), 17)
            );
        }
        out
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidChain(format!("need at least 2 nodes, got {n}")));
    }
    Ok(())
}

/// Direction of the external field in the chain plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOrientation<T> {
    chi: T,
}

impl<T: Scalar> FieldOrientation<T> {
    /// `chi` is the angle to the x axis, in `[0, pi]`.
    pub fn new(chi: T) -> Result<Self> {
        let slack = T::epsilon() * T::lit(4.0);
        if !(chi >= -slack && chi <= T::PI() + slack) {
            return Err(Error::InvalidOrientation(chi.as_f64()));
        }
        Ok(Self { chi })
    }

    /// Field along the chain axis.
    pub fn along_axis() -> Self {
        Self { chi: T::zero() }
    }

    /// Angle at which `3 cos^2 chi = 1`.
    pub fn magic() -> Self {
        Self { chi: (T::one() / T::lit(3.0).sqrt()).acos() }
    }

    pub fn chi(&self) -> T {
        self.chi
    }

    /// Unit vector `(cos chi, sin chi)`.
    pub fn direction(&self) -> (T, T) {
        (self.chi.cos(), self.chi.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry<T> {
    pub r: T,
    pub cos_phi: T,
}
