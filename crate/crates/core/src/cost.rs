//! Cost functions and modulus-of-continuity estimation.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::space::{Point, ProductMetric};
use std::fmt;
use std::sync::Arc;

#[derive(Clone)]
enum CostKind {
    /// `|x - y|^p` for scalar points.
    Power(f64),
    /// `(x - y)^2` for scalar points.
    Quadratic,
    /// 0 on the diagonal `x = y`, 1 elsewhere (lower semicontinuous).
    DiagonalIndicator,
    /// `(x - y)^2 (x - 1/2)^2 (y - 1/2)^2`: quadratic cost pinched to zero
    /// along the two lines x = 1/2 and y = 1/2.
    Pinched,
    /// `(x - y)^2 (1 - x - y)^2`: vanishes on the diagonal and antidiagonal.
    AntiDiagonal,
    /// 2x2 table on the unit square, looked up by thresholding both
    /// coordinates at 1/2. Lets config files express tiny tabular instances.
    Table2([f64; 4]),
    /// Arbitrary user callback.
    Callback(Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>),
}

/// A cost `c(x, y)` with an optional declared Lipschitz constant with respect
/// to the sup product metric. The constant, when present, certifies the upper
/// bound `omega_c(h) <= L * h` on the modulus of continuity; the sampled
/// estimate alone never certifies anything.
#[derive(Clone)]
pub struct CostFunction {
    kind: CostKind,
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.kind {
            CostKind::Power(p) => format!("power:{p}"),
            CostKind::Quadratic => "quadratic".into(),
            CostKind::DiagonalIndicator => "ex33-diagonal".into(),
            CostKind::Pinched => "ex34-pinched".into(),
            CostKind::AntiDiagonal => "ex45-antidiag".into(),
            CostKind::Table2(t) => format!("table2:{},{},{},{}", t[0], t[1], t[2], t[3]),
            CostKind::Callback(_) => "callback".into(),
        };
        write!(f, "CostFunction({name}, L={:?})", self.lipschitz)
    }
}

impl CostFunction {
    pub fn quadratic() -> Self {
        CostFunction { kind: CostKind::Quadratic, lipschitz: None }
    }

    pub fn power(p: f64) -> Self {
        CostFunction { kind: CostKind::Power(p), lipschitz: None }
    }

    pub fn diagonal_indicator() -> Self {
        CostFunction { kind: CostKind::DiagonalIndicator, lipschitz: None }
    }

    pub fn pinched() -> Self {
        CostFunction { kind: CostKind::Pinched, lipschitz: None }
    }

    pub fn antidiagonal() -> Self {
        CostFunction { kind: CostKind::AntiDiagonal, lipschitz: None }
    }

    pub fn table2(values: [f64; 4]) -> Self {
        CostFunction { kind: CostKind::Table2(values), lipschitz: None }
    }

    pub fn callback(f: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static) -> Self {
        CostFunction { kind: CostKind::Callback(Arc::new(f)), lipschitz: None }
    }

    /// `d(x, y)^p` for an arbitrary metric oracle; used to turn Wasserstein
    /// distances into transport solves.
    pub fn metric_power(metric: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static, p: f64) -> Self {
        CostFunction::callback(move |x, y| metric(x, y).powf(p))
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    /// Look a builtin cost up by registry name: `quadratic`, `power:p`,
    /// `ex33-diagonal`, `ex34-pinched`, `ex45-antidiag`.
    pub fn from_name(name: &str) -> Result<Self> {
        if let Some(p) = name.strip_prefix("power:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::UnknownName(name.to_string()))?;
            return Ok(CostFunction::power(p));
        }
        if let Some(t) = name.strip_prefix("table2:") {
            let vals: Vec<f64> = t
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::UnknownName(name.to_string()))?;
            if vals.len() != 4 {
                return Err(Error::UnknownName(name.to_string()));
            }
            return Ok(CostFunction::table2([vals[0], vals[1], vals[2], vals[3]]));
        }
        match name {
            "quadratic" => Ok(CostFunction::quadratic()),
            "ex33-diagonal" => Ok(CostFunction::diagonal_indicator()),
            "ex34-pinched" => Ok(CostFunction::pinched()),
            "ex45-antidiag" => Ok(CostFunction::antidiagonal()),
            _ => Err(Error::UnknownName(name.to_string())),
        }
    }

    pub fn evaluate(&self, x: &Point, y: &Point) -> f64 {
        match &self.kind {
            CostKind::Power(p) => {
                let (x, y) = (x.scalar().unwrap(), y.scalar().unwrap());
                (x - y).abs().powf(*p)
            }
            CostKind::Quadratic => {
                let (x, y) = (x.scalar().unwrap(), y.scalar().unwrap());
                (x - y) * (x - y)
            }
            CostKind::DiagonalIndicator => {
                let (x, y) = (x.scalar().unwrap(), y.scalar().unwrap());
                if x == y {
                    0.0
                } else {
                    1.0
                }
            }
            CostKind::Pinched => {
                let (x, y) = (x.scalar().unwrap(), y.scalar().unwrap());
                let d = x - y;
                d * d * (x - 0.5) * (x - 0.5) * (y - 0.5) * (y - 0.5)
            }
            CostKind::AntiDiagonal => {
                let (x, y) = (x.scalar().unwrap(), y.scalar().unwrap());
                let d = x - y;
                let s = 1.0 - x - y;
                d * d * s * s
            }
            CostKind::Table2(t) => {
                let (x, y) = (x.scalar().unwrap(), y.scalar().unwrap());
                let i = usize::from(x >= 0.5);
                let j = usize::from(y >= 0.5);
                t[2 * i + j]
            }
            CostKind::Callback(f) => f(x, y),
        }
    }
}

/// Result of [`estimate_modulus`]: a sampled lower estimate of `omega_c(h)`
/// and, when a Lipschitz constant is declared, the certified upper bound
/// `L * h`.
#[derive(Clone, Copy, Debug)]
pub struct ModulusEstimate {
    pub sampled_lower: f64,
    pub upper: Option<f64>,
}

/// Estimate the modulus of continuity `omega_c(h)`: the max of
/// `|c(z1) - c(z2)|` over pairs at product distance at most `h`.
///
/// The sampled value is always a lower estimate. When the cost declares a
/// Lipschitz constant `L`, the pair also carries the upper bound `L * h`.
///
/// Besides uniform draws in the h-ball, each step also tries the projection
/// of `z1` onto the coordinate diagonal (when both factors are intervals and
/// the midpoint is admissible). Transport costs are routinely extremal or
/// even discontinuous along `x = y`, and a continuous sampler alone would
/// miss a measure-zero discontinuity set no matter how many draws it takes.
pub fn estimate_modulus(
    c: &CostFunction,
    product: &ProductMetric,
    h: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ModulusEstimate> {
    if h < 0.0 {
        return Err(Error::invalid("modulus radius h must be nonnegative"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let mut rng = Rng::new(seed);
    let mut best = 0.0f64;
    let mut probe = |c1: f64, z2: &(Point, Point)| -> Result<()> {
        let c2 = c.evaluate(&z2.0, &z2.1);
        if !c1.is_finite() || !c2.is_finite() {
            return Err(Error::invalid("cost evaluated to a non-finite value"));
        }
        best = best.max((c1 - c2).abs());
        Ok(())
    };
    for _ in 0..n_samples {
        let z1 = product.sample(&mut rng);
        let c1 = c.evaluate(&z1.0, &z1.1);
        let z2 = product.sample_near(&z1, h, &mut rng);
        debug_assert!(product.distance(&z1, &z2) <= h + 1e-12);
        probe(c1, &z2)?;
        if let (Point::Scalar(x), Point::Scalar(y)) = (&z1.0, &z1.1) {
            if (x - y).abs() <= 2.0 * h {
                let m = 0.5 * (x + y);
                let snap = (Point::Scalar(m), Point::Scalar(m));
                if product.x.contains(&snap.0) && product.y.contains(&snap.1) {
                    probe(c1, &snap)?;
                }
            }
        }
    }
    Ok(ModulusEstimate {
        sampled_lower: best,
        upper: c.lipschitz.map(|l| l * h),
    })
}

/// Grid-maximized Lipschitz bound of the cost with respect to the sup product
/// metric: the largest difference quotient `|c(z1) - c(z2)| / d(z1, z2)` over
/// all pairs of an `n`-per-axis grid. Converges to the true constant from
/// below as the grid refines.
pub fn grid_lipschitz(c: &CostFunction, product: &ProductMetric, n: usize) -> Result<f64> {
    let grid_axis = |s: &crate::space::CompactSpace| -> Result<Vec<Point>> {
        match s {
            crate::space::CompactSpace::Interval { lo, hi } => Ok((0..=n)
                .map(|i| Point::Scalar(lo + (hi - lo) * i as f64 / n as f64))
                .collect()),
            _ => Err(Error::Unsupported {
                expected: "interval factors".into(),
                got: format!("{s:?}"),
            }),
        }
    };
    let xs = grid_axis(&product.x)?;
    let ys = grid_axis(&product.y)?;
    let mut pts: Vec<(Point, Point)> = Vec::with_capacity(xs.len() * ys.len());
    for x in &xs {
        for y in &ys {
            pts.push((x.clone(), y.clone()));
        }
    }
    let vals: Vec<f64> = pts.iter().map(|z| c.evaluate(&z.0, &z.1)).collect();
    let mut best = 0.0f64;
    // Difference quotients against axis-aligned and diagonal neighbors. The
    // diagonal moves matter: under the sup metric both coordinates may move
    // the full distance at once, which is where costs like (x-y)^2 attain
    // their constant.
    let nx = xs.len();
    let ny = ys.len();
    let mut probe = |a: usize, b: usize| {
        let d = product.distance(&pts[a], &pts[b]);
        if d > 0.0 {
            best = best.max((vals[a] - vals[b]).abs() / d);
        }
    };
    for stride in [1usize, 2, 4, nx / 2, nx - 1] {
        if stride == 0 || stride >= nx {
            continue;
        }
        for i in 0..nx {
            for j in 0..ny {
                let here = i * ny + j;
                if i + stride < nx {
                    probe(here, (i + stride) * ny + j);
                }
                if j + stride < ny {
                    probe(here, i * ny + j + stride);
                }
                if i + stride < nx && j + stride < ny {
                    probe(here, (i + stride) * ny + j + stride);
                }
                if i + stride < nx && j >= stride {
                    probe(here, (i + stride) * ny + j - stride);
                }
            }
        }
    }
    Ok(best)
}

/// Exhaustive grid search for the pair at product distance at most `h` with
/// the largest cost difference. Returns `(z1, z2, |c(z1) - c(z2)|)`. This is
/// the dense-grid counterpart of [`estimate_modulus`] and the ingredient of
/// the two-point sharpness construction.
pub fn grid_modulus_pair(
    c: &CostFunction,
    product: &ProductMetric,
    h: f64,
    n: usize,
) -> Result<((Point, Point), (Point, Point), f64)> {
    let axis = |s: &crate::space::CompactSpace| -> Result<Vec<f64>> {
        match s {
            crate::space::CompactSpace::Interval { lo, hi } => Ok((0..=n)
                .map(|i| lo + (hi - lo) * i as f64 / n as f64)
                .collect()),
            _ => Err(Error::Unsupported {
                expected: "interval factors".into(),
                got: format!("{s:?}"),
            }),
        }
    };
    let xs = axis(&product.x)?;
    let ys = axis(&product.y)?;
    let mut best = 0.0f64;
    let mut arg = (
        (Point::Scalar(xs[0]), Point::Scalar(ys[0])),
        (Point::Scalar(xs[0]), Point::Scalar(ys[0])),
    );
    // For each grid point, compare against the extreme admissible corners of
    // its h-ball plus the point itself; for the costs in the registry the max
    // difference is attained at ball corners.
    for &x1 in &xs {
        for &y1 in &ys {
            let z1 = (Point::Scalar(x1), Point::Scalar(y1));
            let c1 = c.evaluate(&z1.0, &z1.1);
            let (xlo, xhi) = match product.x {
                crate::space::CompactSpace::Interval { lo, hi } => (lo, hi),
                _ => unreachable!(),
            };
            let (ylo, yhi) = match product.y {
                crate::space::CompactSpace::Interval { lo, hi } => (lo, hi),
                _ => unreachable!(),
            };
            for dx in [-h, 0.0, h] {
                for dy in [-h, 0.0, h] {
                    let x2 = (x1 + dx).clamp(xlo, xhi);
                    let y2 = (y1 + dy).clamp(ylo, yhi);
                    let z2 = (Point::Scalar(x2), Point::Scalar(y2));
                    let diff = (c1 - c.evaluate(&z2.0, &z2.1)).abs();
                    if diff > best {
                        best = diff;
                        arg = (z1.clone(), z2);
                    }
                }
            }
        }
    }
    Ok((arg.0, arg.1, best))
}
