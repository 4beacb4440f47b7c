//! Test functions `f` on Ω̄.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Term `coefficient · z^m · z̄^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub m: u32,
    pub n: u32,
    pub re: f64,
    pub im: f64,
}

impl PolyTerm {
    pub fn coefficient(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Samples on a rectangular grid, row-major in `y` (index `j * nx + i`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridData {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionSpec {
    /// Polynomial in `z` and `z̄`.
    Poly { terms: Vec<PolyTerm> },
    Exp,
    /// `1 / (z - a)`.
    Reciprocal { a_re: f64, a_im: f64 },
    /// Bilinear interpolation of sampled values.
    Grid(GridData),
}

impl FunctionSpec {
    pub fn poly(terms: &[(u32, u32, Complex64)]) -> Self {
        FunctionSpec::Poly {
            terms: terms
                .iter()
                .map(|&(m, n, c)| PolyTerm { m, n, re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn monomial(m: u32) -> Self {
        Self::poly(&[(m, 0, Complex64::new(1.0, 0.0))])
    }

    pub fn conj_z() -> Self {
        Self::poly(&[(0, 1, Complex64::new(1.0, 0.0))])
    }

    pub fn reciprocal(a: Complex64) -> Self {
        FunctionSpec::Reciprocal { a_re: a.re, a_im: a.im }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: FunctionSpec = serde_json::from_str(text)?;
        f.check()?;
        Ok(f)
    }

    pub fn check(&self) -> Result<()> {
        if let FunctionSpec::Grid(g) = self {
            if g.nx < 2 || g.ny < 2 {
                return Err(Error::InvalidFunction("grid needs nx, ny ≥ 2".into()));
            }
            if g.re.len() != g.nx * g.ny || g.im.len() != g.nx * g.ny {
                return Err(Error::InvalidFunction(format!(
                    "grid expects {} values",
                    g.nx * g.ny
                )));
            }
            if !(g.x_max > g.x_min && g.y_max > g.y_min) {
                return Err(Error::InvalidFunction("empty grid extent".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            FunctionSpec::Poly { terms } => {
                let zb = z.conj();
                Ok(terms
                    .iter()
                    .map(|t| t.coefficient() * z.powu(t.m) * zb.powu(t.n))
                    .sum())
            }
            FunctionSpec::Exp => Ok(z.exp()),
            FunctionSpec::Reciprocal { a_re, a_im } => {
                Ok(Complex64::new(1.0, 0.0) / (z - Complex64::new(*a_re, *a_im)))
            }
            FunctionSpec::Grid(g) => g.eval(z),
        }
    }
}

impl GridData {
    /// Samples `f` on the grid.
    pub fn tabulate(
        f: impl Fn(Complex64) -> Complex64,
        extent: [f64; 4],
        nx: usize,
        ny: usize,
    ) -> Self {
        let [x_min, x_max, y_min, y_max] = extent;
        let mut re = Vec::with_capacity(nx * ny);
        let mut im = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = y_min + (y_max - y_min) * j as f64 / (ny - 1) as f64;
            for i in 0..nx {
                let x = x_min + (x_max - x_min) * i as f64 / (nx - 1) as f64;
                let v = f(Complex64::new(x, y));
                re.push(v.re);
                im.push(v.im);
            }
        }
        GridData { x_min, x_max, y_min, y_max, nx, ny, re, im }
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let eps = 1e-12 * (self.x_max - self.x_min).max(self.y_max - self.y_min);
        if z.re < self.x_min - eps
            || z.re > self.x_max + eps
            || z.im < self.y_min - eps
            || z.im > self.y_max + eps
            || !z.re.is_finite()
            || !z.im.is_finite()
        {
            return Err(Error::GridCoverage { re: z.re, im: z.im });
        }
        let fx = ((z.re - self.x_min) / (self.x_max - self.x_min) * (self.nx - 1) as f64)
            .clamp(0.0, (self.nx - 1) as f64);
        let fy = ((z.im - self.y_min) / (self.y_max - self.y_min) * (self.ny - 1) as f64)
            .clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (u, v) = (fx - i as f64, fy - j as f64);
        let at = |i: usize, j: usize| {
            let k = j * self.nx + i;
            Complex64::new(self.re[k], self.im[k])
        };
        Ok(at(i, j) * ((1.0 - u) * (1.0 - v))
            + at(i + 1, j) * (u * (1.0 - v))
            + at(i, j + 1) * ((1.0 - u) * v)
            + at(i + 1, j + 1) * (u * v))
    }
}
